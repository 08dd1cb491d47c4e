#include "putl/error.hpp"
#include "putl/estimation.hpp"
#include "putl/likelihoods.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

using Catch::Approx;
using namespace putl;

namespace {

bool nonincreasing(const std::vector<double>& trace) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace[k] > trace[k - 1] + 1e-12) return false;
  }
  return true;
}

DomainDataset with_intercept(const DomainDataset& d) {
  Eigen::MatrixXd x(d.rows(), d.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(d.cols()) = d.features();
  return d.with_features(std::move(x), true);
}

// PU instance with n = 200, p = 50 and five unit coefficients.
DomainDataset sparse_pu(std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x5a});
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(50);
  beta.head(5).setConstant(1.0);
  return testing::pu_dataset(60, 140, beta, rng);
}

}  // namespace

TEST_CASE("separable binary data does not converge", "[estimation]") {
  Eigen::MatrixXd x(2, 1);
  x << 1.0, -1.0;
  const auto d = DomainDataset::binary("sep", x, {1, 0}, 0.5);
  FitOptions opts;
  opts.n_starts = 1;
  const FitResult r = fit_mle(Objective(d), opts);
  CHECK_FALSE(r.converged);
  CHECK(std::isfinite(r.beta.beta[0]));
  CHECK(r.beta.beta[0] > 5.0);
  CHECK(nonincreasing(r.trace));
}

TEST_CASE("PU MLE matches a grid-search oracle", "[estimation][oracle]") {
  Rng rng = make_rng(21, {1});
  // n_L = 15, n_U = 45 and pi1 chosen so that b = 0.75.
  const double pi1 = 15.0 / (0.75 * 45.0);
  testing::PuSample s = testing::pu_sample(15, 45, Eigen::Vector2d(1.0, -0.5), rng);
  const auto d = DomainDataset::pu("pu", s.x, s.z, pi1);
  const Objective obj(d);
  REQUIRE(obj.constants().b == Approx(0.75).epsilon(1e-14));
  const FitResult fit = fit_mle(obj, FitOptions{});
  REQUIRE(fit.converged);
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector2d arg;
  for (int i = -300; i <= 300; ++i) {
    for (int j = -300; j <= 300; ++j) {
      const Eigen::Vector2d beta(i * 0.01, j * 0.01);
      const double v = obj.value(beta);
      if (v < best) {
        best = v;
        arg = beta;
      }
    }
  }
  INFO("fit " << fit.beta.beta.transpose() << " grid " << arg.transpose());
  CHECK(std::abs(fit.beta.beta[0] - arg[0]) <= 0.02);
  CHECK(std::abs(fit.beta.beta[1] - arg[1]) <= 0.02);
  CHECK(fit.objective <= best + 1e-12);
}

TEST_CASE("uninformative covariates give small binary coefficients", "[estimation][oracle]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = make_rng(seed, {22});
    const Eigen::MatrixXd x = testing::normal_matrix(5000, 3, rng);
    std::bernoulli_distribution coin(0.5);
    std::vector<int> y(5000);
    for (auto& v : y) v = coin(rng);
    const auto d = with_intercept(DomainDataset::binary("b", x, y, 0.5));
    const FitResult r = fit_mle(Objective(d), FitOptions{});
    CHECK(r.converged);
    CHECK(r.beta.beta.tail(3).norm() <= 0.1);
  }
}

TEST_CASE("fit invariants", "[estimation][property]") {
  Rng rng = make_rng(23, {1});
  const Eigen::Vector3d truth(1.0, -1.0, 0.5);
  const auto pu = testing::pu_dataset(40, 110, truth, rng);
  const Eigen::MatrixXd x = testing::normal_matrix(150, 3, rng);
  const auto bin = DomainDataset::binary("b", x, testing::logistic_labels(x, truth, rng), 0.5);
  FitOptions opts;
  opts.seed = 5;
  for (const DomainDataset* d : {&pu, &bin}) {
    const Objective obj(*d);
    const FitResult a = fit_mle(obj, opts);
    const FitResult b = fit_mle(obj, opts);
    CHECK(a.converged);
    CHECK(a.beta.beta == b.beta.beta);
    CHECK(a.objective == b.objective);
    CHECK(a.start_objectives == b.start_objectives);
    CHECK(a.objective <= obj.value(Eigen::VectorXd::Zero(3)));
    CHECK(obj.evaluate(a.beta.beta).grad.lpNorm<Eigen::Infinity>() <= opts.grad_tol);
    CHECK(nonincreasing(a.trace));
    CHECK(a.objective == *std::min_element(a.start_objectives.begin(), a.start_objectives.end()));
  }
  // Convex binary likelihood: every start lands on the same optimum.
  const FitResult r = fit_mle(Objective(bin), opts);
  for (double v : r.start_objectives) CHECK(std::abs(v - r.objective) <= 1e-6);
}

TEST_CASE("fit options are validated", "[estimation]") {
  FitOptions bad;
  bad.n_starts = 0;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = {};
  bad.grad_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = {};
  bad.max_iters = 0;
  CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("l1 with a huge penalty zeroes every penalized coordinate", "[estimation]") {
  Rng rng = make_rng(24, {1});
  const auto d = with_intercept(testing::pu_dataset(30, 70, Eigen::Vector3d(1.0, 0.0, -1.0), rng));
  const Objective obj(d);
  const double lmax = lambda_max(obj, FitOptions{});
  const FitResult r = fit_l1(obj, 2.0 * lmax, FitOptions{});
  CHECK(r.beta.beta.tail(3).isZero(0.0));
  CHECK(r.beta.beta[0] != 0.0);
  CHECK(l1_optimality_residual(obj, 2.0 * lmax, r.beta.beta) <= 1e-6);
}

TEST_CASE("l1 at zero penalty matches the MLE", "[estimation]") {
  Rng rng = make_rng(25, {1});
  const Eigen::MatrixXd x = testing::normal_matrix(50, 3, rng);
  const auto d = DomainDataset::binary("b", x, testing::logistic_labels(x, Eigen::Vector3d(0.8, -0.4, 0.2), rng), 0.5);
  const Objective obj(d);
  const FitResult mle = fit_mle(obj, FitOptions{});
  const FitResult l1 = fit_l1(obj, 0.0, FitOptions{});
  CHECK((mle.beta.beta - l1.beta.beta).lpNorm<Eigen::Infinity>() <= 1e-5);
}

TEST_CASE("l1 fits satisfy the subgradient optimality condition", "[estimation][property]") {
  const DomainDataset d = sparse_pu(3);
  const Objective obj(d);
  const double lmax = lambda_max(obj, FitOptions{});
  for (double frac : {0.5, 0.1, 0.02}) {
    const FitResult r = fit_l1(obj, frac * lmax, FitOptions{});
    CHECK(r.converged);
    CHECK(l1_optimality_residual(obj, frac * lmax, r.beta.beta) <= 1e-6);
  }
}

TEST_CASE("lambda selection rules", "[estimation]") {
  Rng rng = make_rng(26, {1});
  const auto d = testing::pu_dataset(30, 70, Eigen::Vector3d(1.0, 0.0, -1.0), rng);
  const Objective obj(d);
  const double lmax = lambda_max(obj, FitOptions{});
  const std::vector<double> single{lmax};
  CHECK(select_lambda(obj, single, 5, 1) == lmax);
  // Both values keep every coordinate at zero, so the scores tie exactly.
  const std::vector<double> tied{3.0 * lmax, 2.0 * lmax};
  const LambdaPath path = lambda_path(obj, tied, 5, 1);
  CHECK(path.scores[0] == Approx(path.scores[1]).margin(1e-12));
  CHECK(path.selected == 3.0 * lmax);
  const std::vector<double> ascending{lmax, 2.0 * lmax};
  CHECK_THROWS_AS(select_lambda(obj, ascending, 5, 1), DataError);
  const auto grid = lambda_grid(lmax);
  REQUIRE(grid.size() == 20);
  CHECK(grid.front() == Approx(lmax).epsilon(1e-14));
  CHECK(grid.back() == Approx(lmax * 1e-3).epsilon(1e-12));
}

TEST_CASE("cross-validated l1 recovers the sparse support", "[estimation][oracle]") {
  std::vector<int> hits;
  int interior = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DomainDataset d = sparse_pu(100 + seed);
    const Objective obj(d);
    FitOptions opts;
    opts.seed = seed;
    const auto grid = lambda_grid(lambda_max(obj, opts));
    const LambdaPath path = lambda_path(obj, grid, 5, seed, opts);
    const FitResult fit = fit_l1(obj, path.selected, opts);
    int found = 0;
    for (int j = 0; j < 5; ++j) found += fit.beta.beta[j] != 0.0;
    hits.push_back(found);
    interior += path.selected != grid.front() && path.selected != grid.back();
  }
  std::sort(hits.begin(), hits.end());
  CHECK(hits[hits.size() / 2] >= 3);
  CHECK(interior >= 7);
}
