#include "putl/averaging.hpp"
#include "putl/error.hpp"
#include "putl/folds.hpp"
#include "putl/likelihoods.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

using Catch::Approx;
using namespace putl;

namespace {

DomainDataset pu_with_counts(long n_labeled, long n_unlabeled, double pi1, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0xa1});
  Eigen::MatrixXd x = testing::normal_matrix(n_labeled + n_unlabeled, 2, rng);
  std::vector<int> z(static_cast<std::size_t>(n_labeled + n_unlabeled), 0);
  std::fill(z.begin(), z.begin() + n_labeled, 1);
  return DomainDataset::pu("target", std::move(x), std::move(z), pi1);
}

DomainDataset binary_from(const Eigen::VectorXd& beta, long n, Rng& rng, std::string id) {
  const Eigen::MatrixXd x = testing::normal_matrix(n, beta.size(), rng);
  return DomainDataset::binary(std::move(id), x, testing::logistic_labels(x, beta, rng), 0.5);
}

struct Fixture {
  DomainDataset target;
  std::vector<DomainDataset> sources;
  FoldPlan folds;
  CandidateBank bank;
};

// Target PU from beta, sources binary from the given coefficient vectors.
Fixture fixture(const Eigen::VectorXd& beta, long n_labeled, long n_unlabeled,
                const std::vector<Eigen::VectorXd>& source_betas, long source_n, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0xf1});
  DomainDataset target = testing::pu_dataset(n_labeled, n_unlabeled, beta, rng);
  std::vector<DomainDataset> sources;
  for (std::size_t m = 0; m < source_betas.size(); ++m) {
    sources.push_back(binary_from(source_betas[m], source_n, rng, "m" + std::to_string(m + 1)));
  }
  FoldPlan folds = make_folds(target, 5, seed);
  BankOptions opts;
  opts.fit.seed = seed;
  CandidateBank bank = build_bank(target, sources, folds, opts);
  return {std::move(target), std::move(sources), std::move(folds), std::move(bank)};
}

// Held-out PU NLL of the fold fits with b_full, written without the library's
// objective classes.
double pooled_heldout_nll(const Fixture& f) {
  const auto& z = f.target.indicator();
  const double b = f.bank.b_full;
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.target.rows(); ++i) {
    const int k = f.folds.assignment[static_cast<std::size_t>(i)];
    const double eta = f.target.features().row(i).dot(f.bank.target_folds[static_cast<std::size_t>(k)].beta.beta);
    const double e = std::exp(eta);
    const double denom = 1.0 + (1.0 + b) * e;
    total -= z[static_cast<std::size_t>(i)] ? std::log(b * e / denom) : std::log((1.0 + e) / denom);
  }
  return total / static_cast<double>(f.target.rows());
}

}  // namespace

TEST_CASE("stratified folds split each stratum evenly", "[folds]") {
  const auto even = make_folds(pu_with_counts(10, 20, 0.5, 1), 5, 7);
  for (int k = 0; k < 5; ++k) {
    CHECK(even.count(k, 1) == 2);
    CHECK(even.count(k, 0) == 4);
  }
  const auto odd = make_folds(pu_with_counts(11, 20, 0.5, 1), 5, 7);
  std::vector<long> sizes;
  for (int k = 0; k < 5; ++k) sizes.push_back(odd.count(k, 1));
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<long>{2, 2, 2, 2, 3});
  const auto again = make_folds(pu_with_counts(11, 20, 0.5, 1), 5, 7);
  CHECK(again.assignment == odd.assignment);
  const auto other = make_folds(pu_with_counts(11, 20, 0.5, 1), 5, 8);
  CHECK(other.assignment != odd.assignment);
  for (int k = 0; k < 5; ++k) sizes[static_cast<std::size_t>(k)] = other.count(k, 1);
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<long>{2, 2, 2, 2, 3});
  CHECK_THROWS_AS(make_folds(pu_with_counts(4, 20, 0.5, 1), 5, 1), DataError);
  CHECK_THROWS_AS(make_folds(pu_with_counts(10, 20, 0.5, 1), 1, 1), DataError);
}

TEST_CASE("fold sizes differ by at most one per stratum", "[folds][property]") {
  Rng rng = make_rng(3, {1});
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<long> nl(5, 40), nu(5, 90);
    std::uniform_int_distribution<int> kk(2, 5);
    const long a = nl(rng), u = nu(rng);
    const int k = kk(rng);
    const auto plan = make_folds(pu_with_counts(a, u, 0.3, trial), k, trial);
    for (int s : {0, 1}) {
      long lo = 1 << 30, hi = 0;
      for (int f = 0; f < k; ++f) {
        lo = std::min(lo, plan.count(f, s));
        hi = std::max(hi, plan.count(f, s));
      }
      CHECK(hi - lo <= 1);
    }
    std::size_t covered = 0;
    for (int f = 0; f < k; ++f) covered += plan.held_out(f).size();
    CHECK(covered == plan.assignment.size());
  }
}

TEST_CASE("bank structure", "[averaging]") {
  const Eigen::Vector2d beta(1.0, -1.0);
  const Fixture none = fixture(beta, 40, 80, {}, 0, 1);
  CHECK(none.bank.candidates() == 1);
  CHECK(none.bank.target_folds.size() == 5);

  const Fixture dup = fixture(beta, 40, 80, {beta}, 300, 2);
  std::vector<DomainDataset> twice{dup.sources[0], dup.sources[0].with_id("copy")};
  BankOptions opts;
  opts.fit.seed = 2;
  const CandidateBank b2 = build_bank(dup.target, twice, dup.folds, opts);
  CHECK(b2.sources[0].beta.beta == b2.sources[1].beta.beta);
  CHECK(b2.sources[0].objective == b2.sources[1].objective);

  // p_L = 1/3 with divisible strata: every complement keeps the full ratio.
  const DomainDataset t = pu_with_counts(10, 20, 0.5, 3);
  const auto folds = make_folds(t, 5, 3);
  const CandidateBank b3 = build_bank(t, {}, folds, BankOptions{});
  for (double b : b3.b_folds) CHECK(b == b3.b_full);

  Rng rng = make_rng(4, {1});
  std::vector<DomainDataset> wrong{binary_from(Eigen::Vector3d(1, 1, 1), 100, rng, "wide")};
  CHECK_THROWS_AS(build_bank(dup.target, wrong, dup.folds, opts), DataError);
}

TEST_CASE("CV at the target vertex equals the pooled held-out NLL", "[averaging][oracle]") {
  const Fixture f = fixture(Eigen::Vector2d(1.0, -0.5), 50, 150, {Eigen::Vector2d(0.5, 0.5)}, 300, 5);
  const Eigen::Vector2d e0(1.0, 0.0);
  const CvValue cv = cv_criterion(e0, f.bank, f.target, f.folds);
  CHECK(std::abs(cv.value - pooled_heldout_nll(f)) < 1e-10);
}

TEST_CASE("CV is flat when all candidates agree", "[averaging]") {
  Fixture f = fixture(Eigen::Vector2d(1.0, -0.5), 50, 150, {Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0, 1)}, 200, 6);
  const Eigen::VectorXd common = f.bank.target_full.beta.beta;
  for (auto& r : f.bank.target_folds) r.beta.beta = common;
  for (auto& r : f.bank.sources) r.beta.beta = common;
  Rng rng = make_rng(6, {2});
  const double ref = cv_criterion(Eigen::Vector3d(1, 0, 0), f.bank, f.target, f.folds).value;
  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXd w = testing::random_simplex(3, rng);
    const CvValue cv = cv_criterion(w, f.bank, f.target, f.folds);
    CHECK(cv.value == Approx(ref).epsilon(1e-13));
    CHECK(cv.grad[0] == Approx(cv.grad[1]).epsilon(1e-12));
    CHECK(cv.grad[1] == Approx(cv.grad[2]).epsilon(1e-12));
  }
}

TEST_CASE("CV gradient matches finite differences", "[averaging][oracle]") {
  const Fixture f = fixture(Eigen::Vector3d(1.0, -0.5, 0.5), 50, 150,
                            {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 1), Eigen::Vector3d(-1, 0, 1)}, 200, 7);
  const SimplexObjective obj = cv_objective(f.bank, f.target, f.folds);
  Rng rng = make_rng(7, {3});
  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXd w = testing::random_simplex(4, rng);
    const Eigen::VectorXd fd = testing::fd_gradient([&](const Eigen::VectorXd& v) { return obj.value(v); }, w, 1e-6);
    const CvValue cv = cv_criterion(w, f.bank, f.target, f.folds);
    CHECK(testing::rel_error(cv.grad, fd) < 1e-6);
    Eigen::VectorXd g;
    CHECK(obj.evaluate(w, g) == Approx(cv.value).epsilon(1e-14));
  }
}

TEST_CASE("weights with a single candidate", "[averaging]") {
  const Fixture f = fixture(Eigen::Vector2d(1.0, -1.0), 40, 80, {}, 0, 8);
  const WeightVector w = solve_weights(f.bank, f.target, f.folds);
  REQUIRE(w.w.size() == 1);
  CHECK(w.w[0] == 1.0);
  CHECK(w.cv_value == cv_criterion(w.w, f.bank, f.target, f.folds).value);
}

TEST_CASE("duplicated candidates split evenly without changing CV", "[averaging]") {
  const Eigen::Vector2d beta(1.0, -1.0);
  Fixture f = fixture(beta, 40, 120, {beta}, 400, 9);
  const WeightVector single = solve_weights(f.bank, f.target, f.folds);
  CandidateBank twice = f.bank;
  twice.sources.push_back(twice.sources[0]);
  twice.source_ids.push_back("copy");
  twice.source_lambdas.push_back(0.0);
  const WeightVector w = solve_weights(twice, f.target, f.folds);
  CHECK(w.cv_value == Approx(single.cv_value).margin(1e-10));
  CHECK(w.w[1] + w.w[2] == Approx(single.w[1]).margin(1e-6));
  CHECK(std::abs(w.w[1] - w.w[2]) < 1e-8);
}

TEST_CASE("good source outweighs a sign-flipped source", "[averaging][oracle]") {
  Eigen::VectorXd beta(5);
  beta << 1.0, 1.0, 1.0, 0.0, 0.0;
  std::vector<double> good;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Fixture f = fixture(beta, 120, 280, {beta, -beta}, 4000, 100 + seed);
    const WeightVector w = solve_weights(f.bank, f.target, f.folds);
    good.push_back(w.w[1]);
  }
  std::sort(good.begin(), good.end());
  CHECK(0.5 * (good[9] + good[10]) >= 0.8);
}

TEST_CASE("weights are feasible and dominate every vertex", "[averaging][property]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = make_rng(seed, {0xbb});
    std::vector<Eigen::VectorXd> sources;
    for (int m = 0; m < 3; ++m) sources.push_back(testing::normal_vector(3, rng));
    const Fixture f = fixture(testing::normal_vector(3, rng), 30, 90, sources, 150, 200 + seed);
    const WeightVector w = solve_weights(f.bank, f.target, f.folds);
    CHECK(std::abs(w.w.sum() - 1.0) <= 1e-10);
    CHECK(w.w.minCoeff() >= 0.0);
    CHECK(w.cv_value <= *std::min_element(w.vertex_values.begin(), w.vertex_values.end()) + 1e-10);
    CHECK(std::abs(w.cv_value - cv_criterion(w.w, f.bank, f.target, f.folds).value) <= 1e-10);
    const auto m = static_cast<Eigen::Index>(f.bank.candidates());
    CHECK(w.cv_value <= cv_criterion(Eigen::VectorXd::Constant(m, 1.0 / m), f.bank, f.target, f.folds).value + 1e-10);
  }
}

TEST_CASE("permuting sources permutes the weights", "[averaging][property]") {
  Rng rng = make_rng(31, {1});
  const Eigen::Vector3d beta(1.0, -1.0, 0.5);
  const Fixture f = fixture(beta, 40, 100, {beta, Eigen::Vector3d(0, 1, 1), Eigen::Vector3d(1, 0.5, 0)}, 300, 31);
  CandidateBank perm = f.bank;
  std::reverse(perm.sources.begin(), perm.sources.end());
  std::reverse(perm.source_ids.begin(), perm.source_ids.end());
  const WeightVector a = solve_weights(f.bank, f.target, f.folds);
  const WeightVector b = solve_weights(perm, f.target, f.folds);
  CHECK(a.w[0] == Approx(b.w[0]).margin(1e-6));
  for (int m = 1; m <= 3; ++m) CHECK(a.w[m] == Approx(b.w[4 - m]).margin(1e-6));
  CHECK(a.cv_value == Approx(b.cv_value).margin(1e-10));
}

TEST_CASE("failed fold refits drop the target from the simplex", "[averaging]") {
  Fixture f = fixture(Eigen::Vector2d(1.0, -1.0), 40, 80, {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)}, 200, 32);
  f.bank.target_folds_ok = false;
  const WeightVector w = solve_weights(f.bank, f.target, f.folds);
  CHECK(w.target_excluded);
  CHECK(w.w[0] == 0.0);
  CHECK(w.w.sum() == Approx(1.0).margin(1e-12));
}

TEST_CASE("simplex projection", "[averaging]") {
  Rng rng = make_rng(33, {1});
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd v = testing::normal_vector(6, rng, 3.0);
    const Eigen::VectorXd p = project_simplex(v);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    CHECK(p.minCoeff() >= 0.0);
    // Projection optimality: (v - p) . (q - p) <= 0 for any simplex point q.
    const Eigen::VectorXd q = testing::random_simplex(6, rng);
    CHECK((v - p).dot(q - p) <= 1e-10);
  }
  const Eigen::Vector3d inside(0.2, 0.3, 0.5);
  CHECK((project_simplex(inside) - inside).norm() < 1e-15);
}

TEST_CASE("averaged coefficients", "[averaging]") {
  Fixture f = fixture(Eigen::Vector2d(1.0, -1.0), 40, 80, {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)}, 200, 34);
  for (int m = 0; m < 3; ++m) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
    e[m] = 1.0;
    const Eigen::VectorXd want = m == 0 ? f.bank.target_full.beta.beta : f.bank.sources[static_cast<std::size_t>(m - 1)].beta.beta;
    CHECK(averaged_coefficients(e, f.bank).beta == want);
  }
  Rng rng = make_rng(34, {1});
  const Eigen::VectorXd w = testing::random_simplex(3, rng);
  const Eigen::VectorXd direct = w[0] * f.bank.target_full.beta.beta + w[1] * f.bank.sources[0].beta.beta +
                                 w[2] * f.bank.sources[1].beta.beta;
  CHECK((averaged_coefficients(w, f.bank).beta - direct).lpNorm<Eigen::Infinity>() <= 1e-14);
  double max_norm = f.bank.target_full.beta.beta.norm();
  for (const auto& s : f.bank.sources) max_norm = std::max(max_norm, s.beta.beta.norm());
  CHECK(averaged_coefficients(w, f.bank).beta.norm() <= max_norm + 1e-12);

  CandidateBank sym = f.bank;
  sym.sources.resize(1);
  sym.source_ids.resize(1);
  sym.sources[0].beta.beta = -sym.target_full.beta.beta;
  CHECK(averaged_coefficients(Eigen::Vector2d(0.5, 0.5), sym).beta.isZero(0.0));
  CHECK_THROWS_AS(averaged_coefficients(Eigen::Vector2d(0.5, 0.5), f.bank), DataError);
}

TEST_CASE("predicted probabilities", "[averaging]") {
  const CoefficientVector zero{Eigen::VectorXd::Zero(3), false};
  CHECK(predict_proba(zero, Eigen::Vector3d(1.0, -2.0, 3.0)) == 0.5);
  const CoefficientVector beta{Eigen::Vector3d(50.0, 0.0, 0.0), false};
  const double hi = predict_proba(beta, Eigen::Vector3d(1.0, 0.0, 0.0));
  CHECK(hi < 1.0);
  CHECK(hi == std::nextafter(1.0, 0.0));
  const double lo = predict_proba(beta, Eigen::Vector3d(-100.0, 0.0, 0.0));
  CHECK(lo > 0.0);
  const CoefficientVector pos{Eigen::Vector3d(0.5, 1.0, 2.0), false};
  double prev = 0.0;
  for (double t = -5.0; t <= 5.0; t += 0.5) {
    const double p = predict_proba(pos, Eigen::Vector3d(0.3, t, -0.2));
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("source fits never depend on target rows", "[averaging][privacy]") {
  const Eigen::Vector2d beta(1.0, -0.5);
  const Fixture f = fixture(beta, 40, 100, {beta, Eigen::Vector2d(-1, 1)}, 300, 35);
  // Poison every target covariate and relabel; sources stay as they were.
  Eigen::MatrixXd poisoned = Eigen::MatrixXd::Constant(f.target.rows(), 2, 1e3);
  std::vector<int> z(static_cast<std::size_t>(f.target.rows()), 0);
  for (std::size_t i = 0; i < z.size(); i += 2) z[i] = 1;
  const auto target = DomainDataset::pu("target", poisoned.array() * Eigen::ArrayXXd::Random(poisoned.rows(), 2), z, 0.3);
  BankOptions opts;
  opts.fit.seed = 35;
  const auto folds = make_folds(target, 5, 35);
  CandidateBank poisoned_bank;
  try {
    poisoned_bank = build_bank(target, f.sources, folds, opts);
  } catch (const NumericalError&) {
    // A failed target fit must not stop the comparison; refit sources alone.
    for (const auto& s : f.sources) poisoned_bank.sources.push_back(fit_source(s, opts));
  }
  REQUIRE(poisoned_bank.sources.size() == f.bank.sources.size());
  for (std::size_t m = 0; m < f.bank.sources.size(); ++m) {
    CHECK(poisoned_bank.sources[m].beta.beta == f.bank.sources[m].beta.beta);
    CHECK(poisoned_bank.sources[m].objective == f.bank.sources[m].objective);
  }
}

TEST_CASE("CV tracks the out-of-sample NLL of the fold fits", "[averaging][statistical]") {
  // Fixed design: p = 2, target PU with 60 labeled and 140 unlabeled rows,
  // one binary source of 300 rows, w = (0.6, 0.4).
  const Eigen::Vector2d beta(1.0, -1.0);
  Rng pilot_rng = make_rng(41, {0});
  const Eigen::MatrixXd pilot = testing::normal_matrix(200000, 2, pilot_rng);
  const auto py = testing::logistic_labels(pilot, beta, pilot_rng);
  const double pi1 = static_cast<double>(std::count(py.begin(), py.end(), 1)) / static_cast<double>(py.size());
  const auto draw_pu = [&](long nl, long nu, Rng& rng) {
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<int> z;
    std::uniform_real_distribution<double> u;
    while (static_cast<long>(rows.size()) < nl) {
      const Eigen::RowVectorXd x = testing::normal_vector(2, rng).transpose();
      if (u(rng) < sigmoid(x.dot(beta))) {
        rows.push_back(x);
        z.push_back(1);
      }
    }
    for (long k = 0; k < nu; ++k) {
      rows.push_back(testing::normal_vector(2, rng).transpose());
      z.push_back(0);
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 2);
    for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = rows[i];
    return DomainDataset::pu("t", std::move(x), std::move(z), pi1);
  };
  const Eigen::Vector2d w(0.6, 0.4);
  std::vector<double> diffs;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    Rng rng = make_rng(rep, {42});
    const DomainDataset target = draw_pu(60, 140, rng);
    const std::vector<DomainDataset> sources{binary_from(Eigen::Vector2d(0.8, -0.8), 300, rng, "m1")};
    const FoldPlan folds = make_folds(target, 5, rep);
    BankOptions opts;
    opts.fit.seed = rep;
    opts.fit.n_starts = 1;
    const CandidateBank bank = build_bank(target, sources, folds, opts);
    const double cv = cv_criterion(w, bank, target, folds).value;
    // Fresh rows from the same design, scored with the same b.
    const DomainDataset fresh = draw_pu(1500, 3500, rng);
    LinkConstants c;
    c.b = bank.b_full;
    const Objective oos(fresh, c);
    double mean_oos = 0.0;
    for (std::size_t k = 0; k < bank.target_folds.size(); ++k) {
      const Eigen::VectorXd bk = w[0] * bank.target_folds[k].beta.beta + w[1] * bank.sources[0].beta.beta;
      mean_oos += oos.value(bk) * static_cast<double>(folds.held_out(static_cast<int>(k)).size());
    }
    mean_oos /= static_cast<double>(target.rows());
    diffs.push_back(cv - mean_oos);
  }
  const double n = static_cast<double>(diffs.size());
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n;
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  const double se = std::sqrt(var / (n - 1.0) / n);
  INFO("mean difference " << mean << ", standard error " << se);
  CHECK(std::abs(mean) <= 2.0 * se);
}
