#pragma once

#include "putl/dataset.hpp"
#include "putl/links.hpp"
#include "putl/rng.hpp"
#include "putl/simharness.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace testing {

inline Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, putl::Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = normal(rng);
  }
  return x;
}

inline Eigen::VectorXd normal_vector(Eigen::Index n, putl::Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline std::vector<int> logistic_labels(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                                        putl::Rng& rng) {
  std::uniform_real_distribution<double> u;
  const Eigen::VectorXd eta = x * beta;
  std::vector<int> y(static_cast<std::size_t>(eta.size()));
  for (Eigen::Index i = 0; i < eta.size(); ++i) y[static_cast<std::size_t>(i)] = u(rng) < putl::sigmoid(eta[i]);
  return y;
}

// Case-control PU sample: n_labeled positives labeled, then n_unlabeled rows
// drawn from the whole population, generated on the fly.
struct PuSample {
  Eigen::MatrixXd x;
  std::vector<int> z;
  std::vector<int> y;
  double pi1 = 0.0;
};

inline PuSample pu_sample(long n_labeled, long n_unlabeled, const Eigen::VectorXd& beta, putl::Rng& rng) {
  const Eigen::Index p = beta.size();
  // Population prior estimated from a large pilot draw.
  const Eigen::MatrixXd pilot = normal_matrix(20000, p, rng);
  const auto py = logistic_labels(pilot, beta, rng);
  PuSample s;
  s.pi1 = static_cast<double>(std::count(py.begin(), py.end(), 1)) / static_cast<double>(py.size());
  std::vector<Eigen::VectorXd> rows;
  std::uniform_real_distribution<double> u;
  while (static_cast<long>(rows.size()) < n_labeled) {
    const Eigen::VectorXd x = normal_vector(p, rng);
    if (u(rng) < putl::sigmoid(x.dot(beta))) {
      rows.push_back(x);
      s.z.push_back(1);
      s.y.push_back(1);
    }
  }
  for (long k = 0; k < n_unlabeled; ++k) {
    const Eigen::VectorXd x = normal_vector(p, rng);
    rows.push_back(x);
    s.z.push_back(0);
    s.y.push_back(u(rng) < putl::sigmoid(x.dot(beta)));
  }
  s.x.resize(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t i = 0; i < rows.size(); ++i) s.x.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return s;
}

inline putl::DomainDataset pu_dataset(long n_labeled, long n_unlabeled, const Eigen::VectorXd& beta,
                                      putl::Rng& rng, std::string id = "target") {
  PuSample s = pu_sample(n_labeled, n_unlabeled, beta, rng);
  return putl::DomainDataset::pu(std::move(id), std::move(s.x), std::move(s.z), s.pi1);
}

// Central differences of a scalar function of a vector.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd up = x, down = x;
    up[j] += step;
    down[j] -= step;
    g[j] = (f(up) - f(down)) / (2.0 * step);
  }
  return g;
}

inline double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(b.norm(), 1e-12);
  return (a - b).norm() / scale;
}

inline double rel_error(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

inline Eigen::VectorXd random_simplex(Eigen::Index m, putl::Rng& rng) {
  std::exponential_distribution<double> e;
  Eigen::VectorXd w(m);
  for (Eigen::Index k = 0; k < m; ++k) w[k] = e(rng);
  return w / w.sum();
}

// Writes a domain as CSV with columns x1..xp followed by its label columns.
inline void write_domain_csv(const std::filesystem::path& path, const putl::DomainDataset& d) {
  std::ofstream out(path, std::ios::binary);
  const Eigen::MatrixXd& x = d.features();
  for (Eigen::Index j = 0; j < x.cols(); ++j) out << (j ? "," : "") << "x" << j + 1;
  const auto& labels = d.labels();
  const bool has_y = !std::holds_alternative<putl::PuLabels>(labels);
  const bool has_z = !std::holds_alternative<putl::BinaryLabels>(labels);
  if (has_y) out << ",y";
  if (has_z) out << ",z";
  out << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", x(i, j));
      out << (j ? "," : "") << buf;
    }
    if (const auto* b = std::get_if<putl::BinaryLabels>(&labels)) out << "," << b->y[r];
    if (const auto* s = std::get_if<putl::SemiLabels>(&labels)) {
      out << ",";
      if (s->y[r]) out << *s->y[r];
      out << "," << s->z[r];
    }
    if (const auto* pu = std::get_if<putl::PuLabels>(&labels)) out << "," << pu->z[r];
    out << "\n";
  }
}

// A small fit problem on disk: PU target, one binary, one PU and one semi
// source drawn by the simulation harness, plus a PU test file and manifest.
inline std::filesystem::path write_problem(const std::filesystem::path& dir, std::uint64_t seed,
                                           const std::string& extra_globals = "") {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  putl::DgpSpec dgp;
  dgp.beta_true = putl::named_beta(1, 10);
  dgp.population_size = 20000;
  const putl::Population pop = putl::generate_population(dgp, seed);
  putl::PopulationSampler sampler(pop);
  const struct {
    const char* id;
    putl::Scheme scheme;
    int n;
  } domains[] = {{"target", putl::Scheme::pu, 300}, {"s1", putl::Scheme::binary, 300},
                 {"s2", putl::Scheme::pu, 300}, {"s3", putl::Scheme::semi, 300},
                 {"test", putl::Scheme::pu, 400}};
  std::string manifest = "K = 5\nseed = 7\n" + extra_globals;
  int k = 0;
  for (const auto& d : domains) {
    putl::Rng rng = putl::make_rng(seed, {static_cast<std::uint64_t>(k++)});
    const putl::Draw draw = sampler.draw(d.scheme, d.n, 0.3, rng);
    const auto data = putl::materialize(pop, draw, d.id, false);
    write_domain_csv(dir / (std::string(d.id) + ".csv"), data);
    if (std::string(d.id) == "test") continue;
    char pi1[32];
    std::snprintf(pi1, sizeof pi1, "%.17g", pop.pi1);
    manifest += std::string("\n[domain ") + d.id + "]\nrole = " +
                (std::string(d.id) == "target" ? "target" : "source") + "\nscheme = " +
                std::string(putl::to_string(d.scheme)) + "\ndata = " + d.id + ".csv\npi1 = " + pi1 + "\n";
  }
  std::ofstream(dir / "manifest.txt", std::ios::binary) << manifest;
  return dir / "manifest.txt";
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("putl_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
