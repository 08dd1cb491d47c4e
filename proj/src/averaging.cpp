#include "putl/averaging.hpp"

#include "putl/error.hpp"
#include "putl/links.hpp"
#include "putl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>

namespace putl {

FitResult fit_source(DomainDataset source, const BankOptions& opts, double* lambda_used) {
  const Objective obj(source);
  if (!opts.l1) {
    if (lambda_used) *lambda_used = 0.0;
    return fit_mle(obj, opts.fit);
  }
  const double top = lambda_max(obj, opts.fit);
  const auto grid = lambda_grid(top > 0.0 ? top : 1e-8, opts.lambda_grid_size, opts.lambda_ratio);
  FitOptions path_opts = opts.fit;
  const double lambda = select_lambda(obj, grid, opts.lambda_folds, opts.fit.seed, path_opts);
  if (lambda_used) *lambda_used = lambda;
  return fit_l1(obj, lambda, opts.fit);
}

namespace {

// Target fits share the target's lambda; fold refits use the complement's own
// constants.
struct TargetFitter {
  const BankOptions& opts;
  double lambda = 0.0;

  FitResult operator()(const DomainDataset& data) const {
    const Objective obj(data);
    return opts.l1 ? fit_l1(obj, lambda, opts.fit) : fit_mle(obj, opts.fit);
  }
};

double select_target_lambda(const DomainDataset& target, const BankOptions& opts) {
  const Objective obj(target);
  const double top = lambda_max(obj, opts.fit);
  const auto grid = lambda_grid(top > 0.0 ? top : 1e-8, opts.lambda_grid_size, opts.lambda_ratio);
  return select_lambda(obj, grid, opts.lambda_folds, opts.fit.seed, opts.fit);
}

}  // namespace

CandidateBank build_bank(const DomainDataset& target, std::vector<DomainDataset> sources,
                         const FoldPlan& folds, const BankOptions& opts) {
  if (target.scheme() != Scheme::pu) throw DataError("target domain must use the PU scheme");
  if (static_cast<Eigen::Index>(folds.assignment.size()) != target.rows()) {
    throw DataError("fold plan does not match the target row count");
  }
  for (const auto& s : sources) {
    if (s.cols() != target.cols()) {
      throw DataError("source '" + s.id() + "' has " + std::to_string(s.cols()) +
                      " features, target has " + std::to_string(target.cols()));
    }
  }

  CandidateBank bank;
  bank.b_full = constants_for(target).b;
  const auto K = static_cast<std::size_t>(folds.folds);
  const std::size_t M = sources.size();

  TargetFitter fitter{opts};
  if (opts.l1) {
    try {
      fitter.lambda = select_target_lambda(target, opts);
    } catch (const std::exception& e) {
      throw NumericalError("target '" + target.id() + "': lambda selection failed: " + e.what());
    }
    bank.target_lambda = fitter.lambda;
  }

  std::vector<DomainDataset> complements;
  complements.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    complements.push_back(target.subset(folds.complement(static_cast<int>(k))));
    bank.b_folds.push_back(constants_for(complements.back()).b);
  }

  // Task layout: 0 = full target, 1..K = fold complements, K+1.. = sources.
  const std::size_t tasks = 1 + K + M;
  std::vector<std::optional<FitResult>> results(tasks);
  std::vector<std::string> errors(tasks);
  std::vector<double> lambdas(M, 0.0);
  parallel_for(tasks, opts.threads, [&](std::size_t t) {
    try {
      if (t == 0) {
        results[t] = fitter(target);
      } else if (t <= K) {
        results[t] = fitter(complements[t - 1]);
      } else {
        // A copy goes in: only this source's rows reach the fitting routine.
        results[t] = fit_source(sources[t - 1 - K], opts, &lambdas[t - 1 - K]);
      }
      if (!results[t]->beta.beta.allFinite()) {
        results[t].reset();
        errors[t] = "non-finite coefficients";
      }
    } catch (const std::exception& e) {
      results[t].reset();
      errors[t] = e.what();
    }
  });

  if (!results[0]) {
    throw NumericalError("fit of target domain '" + target.id() + "' failed: " + errors[0]);
  }
  bank.target_full = std::move(*results[0]);
  for (std::size_t k = 0; k < K; ++k) {
    if (results[1 + k]) {
      bank.target_folds.push_back(std::move(*results[1 + k]));
    } else {
      bank.target_folds_ok = false;
      FitResult placeholder;
      placeholder.beta = CoefficientVector{Eigen::VectorXd::Zero(target.cols()),
                                           target.has_intercept()};
      bank.target_folds.push_back(std::move(placeholder));
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t t = 1 + K + m;
    if (!results[t]) {
      throw NumericalError("fit of source domain '" + sources[m].id() + "' failed: " + errors[t]);
    }
    bank.sources.push_back(std::move(*results[t]));
    bank.source_ids.push_back(sources[m].id());
  }
  bank.source_lambdas = std::move(lambdas);
  return bank;
}

SimplexObjective::SimplexObjective(Eigen::MatrixXd predictors, std::vector<int> z, double b,
                                   double offset)
    : predictors_(std::move(predictors)), log1p_b_(std::log1p(b)), offset_(offset) {
  if (static_cast<Eigen::Index>(z.size()) != predictors_.rows()) {
    throw DataError("indicator length does not match the predictor rows");
  }
  if (!(b >= 0.0) || !std::isfinite(b)) throw NumericalError("PU constant b must be finite");
  z_.resize(predictors_.rows());
  for (std::size_t i = 0; i < z.size(); ++i) z_[static_cast<Eigen::Index>(i)] = z[i];
}

double SimplexObjective::value(const Eigen::VectorXd& w) const {
  if (w.size() != predictors_.cols()) throw DataError("weight vector has the wrong length");
  const Eigen::VectorXd eta = predictors_ * w;
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    total += -z_[i] * link_h(eta[i]) + link_g_shifted(eta[i], log1p_b_);
  }
  return total / static_cast<double>(eta.size()) + offset_;
}

double SimplexObjective::evaluate(const Eigen::VectorXd& w, Eigen::VectorXd& grad) const {
  if (w.size() != predictors_.cols()) throw DataError("weight vector has the wrong length");
  const Eigen::VectorXd eta = predictors_ * w;
  Eigen::VectorXd r(eta.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double t = eta[i];
    total += -z_[i] * link_h(t) + link_g_shifted(t, log1p_b_);
    r[i] = -z_[i] * sigmoid(-t) + (sigmoid(t + log1p_b_) - sigmoid(t));
  }
  const auto n = static_cast<double>(eta.size());
  grad = predictors_.transpose() * r / n;
  return total / n + offset_;
}

SimplexObjective cv_objective(const CandidateBank& bank, const DomainDataset& target,
                              const FoldPlan& folds) {
  if (static_cast<Eigen::Index>(folds.assignment.size()) != target.rows()) {
    throw DataError("fold plan does not match the target row count");
  }
  if (target.cols() != bank.dim()) throw DataError("target dimension does not match the bank");
  if (static_cast<int>(bank.target_folds.size()) != folds.folds) {
    throw DataError("bank holds a different number of fold fits than the plan");
  }
  const Eigen::Index n = target.rows();
  const auto M = static_cast<Eigen::Index>(bank.sources.size());
  const Eigen::MatrixXd& x = target.features();
  Eigen::MatrixXd predictors(n, M + 1);
  Eigen::MatrixXd fold_eta(n, folds.folds);
  for (int k = 0; k < folds.folds; ++k) {
    fold_eta.col(k) = x * bank.target_folds[static_cast<std::size_t>(k)].beta.beta;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    predictors(i, 0) = fold_eta(i, folds.assignment[static_cast<std::size_t>(i)]);
  }
  for (Eigen::Index m = 0; m < M; ++m) {
    predictors.col(m + 1) = x * bank.sources[static_cast<std::size_t>(m)].beta.beta;
  }
  const auto& z = target.indicator();
  const long labeled = std::accumulate(z.begin(), z.end(), 0L);
  const double offset =
      -static_cast<double>(labeled) * std::log(bank.b_full) / static_cast<double>(n);
  return SimplexObjective(std::move(predictors), z, bank.b_full, offset);
}

CvValue cv_criterion(const Eigen::VectorXd& w, const CandidateBank& bank,
                     const DomainDataset& target, const FoldPlan& folds) {
  const SimplexObjective cv = cv_objective(bank, target, folds);
  CvValue out;
  out.value = cv.evaluate(w, out.grad);
  return out;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n == 0) return v;
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).max(0.0).matrix();
}

namespace {

Eigen::VectorXd project_active(const Eigen::VectorXd& v, bool exclude_first) {
  if (!exclude_first) return project_simplex(v);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
  out.tail(v.size() - 1) = project_simplex(v.tail(v.size() - 1));
  return out;
}

struct RunResult {
  Eigen::VectorXd w;
  double value = 0.0;
  int iters = 0;
  double grad_mapping = 0.0;
};

RunResult projected_gradient(const SimplexObjective& obj, Eigen::VectorXd w,
                             const WeightOptions& opts, bool exclude_first) {
  RunResult out;
  Eigen::VectorXd g;
  double f = obj.evaluate(w, g);
  double step = 1.0;
  Eigen::VectorXd g_new;
  for (;;) {
    out.grad_mapping = (w - project_active(w - g, exclude_first)).cwiseAbs().maxCoeff();
    if (out.grad_mapping <= opts.tol || out.iters >= opts.max_iters) break;
    bool accepted = false;
    Eigen::VectorXd w_new;
    double f_new = f;
    for (int k = 0; k < 60; ++k) {
      w_new = project_active(w - step * g, exclude_first);
      const Eigen::VectorXd d = w_new - w;
      f_new = obj.evaluate(w_new, g_new);
      if (std::isfinite(f_new) && f_new <= f + g.dot(d) + d.squaredNorm() / (2.0 * step)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    ++out.iters;
    const Eigen::VectorXd s = w_new - w;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    // Barzilai-Borwein step for the next trial.
    step = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * step;
    step = std::clamp(step, 1e-12, 1e12);
    w = std::move(w_new);
    g.swap(g_new);
    f = f_new;
  }
  out.w = std::move(w);
  out.value = f;
  return out;
}

Eigen::VectorXd clean_simplex(Eigen::VectorXd w) {
  w = w.cwiseMax(0.0);
  const double total = w.sum();
  if (total > 0.0) w /= total;
  return w;
}

}  // namespace

WeightVector minimize_on_simplex(const SimplexObjective& objective, const WeightOptions& opts,
                                 bool exclude_first) {
  const Eigen::Index n = objective.candidates();
  if (n == 0) throw DataError("no candidates to weight");
  if (exclude_first && n < 2) throw NumericalError("no candidates left after excluding the target");

  WeightVector out;
  out.target_excluded = exclude_first;
  for (Eigen::Index m = 0; m < n; ++m) {
    if (exclude_first && m == 0) {
      out.vertex_values.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[m] = 1.0;
    out.vertex_values.push_back(objective.value(e));
  }

  std::vector<Eigen::VectorXd> starts;
  for (Eigen::Index m = exclude_first ? 1 : 0; m < n; ++m) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[m] = 1.0;
    starts.push_back(std::move(e));
  }
  Eigen::VectorXd uniform = Eigen::VectorXd::Zero(n);
  const Eigen::Index active = exclude_first ? n - 1 : n;
  uniform.tail(active).setConstant(1.0 / static_cast<double>(active));
  if (active > 1) starts.push_back(uniform);

  std::vector<RunResult> runs;
  for (const auto& s : starts) {
    RunResult r = projected_gradient(objective, s, opts, exclude_first);
    r.w = clean_simplex(std::move(r.w));
    r.value = objective.value(r.w);
    runs.push_back(std::move(r));
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : runs) best = std::min(best, r.value);
  std::size_t pick = runs.size();
  double pick_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    if (!(runs[k].value <= best + opts.tie_tol)) continue;
    const double dist = (runs[k].w - uniform).norm();
    if (dist < pick_dist) {
      pick = k;
      pick_dist = dist;
    }
  }
  if (pick == runs.size()) throw NumericalError("weight optimization produced no finite value");

  out.w = runs[pick].w;
  out.cv_value = runs[pick].value;
  out.iters = runs[pick].iters;
  out.grad_mapping = runs[pick].grad_mapping;
  out.starts = static_cast<int>(runs.size());
  out.start_index = static_cast<int>(pick);
  return out;
}

WeightVector solve_weights(const CandidateBank& bank, const DomainDataset& target,
                           const FoldPlan& folds, const WeightOptions& opts) {
  const SimplexObjective cv = cv_objective(bank, target, folds);
  return minimize_on_simplex(cv, opts, !bank.target_folds_ok);
}

CoefficientVector averaged_coefficients(const Eigen::VectorXd& w, const CandidateBank& bank) {
  if (static_cast<std::size_t>(w.size()) != bank.candidates()) {
    throw DataError("weight vector length does not match the number of candidates");
  }
  CoefficientVector out{w[0] * bank.target_full.beta.beta, bank.target_full.beta.includes_intercept};
  for (std::size_t m = 0; m < bank.sources.size(); ++m) {
    out.beta += w[static_cast<Eigen::Index>(m + 1)] * bank.sources[m].beta.beta;
  }
  return out;
}

CoefficientVector averaged_coefficients(const WeightVector& w, const CandidateBank& bank) {
  return averaged_coefficients(w.w, bank);
}

namespace {

double clamp_probability(double p) {
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

}  // namespace

double predict_proba(const CoefficientVector& beta, const Eigen::VectorXd& x) {
  if (x.size() != beta.size()) throw DataError("feature vector length does not match coefficients");
  return clamp_probability(sigmoid(x.dot(beta.beta)));
}

Eigen::VectorXd predict_proba_rows(const CoefficientVector& beta, const Eigen::MatrixXd& x) {
  if (x.cols() != beta.size()) throw DataError("feature columns do not match coefficients");
  Eigen::VectorXd eta = x * beta.beta;
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = clamp_probability(sigmoid(eta[i]));
  return eta;
}

}  // namespace putl
