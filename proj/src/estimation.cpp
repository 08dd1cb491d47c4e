#include "putl/estimation.hpp"

#include "putl/error.hpp"
#include "putl/folds.hpp"
#include "putl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace putl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

optim::LbfgsParams lbfgs_params(const FitOptions& opts) {
  optim::LbfgsParams p;
  p.max_iters = opts.max_iters;
  p.grad_tol = opts.grad_tol;
  p.memory = opts.memory;
  p.shrink = opts.shrink;
  p.sufficient_decrease = opts.sufficient_decrease;
  return p;
}

optim::ProxParams prox_params(const FitOptions& opts) {
  optim::ProxParams p;
  p.max_iters = opts.prox_max_iters;
  p.step_tol = opts.prox_step_tol;
  p.shrink = opts.shrink;
  return p;
}

std::vector<bool> penalty_mask(const Objective& obj) {
  std::vector<bool> mask(static_cast<std::size_t>(obj.dim()), true);
  if (obj.dataset().has_intercept() && !mask.empty()) mask[0] = false;
  return mask;
}

optim::SmoothFn smooth_of(const Objective& obj, long* clamp_events) {
  return [&obj, clamp_events](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    ObjectiveValue v = obj.evaluate(x);
    if (v.clamped > 0 && clamp_events) ++*clamp_events;
    g = std::move(v.grad);
    return v.value;
  };
}

optim::ValueFn value_of(const Objective& obj) {
  return [&obj](const Eigen::VectorXd& x) { return obj.value(x); };
}

void finish_semi(const Objective& obj, const FitResult& fit) {
  if (obj.kind() != Scheme::semi) return;
  long clamped = 0;
  obj.value_from_eta(obj.dataset().features() * fit.beta.beta, &clamped);
  check_semi_clamps(obj, clamped);
}

FitResult to_fit(optim::MinimizeResult r, bool intercept, int start) {
  FitResult fit;
  fit.beta = CoefficientVector{std::move(r.x), intercept};
  fit.objective = r.value;
  fit.converged = r.converged;
  fit.iters = r.iters;
  fit.start_index = start;
  fit.trace = std::move(r.trace);
  return fit;
}

}  // namespace

void FitOptions::validate() const {
  if (max_iters < 1) throw DataError("max_iters must be at least 1");
  if (!(grad_tol > 0.0)) throw DataError("grad_tol must be positive");
  if (n_starts < 1) throw DataError("n_starts must be at least 1");
  if (!(start_sd >= 0.0)) throw DataError("start_sd must be nonnegative");
  if (prox_max_iters < 1) throw DataError("prox_max_iters must be at least 1");
}

std::vector<Eigen::VectorXd> start_points(Eigen::Index dim, const FitOptions& opts) {
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(dim));
  Rng rng = make_rng(opts.seed, {0x5eedULL, static_cast<std::uint64_t>(dim)});
  std::normal_distribution<double> normal(0.0, opts.start_sd);
  for (int k = 1; k < opts.n_starts; ++k) {
    Eigen::VectorXd x(dim);
    for (Eigen::Index j = 0; j < dim; ++j) x[j] = normal(rng);
    starts.push_back(std::move(x));
  }
  return starts;
}

namespace {

template <class Run>
FitResult multi_start(Eigen::Index dim, bool intercept, const FitOptions& opts, Run&& run) {
  opts.validate();
  FitResult best;
  bool have = false;
  std::vector<double> objectives;
  const auto starts = start_points(dim, opts);
  for (std::size_t k = 0; k < starts.size(); ++k) {
    optim::MinimizeResult r;
    try {
      r = run(starts[k]);
    } catch (const NumericalError&) {
      objectives.push_back(kNaN);
      continue;
    }
    if (!std::isfinite(r.value) || !r.x.allFinite()) {
      objectives.push_back(kNaN);
      continue;
    }
    objectives.push_back(r.value);
    if (!have || r.value < best.objective) {
      best = to_fit(std::move(r), intercept, static_cast<int>(k));
      have = true;
    }
  }
  if (!have) throw NumericalError("every start of the fit produced a non-finite objective");
  best.start_objectives = std::move(objectives);
  return best;
}

}  // namespace

FitResult fit_smooth(const optim::SmoothFn& fn, Eigen::Index dim, bool intercept,
                     const FitOptions& opts) {
  const auto params = lbfgs_params(opts);
  return multi_start(dim, intercept, opts,
                     [&](const Eigen::VectorXd& x0) { return optim::lbfgs(fn, x0, params); });
}

FitResult fit_mle(const Objective& obj, const FitOptions& opts) {
  long clamp_events = 0;
  FitResult fit = fit_smooth(smooth_of(obj, &clamp_events), obj.dim(),
                             obj.dataset().has_intercept(), opts);
  fit.clamp_warnings = clamp_events;
  finish_semi(obj, fit);
  return fit;
}

FitResult fit_l1(const Objective& obj, double lambda, const FitOptions& opts) {
  if (!(lambda >= 0.0)) throw DataError("lambda must be nonnegative");
  long clamp_events = 0;
  const auto fn = smooth_of(obj, &clamp_events);
  const auto value = value_of(obj);
  const auto mask = penalty_mask(obj);
  const auto params = prox_params(opts);
  FitResult fit = multi_start(obj.dim(), obj.dataset().has_intercept(), opts,
                              [&](const Eigen::VectorXd& x0) {
                                return optim::proximal_gradient(fn, value, x0, lambda, mask,
                                                                params);
                              });
  fit.clamp_warnings = clamp_events;
  finish_semi(obj, fit);
  return fit;
}

FitResult fit_l1_from(const Objective& obj, double lambda, const Eigen::VectorXd& start,
                      const FitOptions& opts) {
  if (!(lambda >= 0.0)) throw DataError("lambda must be nonnegative");
  long clamp_events = 0;
  auto r = optim::proximal_gradient(smooth_of(obj, &clamp_events), value_of(obj), start, lambda,
                                    penalty_mask(obj), prox_params(opts));
  if (!std::isfinite(r.value) || !r.x.allFinite()) {
    throw NumericalError("l1 fit produced a non-finite objective");
  }
  FitResult fit = to_fit(std::move(r), obj.dataset().has_intercept(), 0);
  fit.start_objectives = {fit.objective};
  fit.clamp_warnings = clamp_events;
  finish_semi(obj, fit);
  return fit;
}

double l1_optimality_residual(const Objective& obj, double lambda, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd g = obj.evaluate(beta).grad;
  const auto mask = penalty_mask(obj);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    double r = 0.0;
    if (!mask[static_cast<std::size_t>(j)]) {
      r = std::abs(g[j]);
    } else if (beta[j] != 0.0) {
      r = std::abs(g[j] + lambda * (beta[j] > 0.0 ? 1.0 : -1.0));
    } else {
      r = std::max(std::abs(g[j]) - lambda, 0.0);
    }
    worst = std::max(worst, r);
  }
  return worst;
}

Eigen::VectorXd null_fit(const Objective& obj, const FitOptions& opts) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(obj.dim());
  if (!obj.dataset().has_intercept()) return beta;
  const optim::SmoothFn fn = [&obj](const Eigen::VectorXd& c, Eigen::VectorXd& g) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(obj.dim());
    full[0] = c[0];
    ObjectiveValue v = obj.evaluate(full);
    g.resize(1);
    g[0] = v.grad[0];
    return v.value;
  };
  FitOptions one = opts;
  one.n_starts = 1;
  const FitResult fit = fit_smooth(fn, 1, true, one);
  beta[0] = fit.beta.beta[0];
  return beta;
}

double lambda_max(const Objective& obj, const FitOptions& opts) {
  const Eigen::VectorXd beta = null_fit(obj, opts);
  const Eigen::VectorXd g = obj.evaluate(beta).grad;
  const auto mask = penalty_mask(obj);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (mask[static_cast<std::size_t>(j)]) worst = std::max(worst, std::abs(g[j]));
  }
  return worst;
}

std::vector<double> lambda_grid(double lambda_max, int size, double ratio) {
  if (!(lambda_max > 0.0)) throw DataError("lambda_max must be positive");
  if (size < 1) throw DataError("lambda grid needs at least one point");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw DataError("lambda ratio must lie in (0, 1]");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(size));
  if (size == 1) return {lambda_max};
  const double log_hi = std::log(lambda_max);
  const double log_lo = std::log(lambda_max * ratio);
  for (int k = 0; k < size; ++k) {
    grid.push_back(std::exp(log_hi + (log_lo - log_hi) * k / (size - 1)));
  }
  grid.front() = lambda_max;
  return grid;
}

LambdaPath lambda_path(const Objective& obj, std::span<const double> grid, int folds,
                       std::uint64_t seed, const FitOptions& opts) {
  if (grid.empty()) throw DataError("lambda grid is empty");
  if (folds < 2) throw DataError("lambda selection needs at least 2 folds");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (grid[k] > grid[k - 1]) throw DataError("lambda grid must be sorted descending");
  }
  const DomainDataset& data = obj.dataset();
  const FoldPlan plan = stratified_folds(data.indicator(), folds, seed);

  struct FoldData {
    DomainDataset train;
    DomainDataset held;
  };
  std::vector<FoldData> parts;
  parts.reserve(static_cast<std::size_t>(folds));
  for (int k = 0; k < folds; ++k) {
    const auto train_rows = plan.complement(k);
    const auto held_rows = plan.held_out(k);
    parts.push_back({data.subset(train_rows), data.subset(held_rows)});
  }
  std::vector<Objective> train_obj;
  std::vector<Objective> held_obj;
  for (const auto& part : parts) {
    train_obj.emplace_back(part.train);
    held_obj.emplace_back(part.held, obj.constants());
  }

  std::vector<Eigen::VectorXd> warm(static_cast<std::size_t>(folds),
                                    Eigen::VectorXd::Zero(obj.dim()));
  LambdaPath path;
  for (double lambda : grid) {
    double total = 0.0;
    long rows = 0;
    for (int k = 0; k < folds; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      try {
        const FitResult fit = fit_l1_from(train_obj[kk], lambda, warm[kk], opts);
        const double held = held_obj[kk].sum_value(fit.beta.beta);
        if (!std::isfinite(held)) continue;
        total += held;
        rows += held_obj[kk].rows();
        warm[kk] = fit.beta.beta;
      } catch (const NumericalError&) {
        continue;
      }
    }
    if (rows == 0) continue;
    path.grid.push_back(lambda);
    path.scores.push_back(total / static_cast<double>(rows));
  }
  if (path.grid.empty()) throw NumericalError("every lambda on the grid failed to fit");

  std::size_t best = 0;
  for (std::size_t k = 1; k < path.grid.size(); ++k) {
    if (path.scores[k] < path.scores[best] - 1e-12) best = k;
  }
  path.selected = path.grid[best];
  return path;
}

double select_lambda(const Objective& obj, std::span<const double> grid, int folds,
                     std::uint64_t seed, const FitOptions& opts) {
  return lambda_path(obj, grid, folds, seed, opts).selected;
}

}  // namespace putl
