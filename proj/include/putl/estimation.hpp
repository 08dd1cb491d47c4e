#pragma once

#include "putl/dataset.hpp"
#include "putl/likelihoods.hpp"
#include "putl/optim.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace putl {

struct FitOptions {
  int max_iters = 500;
  double grad_tol = 1e-8;
  // Zero vector plus (n_starts - 1) Gaussian draws with sd start_sd.
  int n_starts = 5;
  double start_sd = 0.1;
  std::uint64_t seed = 0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  int memory = 10;
  // Proximal-gradient iteration cap for l1 fits.
  int prox_max_iters = 5000;
  double prox_step_tol = 1e-8;

  void validate() const;
};

struct FitResult {
  CoefficientVector beta;
  double objective = 0.0;  // mean-scaled, penalty included for l1 fits
  bool converged = false;
  int iters = 0;
  int start_index = 0;
  long clamp_warnings = 0;
  std::vector<double> start_objectives;  // NaN for aborted starts
  std::vector<double> trace;             // objective trace of the winning start
};

// Starting points used by every multi-start fit: zero, then seeded draws.
std::vector<Eigen::VectorXd> start_points(Eigen::Index dim, const FitOptions& opts);

// Multi-start minimizer of an arbitrary smooth objective. Aborted starts
// (non-finite objective at the start, or exceptions) are skipped; if every
// start aborts, throws NumericalError.
FitResult fit_smooth(const optim::SmoothFn& fn, Eigen::Index dim, bool intercept,
                     const FitOptions& opts);

// Maximum-likelihood fit of one domain's likelihood.
FitResult fit_mle(const Objective& obj, const FitOptions& opts);

// l1-penalized fit; the intercept column, if any, is not penalized.
FitResult fit_l1(const Objective& obj, double lambda, const FitOptions& opts);
// Single run from a given start (warm starts along a lambda path).
FitResult fit_l1_from(const Objective& obj, double lambda, const Eigen::VectorXd& start,
                      const FitOptions& opts);

// Subgradient optimality residual of an l1 fit.
double l1_optimality_residual(const Objective& obj, double lambda, const Eigen::VectorXd& beta);

// Intercept-only (or zero) fit with all penalized coordinates at 0.
Eigen::VectorXd null_fit(const Objective& obj, const FitOptions& opts);
// Smallest lambda that keeps every penalized coordinate at zero.
double lambda_max(const Objective& obj, const FitOptions& opts);
// `size` log-spaced values from lambda_max down to lambda_max * ratio.
std::vector<double> lambda_grid(double lambda_max, int size = 20, double ratio = 1e-3);

struct LambdaPath {
  std::vector<double> grid;    // lambdas that produced a usable score
  std::vector<double> scores;  // mean held-out NLL per kept lambda
  double selected = 0.0;
};

// K-fold selection of lambda by held-out NLL, folds stratified by the label
// indicator. `grid` must be sorted descending. Ties within 1e-12 go to the
// larger lambda.
double select_lambda(const Objective& obj, std::span<const double> grid, int folds,
                     std::uint64_t seed, const FitOptions& opts = {});
LambdaPath lambda_path(const Objective& obj, std::span<const double> grid, int folds,
                       std::uint64_t seed, const FitOptions& opts = {});

}  // namespace putl
