#pragma once

// Derivative-only minimizers shared by every fit: limited-memory BFGS with
// Armijo backtracking for smooth objectives, and accelerated proximal
// gradient (soft thresholding, monotone restart) for l1-penalized ones.

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace putl::optim {

// Returns f(x) and writes the gradient. May return a non-finite value; the
// line searches treat that as an infeasible trial point.
using SmoothFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;
using ValueFn = std::function<double(const Eigen::VectorXd& x)>;

struct LbfgsParams {
  int max_iters = 500;
  double grad_tol = 1e-8;
  int memory = 10;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  int max_backtracks = 60;
  // A point only counts as converged if the step that reached it was small
  // relative to the iterate. Stops divergent runs (separable data) from being
  // reported as converged once their gradient decays.
  double step_tol = 1e-3;
};

struct ProxParams {
  int max_iters = 5000;
  double step_tol = 1e-8;  // infinity-norm change between successive iterates
  double shrink = 0.5;
  int max_backtracks = 60;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_inf = 0.0;
  bool converged = false;
  int iters = 0;
  std::vector<double> trace;  // accepted objective values, starting point first
};

// Slack allowed in descent tests, relative to max(1, |f|). Keeps the tests
// meaningful at the rounding floor of the objective.
inline constexpr double kDescentSlack = 1e-13;

MinimizeResult lbfgs(const SmoothFn& fn, Eigen::VectorXd x0, const LbfgsParams& params);

// Minimizes f(x) + lambda * sum_{j: penalized[j]} |x_j|.
MinimizeResult proximal_gradient(const SmoothFn& fn, const ValueFn& value_fn, Eigen::VectorXd x0,
                                 double lambda, const std::vector<bool>& penalized,
                                 const ProxParams& params);

double soft_threshold(double v, double t);

}  // namespace putl::optim
