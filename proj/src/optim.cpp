#include "putl/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace putl::optim {

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double slack(double f) { return kDescentSlack * std::max(1.0, std::abs(f)); }

struct Correction {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

// Two-loop recursion: returns -H g.
Eigen::VectorXd lbfgs_direction(const std::deque<Correction>& memory, const Eigen::VectorXd& g) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alpha[k] = memory[k].rho * memory[k].s.dot(q);
    q -= alpha[k] * memory[k].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * memory[k].y.dot(q);
    q += (alpha[k] - beta) * memory[k].s;
  }
  return -q;
}

}  // namespace

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

MinimizeResult lbfgs(const SmoothFn& fn, Eigen::VectorXd x0, const LbfgsParams& params) {
  MinimizeResult out;
  out.x = std::move(x0);
  Eigen::VectorXd g(out.x.size());
  double f = fn(out.x, g);
  out.value = f;
  out.trace.push_back(f);
  if (!std::isfinite(f) || !g.allFinite()) {
    // Aborted start: callers see a non-finite value.
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.grad_inf = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  std::deque<Correction> memory;
  double last_step = 0.0;
  Eigen::VectorXd x_new(out.x.size());
  Eigen::VectorXd g_new(out.x.size());
  for (;;) {
    out.grad_inf = inf_norm(g);
    if (out.grad_inf <= params.grad_tol &&
        last_step <= params.step_tol * std::max(1.0, inf_norm(out.x))) {
      out.converged = true;
      break;
    }
    if (out.iters >= params.max_iters) break;

    Eigen::VectorXd d = lbfgs_direction(memory, g);
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      memory.clear();
      d = -g;
      slope = -g.squaredNorm();
    }
    // Without curvature information, cap the first trial step at unit length.
    double alpha = memory.empty() ? std::min(1.0, 1.0 / std::max(inf_norm(d), 1e-300)) : 1.0;
    bool accepted = false;
    double f_new = f;
    for (int k = 0; k < params.max_backtracks; ++k) {
      x_new = out.x + alpha * d;
      f_new = fn(x_new, g_new);
      if (std::isfinite(f_new) && g_new.allFinite() &&
          f_new <= f + params.sufficient_decrease * alpha * slope + slack(f)) {
        accepted = true;
        break;
      }
      alpha *= params.shrink;
    }
    if (!accepted) break;
    ++out.iters;

    Eigen::VectorXd s = x_new - out.x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    last_step = inf_norm(s);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      memory.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(memory.size()) > params.memory) memory.pop_front();
    }
    out.x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    out.trace.push_back(f);
    if (last_step == 0.0) {
      // The step underflowed: nothing further can change the iterate.
      out.grad_inf = inf_norm(g);
      out.converged = out.grad_inf <= params.grad_tol;
      break;
    }
  }
  out.value = f;
  return out;
}

MinimizeResult proximal_gradient(const SmoothFn& fn, const ValueFn& value_fn, Eigen::VectorXd x0,
                                 double lambda, const std::vector<bool>& penalized,
                                 const ProxParams& params) {
  const Eigen::Index p = x0.size();
  const auto l1 = [&](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (penalized[static_cast<std::size_t>(j)]) s += std::abs(x[j]);
    }
    return lambda * s;
  };
  const auto prox = [&](const Eigen::VectorXd& v, double step) {
    Eigen::VectorXd out = v;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (penalized[static_cast<std::size_t>(j)]) out[j] = soft_threshold(v[j], lambda * step);
    }
    return out;
  };

  MinimizeResult out;
  out.x = prox(x0, 0.0);
  Eigen::VectorXd grad(p);
  double f_x = value_fn(out.x);
  if (!std::isfinite(f_x)) {
    out.value = f_x;
    return out;
  }
  double F_x = f_x + l1(out.x);
  out.trace.push_back(F_x);

  Eigen::VectorXd y = out.x;
  double momentum = 1.0;
  double step = 1.0;
  Eigen::VectorXd x_new(p);
  bool stalled = false;
  for (out.iters = 0; out.iters < params.max_iters; ++out.iters) {
    const double f_y = fn(y, grad);
    if (!std::isfinite(f_y)) {
      // Extrapolated point left the domain: restart from the current iterate.
      y = out.x;
      momentum = 1.0;
      continue;
    }
    bool accepted = false;
    double f_new = 0.0;
    for (int k = 0; k < params.max_backtracks; ++k) {
      x_new = prox(y - step * grad, step);
      const Eigen::VectorXd diff = x_new - y;
      f_new = value_fn(x_new);
      if (std::isfinite(f_new) &&
          f_new <= f_y + grad.dot(diff) + diff.squaredNorm() / (2.0 * step) + slack(f_y)) {
        accepted = true;
        break;
      }
      step *= params.shrink;
    }
    if (!accepted) {
      stalled = true;
      break;
    }

    const double F_new = f_new + l1(x_new);
    if (F_new > F_x + slack(F_x)) {
      // Monotone restart: drop the momentum and retry from x.
      if (y == out.x) {
        stalled = true;
        break;
      }
      y = out.x;
      momentum = 1.0;
      continue;
    }
    const double change = inf_norm(x_new - out.x);
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = x_new + ((momentum - 1.0) / next_momentum) * (x_new - out.x);
    momentum = next_momentum;
    out.x = x_new;
    F_x = F_new;
    out.trace.push_back(F_x);
    // Let the step grow back slowly after backtracking.
    step /= 0.95;
    if (change <= params.step_tol) {
      out.converged = true;
      ++out.iters;
      break;
    }
  }
  out.value = F_x;
  fn(out.x, grad);
  Eigen::VectorXd residual = grad;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!penalized[static_cast<std::size_t>(j)]) continue;
    if (out.x[j] != 0.0) {
      residual[j] = grad[j] + lambda * (out.x[j] > 0.0 ? 1.0 : -1.0);
    } else {
      residual[j] = std::max(std::abs(grad[j]) - lambda, 0.0);
    }
  }
  out.grad_inf = inf_norm(residual);
  // No further descent is possible in floating point; accept the iterate when
  // it is optimal to within the subgradient tolerance.
  if (stalled && out.grad_inf <= 1e-6) out.converged = true;
  return out;
}

}  // namespace putl::optim
