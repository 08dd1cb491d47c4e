#include "putl/likelihoods.hpp"

#include "putl/error.hpp"

#include <cmath>
#include <string>
#include <variant>

namespace putl {

Objective::Objective(const DomainDataset& data) : Objective(data, constants_for(data)) {}

Objective::Objective(const DomainDataset& data, const LinkConstants& constants)
    : data_(&data), constants_(constants), kind_(data.scheme()) {
  if (kind_ == Scheme::pu) {
    if (!std::isfinite(constants_.b) || constants_.b < 0.0) {
      throw NumericalError("PU constant b must be finite and nonnegative");
    }
    log_b_ = constants_.b > 0.0 ? std::log(constants_.b) : 0.0;
    log1p_b_ = std::log1p(constants_.b);
  }
}

void Objective::check_dim(const Eigen::VectorXd& beta) const {
  if (beta.size() != data_->cols()) {
    throw DataError("coefficient length " + std::to_string(beta.size()) +
                    " does not match feature dimension " + std::to_string(data_->cols()));
  }
}

double Objective::accumulate(const Eigen::VectorXd& eta, Eigen::VectorXd* score,
                             long* clamped) const {
  const Eigen::Index n = eta.size();
  double total = 0.0;
  long clamps = 0;
  if (score) score->resize(n);
  const auto& labels = data_->labels();
  switch (kind_) {
    case Scheme::binary: {
      const auto& y = std::get<BinaryLabels>(labels).y;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = eta[i];
        const double yi = y[static_cast<std::size_t>(i)];
        total += yi * t - softplus(t);
        if (score) (*score)[i] = yi - sigmoid(t);
      }
      break;
    }
    case Scheme::pu: {
      const auto& z = std::get<PuLabels>(labels).z;
      if (constants_.b == 0.0) {
        for (int zi : z) {
          if (zi == 1) throw NumericalError("degenerate PU constant: log(b) with b = 0");
        }
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = eta[i];
        const double zi = z[static_cast<std::size_t>(i)];
        total += zi * (link_h(t) + log_b_) - link_g_shifted(t, log1p_b_);
        if (score) {
          const double s = sigmoid(t);
          const double sb = sigmoid(t + log1p_b_);
          (*score)[i] = zi * sigmoid(-t) - (sb - s);
        }
      }
      break;
    }
    case Scheme::semi: {
      const auto& semi = std::get<SemiLabels>(labels);
      const double h0 = constants_.h0;
      const double h1 = constants_.h1;
      const double log_h0 = std::log(h0);
      const double log_h1 = std::log(h1);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = static_cast<std::size_t>(i);
        const double u = constants_.nu + eta[i];
        const double s = sigmoid(u);
        const double sm = sigmoid(-u);
        if (semi.z[row] == 1) {
          if (*semi.y[row] == 1) {
            total += log_h1 - softplus(-u);
            if (score) (*score)[i] = sm;
          } else {
            total += log_h0 - softplus(u);
            if (score) (*score)[i] = -s;
          }
        } else {
          // 1 - h0 (1 - s) - h1 s, written as a convex combination of (1 - h0)
          // and (1 - h1) so it stays accurate when s saturates.
          const double bracket = (1.0 - h0) * sm + (1.0 - h1) * s;
          if (bracket <= kSemiBracketFloor) {
            ++clamps;
            total += std::log(kSemiBracketFloor);
            if (score) (*score)[i] = 0.0;
          } else {
            total += std::log(bracket);
            if (score) (*score)[i] = (h0 - h1) * s * sm / bracket;
          }
        }
      }
      break;
    }
  }
  if (clamped) *clamped = clamps;
  return total;
}

ObjectiveValue Objective::evaluate(const Eigen::VectorXd& beta) const {
  check_dim(beta);
  const auto n = static_cast<double>(data_->rows());
  const Eigen::VectorXd eta = data_->features() * beta;
  Eigen::VectorXd score;
  ObjectiveValue out;
  const double loglik = accumulate(eta, &score, &out.clamped);
  out.value = -loglik / n;
  out.grad = -(data_->features().transpose() * score) / n;
  return out;
}

double Objective::value(const Eigen::VectorXd& beta) const {
  check_dim(beta);
  return value_from_eta(data_->features() * beta);
}

double Objective::value_from_eta(const Eigen::VectorXd& eta, long* clamped) const {
  return -accumulate(eta, nullptr, clamped) / static_cast<double>(data_->rows());
}

double Objective::sum_value(const Eigen::VectorXd& beta) const {
  check_dim(beta);
  return -accumulate(data_->features() * beta, nullptr, nullptr);
}

namespace {

void require_kind(const Objective& obj, Scheme kind) {
  if (obj.kind() != kind) {
    throw DataError("objective built for a " + std::string(to_string(obj.kind())) +
                    " dataset, expected " + std::string(to_string(kind)));
  }
}

}  // namespace

ObjectiveValue binary_nll_grad(const CoefficientVector& beta, const Objective& obj) {
  require_kind(obj, Scheme::binary);
  return obj.evaluate(beta.beta);
}

ObjectiveValue pu_nll_grad(const CoefficientVector& beta, const Objective& obj) {
  require_kind(obj, Scheme::pu);
  return obj.evaluate(beta.beta);
}

ObjectiveValue semi_nll_grad(const CoefficientVector& beta, const Objective& obj) {
  require_kind(obj, Scheme::semi);
  ObjectiveValue out = obj.evaluate(beta.beta);
  check_semi_clamps(obj, out.clamped);
  return out;
}

void check_semi_clamps(const Objective& obj, long clamped) {
  if (obj.kind() != Scheme::semi || clamped == 0) return;
  const long unlabeled = obj.dataset().counts().n_unlabeled;
  if (static_cast<double>(clamped) > kSemiClampLimit * static_cast<double>(unlabeled)) {
    throw NumericalError("semi-supervised likelihood ill-posed for this (h0, h1, nu): " +
                         std::to_string(clamped) + " of " + std::to_string(unlabeled) +
                         " unlabeled rows have a nonpositive bracket");
  }
}

}  // namespace putl
