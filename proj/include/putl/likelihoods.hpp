#pragma once

#include "putl/dataset.hpp"
#include "putl/links.hpp"

#include <Eigen/Dense>

namespace putl {

// Floor applied to the unlabeled semi-supervised bracket before taking its log.
inline constexpr double kSemiBracketFloor = 1e-12;
// Fraction of unlabeled rows allowed to hit the floor at a final iterate.
inline constexpr double kSemiClampLimit = 0.01;

struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd grad;
  long clamped = 0;  // semi-supervised rows whose bracket hit the floor
};

// Negative log-likelihood of one domain, averaged over its rows. Constant
// terms (c(z, b), log h0 / log h1) are kept so that values match the
// likelihood exactly, not only up to an additive constant.
//
// Holds a reference to the dataset; the dataset must outlive the objective.
class Objective {
 public:
  explicit Objective(const DomainDataset& data);
  Objective(const DomainDataset& data, const LinkConstants& constants);
  Objective(DomainDataset&&) = delete;
  Objective(DomainDataset&&, const LinkConstants&) = delete;

  Scheme kind() const { return kind_; }
  const DomainDataset& dataset() const { return *data_; }
  const LinkConstants& constants() const { return constants_; }
  Eigen::Index dim() const { return data_->cols(); }
  Eigen::Index rows() const { return data_->rows(); }

  // Mean-scaled value and gradient. Never throws on semi-supervised clamps;
  // the count is reported instead so solvers can keep line searches defined.
  ObjectiveValue evaluate(const Eigen::VectorXd& beta) const;
  double value(const Eigen::VectorXd& beta) const;
  // n times the mean-scaled value.
  double sum_value(const Eigen::VectorXd& beta) const;
  // Mean NLL for pre-computed linear predictors eta = X beta.
  double value_from_eta(const Eigen::VectorXd& eta, long* clamped = nullptr) const;

 private:
  void check_dim(const Eigen::VectorXd& beta) const;
  // Per-row log-likelihood derivative w.r.t. eta written into `score`.
  double accumulate(const Eigen::VectorXd& eta, Eigen::VectorXd* score, long* clamped) const;

  const DomainDataset* data_;
  LinkConstants constants_;
  Scheme kind_;
  double log_b_ = 0.0;
  double log1p_b_ = 0.0;
};

// Kind-checked entry points. semi_nll_grad throws NumericalError when more than
// 1% of unlabeled rows have a nonpositive bracket at `beta`.
ObjectiveValue binary_nll_grad(const CoefficientVector& beta, const Objective& obj);
ObjectiveValue pu_nll_grad(const CoefficientVector& beta, const Objective& obj);
ObjectiveValue semi_nll_grad(const CoefficientVector& beta, const Objective& obj);

// Throws NumericalError if the clamp count exceeds the allowed fraction.
void check_semi_clamps(const Objective& obj, long clamped);

}  // namespace putl
