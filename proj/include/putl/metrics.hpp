#pragma once

#include "putl/averaging.hpp"
#include "putl/dataset.hpp"
#include "putl/estimation.hpp"

#include <Eigen/Dense>

#include <limits>
#include <span>

namespace putl {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct EvalReport {
  double acc = kMissing;
  double auc = kMissing;
  double auc_adj = kMissing;
  double tpr = kMissing;
  double fpr = kMissing;
  double rkl = kMissing;
  long n_test = 0;
  double threshold = 0.5;
};

// Mann-Whitney AUC with half credit for ties. Throws DataError when only one
// class is present.
double auc(std::span<const double> scores, std::span<const int> labels);

// (AUC against PU indicators - pi1 / 2) / (1 - pi1). Not clamped.
double auc_adj(std::span<const double> scores, std::span<const int> z, double pi1);

struct ConfusionRates {
  double acc = kMissing;
  double tpr = kMissing;  // missing without positives
  double fpr = kMissing;  // missing without negatives
};
// Predicts 1 when score >= threshold.
ConfusionRates confusion_metrics(std::span<const double> scores, std::span<const int> labels,
                                 double threshold);

// Relative KL loss on a PU test set, scaled by 100:
//   100 * (sup_beta L(beta) - L(beta_hat)) / n_test,
// with sum-form PU log-likelihoods using constant b. The sup is found once by
// fit_mle at construction and reused for every coefficient vector.
class RklEvaluator {
 public:
  RklEvaluator(const DomainDataset& test, double b, const FitOptions& opts);
  RklEvaluator(DomainDataset&&, double, const FitOptions&) = delete;

  double operator()(const CoefficientVector& beta_hat) const;
  const FitResult& sup_fit() const { return sup_; }
  double sup_loglik() const { return sup_loglik_; }

 private:
  Objective objective_;
  FitResult sup_;
  double sup_loglik_;
};

double rkl(const CoefficientVector& beta_hat, const DomainDataset& test, double b,
           const FitOptions& opts);

// Estimated KL divergence between oracle and averaged linear predictors on
// evaluation rows:
//   (1/n*) sum_i { z_i [h(eta*_i) - h(eta_i(w))] - [g(eta*_i) - g(eta_i(w))] },
// with eta(w) built from the full-target fit and the source fits.
SimplexObjective kl_objective(const CandidateBank& bank, const Eigen::VectorXd& oracle_eta,
                              const Eigen::MatrixXd& eval_rows, std::span<const int> z, double b);

double estimated_kl(const Eigen::VectorXd& w, const CandidateBank& bank,
                    const Eigen::VectorXd& oracle_eta, const Eigen::MatrixXd& eval_rows,
                    std::span<const int> z, double b);

struct KlRatio {
  double at_weights = 0.0;
  double infimum = 0.0;
  double ratio = 0.0;
  Eigen::VectorXd minimizer;
};
// KL at `w` over its minimum on the simplex (same solver as the CV weights).
KlRatio kl_ratio(const Eigen::VectorXd& w, const SimplexObjective& kl);

}  // namespace putl
