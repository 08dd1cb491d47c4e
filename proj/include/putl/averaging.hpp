#pragma once

#include "putl/dataset.hpp"
#include "putl/estimation.hpp"
#include "putl/folds.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace putl {

// How each domain is fitted when the bank is built.
struct BankOptions {
  FitOptions fit;
  bool l1 = false;
  int lambda_grid_size = 20;
  double lambda_ratio = 1e-3;
  int lambda_folds = 5;
  int threads = 1;
};

// Candidate coefficients: the full-target fit, one fit per fold complement,
// and one fit per source. Index 0 of every weight vector is the target.
struct CandidateBank {
  FitResult target_full;
  std::vector<FitResult> target_folds;
  std::vector<FitResult> sources;
  std::vector<std::string> source_ids;
  double b_full = 0.0;
  std::vector<double> b_folds;
  // Penalty levels used, when the bank was fitted with l1 (else 0).
  double target_lambda = 0.0;
  std::vector<double> source_lambdas;
  // False when a fold refit failed; the target is then dropped from CV.
  bool target_folds_ok = true;

  std::size_t candidates() const { return sources.size() + 1; }
  Eigen::Index dim() const { return target_full.beta.size(); }
};

// Fits one source on its own rows only. Takes the dataset by value: this is
// the only code path that sees source data, and it never sees target data.
FitResult fit_source(DomainDataset source, const BankOptions& opts, double* lambda_used = nullptr);

CandidateBank build_bank(const DomainDataset& target, std::vector<DomainDataset> sources,
                         const FoldPlan& folds, const BankOptions& opts);

// Mean PU negative log-likelihood of eta(w) = P w over a fixed set of rows,
// plus a constant offset:
//
//   value(w) = (1/n) sum_i [ -z_i h(eta_i(w)) + g(eta_i(w); b) ] + offset.
//
// CV(w) and the estimated KL divergence are both of this form.
class SimplexObjective {
 public:
  SimplexObjective(Eigen::MatrixXd predictors, std::vector<int> z, double b, double offset);

  Eigen::Index candidates() const { return predictors_.cols(); }
  const Eigen::MatrixXd& predictors() const { return predictors_; }
  double value(const Eigen::VectorXd& w) const;
  double evaluate(const Eigen::VectorXd& w, Eigen::VectorXd& grad) const;

 private:
  Eigen::MatrixXd predictors_;
  Eigen::VectorXd z_;
  double log1p_b_;
  double offset_;
};

// CV(w): row i uses the fold-complement target fit of its own fold in column 0
// and the source fits in columns 1..M; g and c use b_full.
SimplexObjective cv_objective(const CandidateBank& bank, const DomainDataset& target,
                              const FoldPlan& folds);

struct CvValue {
  double value = 0.0;
  Eigen::VectorXd grad;
};
CvValue cv_criterion(const Eigen::VectorXd& w, const CandidateBank& bank,
                     const DomainDataset& target, const FoldPlan& folds);

struct WeightOptions {
  int max_iters = 5000;
  double tol = 1e-8;  // infinity norm of the unit-step gradient mapping
  double tie_tol = 1e-10;
};

struct WeightVector {
  Eigen::VectorXd w;
  double cv_value = 0.0;
  int iters = 0;
  int starts = 0;
  int start_index = 0;
  double grad_mapping = 0.0;
  std::vector<double> vertex_values;  // objective at e_0 .. e_M
  bool target_excluded = false;
};

// Euclidean projection onto the probability simplex (sort-based).
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

// Minimizes `objective` over the simplex by projected gradient with
// backtracking, from every vertex and from the uniform point. When
// `exclude_first` is set, w_0 is pinned to 0.
WeightVector minimize_on_simplex(const SimplexObjective& objective, const WeightOptions& opts = {},
                                 bool exclude_first = false);

WeightVector solve_weights(const CandidateBank& bank, const DomainDataset& target,
                           const FoldPlan& folds, const WeightOptions& opts = {});

// sum_m w_m beta_m with the full-target fit at position 0.
CoefficientVector averaged_coefficients(const Eigen::VectorXd& w, const CandidateBank& bank);
CoefficientVector averaged_coefficients(const WeightVector& w, const CandidateBank& bank);

// Logistic probability, kept strictly inside (0, 1).
double predict_proba(const CoefficientVector& beta, const Eigen::VectorXd& x);
Eigen::VectorXd predict_proba_rows(const CoefficientVector& beta, const Eigen::MatrixXd& x);

}  // namespace putl
