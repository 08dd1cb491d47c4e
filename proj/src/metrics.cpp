#include "putl/metrics.hpp"

#include "putl/error.hpp"
#include "putl/links.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <variant>

namespace putl {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mid-ranks for tied scores give ties half credit.
  double rank_sum = 0.0;
  long positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += mid_rank;
        ++positives;
      }
    }
    i = j + 1;
  }
  const long negatives = static_cast<long>(n) - positives;
  if (positives == 0 || negatives == 0) throw DataError("AUC undefined: only one class present");
  const double p = static_cast<double>(positives);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

double auc_adj(std::span<const double> scores, std::span<const int> z, double pi1) {
  if (!(pi1 >= 0.0 && pi1 < 1.0)) throw DataError("AUC_adj needs pi1 in [0, 1)");
  const double naive = auc(scores, z);
  return (naive - pi1 / 2.0) / (1.0 - pi1);
}

ConfusionRates confusion_metrics(std::span<const double> scores, std::span<const int> labels,
                                 double threshold) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? tp : fn)++;
    } else {
      (predicted ? fp : tn)++;
    }
  }
  ConfusionRates out;
  if (!scores.empty()) {
    out.acc = static_cast<double>(tp + tn) / static_cast<double>(scores.size());
  }
  if (tp + fn > 0) out.tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (fp + tn > 0) out.fpr = static_cast<double>(fp) / static_cast<double>(fp + tn);
  return out;
}

namespace {

LinkConstants with_b(const DomainDataset& test, double b) {
  if (test.scheme() != Scheme::pu) throw DataError("RKL needs a PU test set");
  LinkConstants c = constants_for(test);
  c.b = b;
  return c;
}

}  // namespace

RklEvaluator::RklEvaluator(const DomainDataset& test, double b, const FitOptions& opts)
    : objective_(test, with_b(test, b)), sup_([&] {
        try {
          return fit_mle(objective_, opts);
        } catch (const NumericalError& e) {
          throw NumericalError(std::string("RKL: test-set MLE failed: ") + e.what());
        }
      }()),
      sup_loglik_(-objective_.sum_value(sup_.beta.beta)) {}

double RklEvaluator::operator()(const CoefficientVector& beta_hat) const {
  const double loglik = -objective_.sum_value(beta_hat.beta);
  return 100.0 * (sup_loglik_ - loglik) / static_cast<double>(objective_.rows());
}

double rkl(const CoefficientVector& beta_hat, const DomainDataset& test, double b,
           const FitOptions& opts) {
  return RklEvaluator(test, b, opts)(beta_hat);
}

SimplexObjective kl_objective(const CandidateBank& bank, const Eigen::VectorXd& oracle_eta,
                              const Eigen::MatrixXd& eval_rows, std::span<const int> z, double b) {
  const Eigen::Index n = eval_rows.rows();
  if (oracle_eta.size() != n || static_cast<Eigen::Index>(z.size()) != n) {
    throw DataError("KL inputs disagree on the number of evaluation rows");
  }
  if (eval_rows.cols() != bank.dim()) throw DataError("evaluation rows have the wrong dimension");
  const auto M = static_cast<Eigen::Index>(bank.sources.size());
  Eigen::MatrixXd predictors(n, M + 1);
  predictors.col(0) = eval_rows * bank.target_full.beta.beta;
  for (Eigen::Index m = 0; m < M; ++m) {
    predictors.col(m + 1) = eval_rows * bank.sources[static_cast<std::size_t>(m)].beta.beta;
  }
  const double log1p_b = std::log1p(b);
  double oracle = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    oracle += z[static_cast<std::size_t>(i)] * link_h(oracle_eta[i]) -
              link_g_shifted(oracle_eta[i], log1p_b);
  }
  return SimplexObjective(std::move(predictors), std::vector<int>(z.begin(), z.end()), b,
                          oracle / static_cast<double>(n));
}

double estimated_kl(const Eigen::VectorXd& w, const CandidateBank& bank,
                    const Eigen::VectorXd& oracle_eta, const Eigen::MatrixXd& eval_rows,
                    std::span<const int> z, double b) {
  return kl_objective(bank, oracle_eta, eval_rows, z, b).value(w);
}

KlRatio kl_ratio(const Eigen::VectorXd& w, const SimplexObjective& kl) {
  KlRatio out;
  out.at_weights = kl.value(w);
  const WeightVector best = minimize_on_simplex(kl);
  out.minimizer = best.w;
  // The solver cannot beat a known point; keep the ratio's denominator honest.
  out.infimum = std::min(best.cv_value, out.at_weights);
  out.ratio = out.at_weights / out.infimum;
  return out;
}

}  // namespace putl
