#pragma once

// Simulation harness: data-generating processes, domain sampling from finite
// populations, and the replication runner comparing Single-PU, Oracle,
// Equal-Weighted and model-averaged transfer on a shared test set.

#include "putl/averaging.hpp"
#include "putl/dataset.hpp"
#include "putl/estimation.hpp"
#include "putl/metrics.hpp"
#include "putl/rng.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace putl {

enum class Link { logit, probit };

// Standard normal CDF.
double normal_cdf(double x);

// The coefficient vectors used by the preset cases (1-based `which`, 1..5).
//   1: five ones, then zeros          2: (0, 1) repeated
//   3: five ones, zeros, last = 0.5   4: (1, 0, 1, 0, 1), then zeros
//   5: zeros, then five ones
Eigen::VectorXd named_beta(int which, int p);

struct DgpSpec {
  int p = 10;
  double rho = 0.3;  // Sigma_ij = rho^|i-j|
  Link link = Link::logit;
  Eigen::VectorXd beta_true;
  int population_size = 100000;

  void validate() const;
};

struct Population {
  Eigen::MatrixXd x;
  std::vector<int> y;
  double pi1 = 0.0;  // positive fraction
};

Eigen::MatrixXd ar1_covariance(int p, double rho);
Population generate_population(const DgpSpec& dgp, std::uint64_t seed);

struct DomainSpec {
  std::string id;
  Scheme scheme = Scheme::pu;
  int population = 0;  // index into CaseConfig::populations
  int n = 0;           // 0: take n from the case grid
  bool drop_last_covariate = false;
};

// Rows drawn from a population plus the label indicator of the draw.
struct Draw {
  Scheme scheme = Scheme::pu;
  std::vector<Eigen::Index> rows;
  std::vector<int> z;  // PU/Semi only
};

// Draws without replacement; rows handed out once are never handed out again,
// so every domain and test set drawn from one sampler is disjoint.
class PopulationSampler {
 public:
  explicit PopulationSampler(const Population& pop);
  PopulationSampler(Population&&) = delete;

  // Binary: n uniform rows. PU: round(n p_L) positives labeled, the rest from
  // the remaining rows unlabeled. Semi: n uniform rows, round(n p_L) of them
  // keep their labels.
  Draw draw(Scheme scheme, int n, double p_L, Rng& rng);
  long remaining() const { return remaining_; }
  const Population& population() const { return *pop_; }

 private:
  std::vector<Eigen::Index> take(std::vector<Eigen::Index>& pool, long count, Rng& rng);

  const Population* pop_;
  std::vector<char> taken_;
  long remaining_;
};

DomainDataset materialize(const Population& pop, const Draw& draw, std::string id,
                          bool drop_last_covariate);
std::vector<int> true_labels(const Population& pop, const Draw& draw);

DomainDataset sample_domain(PopulationSampler& sampler, const DomainSpec& spec, int n, double p_L,
                            std::uint64_t seed);

enum class Method { single_pu = 0, oracle = 1, equal_weighted = 2, tlma_pu = 3 };
inline constexpr std::array<Method, 4> kMethods = {Method::single_pu, Method::oracle,
                                                   Method::equal_weighted, Method::tlma_pu};
std::string_view to_string(Method method);

struct CaseConfig {
  std::string name;
  std::vector<DgpSpec> populations;
  DomainSpec target;
  std::vector<DomainSpec> sources;
  std::vector<int> n_grid = {400, 800, 1600};
  std::vector<double> pl_grid = {0.3, 0.4};
  int reps = 100;
  int n_test = 500;
  int n_kl = 3000;           // evaluation rows of the KL diagnostic
  int folds = 5;
  std::uint64_t seed = 1;
  double threshold = 0.5;
  Link oracle_link = Link::logit;
  bool kl_diagnostic = false;
  bool compute_rkl = true;
  std::vector<std::string> uninformative;
  BankOptions bank;
  int threads = 1;

  void validate() const;
  // Stable text form of every setting; hashed for provenance.
  std::string canonical() const;
};

// Preset scenarios: 1 (omitted covariate), 2 (correct specification),
// 3 (probit truth), and "hd": p = 400, l1 fits, one sparse informative source.
CaseConfig case_preset(std::string_view name);

struct ReplicationReport {
  int n = 0;
  double p_L = 0.0;
  int rep = 0;
  bool ok = true;
  std::string error;
  std::array<EvalReport, 4> methods{};
  std::vector<std::string> candidate_ids;
  Eigen::VectorXd weights;
  double cv_value = kMissing;
  double cv_uniform = kMissing;
  double uninformative_weight = kMissing;  // l1 norm of weights on uninformative sources
  double kl_ratio = kMissing;

  const EvalReport& of(Method m) const { return methods[static_cast<int>(m)]; }
};

// Everything one replication evaluates methods against. Not movable: the RKL
// evaluator refers to the test set stored alongside it.
struct ReplicationContext {
  ReplicationContext() = default;
  ReplicationContext(const ReplicationContext&) = delete;
  ReplicationContext& operator=(const ReplicationContext&) = delete;

  const CaseConfig* cfg = nullptr;
  std::unique_ptr<DomainDataset> target;  // working covariates
  Eigen::MatrixXd target_all_features;    // every covariate (Oracle)
  std::vector<int> target_y;
  std::vector<DomainDataset> sources;
  FoldPlan folds;
  CandidateBank bank;
  WeightVector weights;
  std::unique_ptr<DomainDataset> test;
  Eigen::MatrixXd test_all_features;
  std::vector<int> test_y;
  double test_b = 0.0;
  std::unique_ptr<RklEvaluator> rkl;
  // KL diagnostic inputs.
  Eigen::VectorXd kl_eta;
  Eigen::MatrixXd kl_rows;
  std::vector<int> kl_z;
  double kl_b = 0.0;
};

std::unique_ptr<ReplicationContext> build_context(const CaseConfig& cfg, int n, double p_L,
                                                  int rep);

// Fits the named method on the context and evaluates it on the test set.
EvalReport run_baseline(Method method, const ReplicationContext& ctx);

// Binary probit MLE (the Oracle's fit under probit truth).
FitResult fit_probit(const DomainDataset& data, const FitOptions& opts);

ReplicationReport run_replication(const CaseConfig& cfg, int n, double p_L, int rep);

struct CaseRun {
  std::vector<ReplicationReport> reports;  // ordered by (n, p_L, rep)
  long failures = 0;
  bool batch_failed = false;  // more than 10% of replications failed
};
CaseRun run_case(const CaseConfig& cfg);

struct SummaryRow {
  int n = 0;
  double p_L = 0.0;
  std::string method;
  std::string metric;
  long count = 0;
  double median = kMissing;
  double q1 = kMissing;
  double q3 = kMissing;
};
std::vector<SummaryRow> summarize(const CaseRun& run);

// Median of the finite values (NaN if none).
double median(std::vector<double> values);
double quantile(std::vector<double> values, double q);

}  // namespace putl
