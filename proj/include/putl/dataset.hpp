#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace putl {

enum class Scheme { binary, pu, semi };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view text);

// Fully labeled rows.
struct BinaryLabels {
  std::vector<int> y;
};

// Labeled positives (z = 1) plus unlabeled rows (z = 0).
struct PuLabels {
  std::vector<int> z;
};

// Labeled rows of both classes plus unlabeled rows; y is set exactly where z = 1.
struct SemiLabels {
  std::vector<int> z;
  std::vector<std::optional<int>> y;
};

using LabelScheme = std::variant<BinaryLabels, PuLabels, SemiLabels>;

// Row counts consumed by the nuisance-constant formulas.
struct LabelCounts {
  long n_labeled = 0;
  long n_unlabeled = 0;
  long n_labeled_neg = 0;
  long n_labeled_pos = 0;
};

// One domain's covariates and labels. Immutable once built; the factories
// validate every invariant and throw DataError on violation.
//
// When `intercept` is set, column 0 must be the constant-1 column.
class DomainDataset {
 public:
  static DomainDataset binary(std::string id, Eigen::MatrixXd features, std::vector<int> y,
                              double pi1, bool intercept = false);
  static DomainDataset pu(std::string id, Eigen::MatrixXd features, std::vector<int> z,
                          double pi1, bool intercept = false);
  static DomainDataset semi(std::string id, Eigen::MatrixXd features, std::vector<int> z,
                            std::vector<std::optional<int>> y, double pi1,
                            bool intercept = false);

  const std::string& id() const { return id_; }
  const Eigen::MatrixXd& features() const { return features_; }
  const LabelScheme& labels() const { return labels_; }
  Scheme scheme() const;
  double pi1() const { return pi1_; }
  bool has_intercept() const { return intercept_; }
  Eigen::Index rows() const { return features_.rows(); }
  Eigen::Index cols() const { return features_.cols(); }

  // z for PU and Semi, y for Binary. Used for stratified splitting.
  const std::vector<int>& indicator() const;
  LabelCounts counts() const;

  DomainDataset subset(std::span<const Eigen::Index> rows) const;
  // Same labels, different covariates (for column drops or rescaling).
  DomainDataset with_features(Eigen::MatrixXd features, bool intercept) const;
  DomainDataset with_id(std::string id) const;

 private:
  DomainDataset(std::string id, Eigen::MatrixXd features, LabelScheme labels, double pi1,
                bool intercept);
  void validate() const;

  std::string id_;
  Eigen::MatrixXd features_;
  LabelScheme labels_;
  double pi1_ = 0.5;
  bool intercept_ = false;
};

struct CoefficientVector {
  Eigen::VectorXd beta;
  bool includes_intercept = false;

  Eigen::Index size() const { return beta.size(); }
};

}  // namespace putl
