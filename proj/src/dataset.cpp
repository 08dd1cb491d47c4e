#include "putl/dataset.hpp"

#include "putl/error.hpp"

#include <cmath>
#include <type_traits>
#include <utility>
#include <variant>

namespace putl {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::binary:
      return "binary";
    case Scheme::pu:
      return "pu";
    case Scheme::semi:
      return "semi";
  }
  return "?";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "binary") return Scheme::binary;
  if (text == "pu") return Scheme::pu;
  if (text == "semi") return Scheme::semi;
  throw DataError("unknown label scheme '" + std::string(text) + "' (expected binary, pu or semi)");
}

namespace {

void check_binary_vector(const std::vector<int>& v, const char* name, const std::string& id) {
  for (int value : v) {
    if (value != 0 && value != 1) {
      throw DataError("domain '" + id + "': " + name + " must be 0 or 1");
    }
  }
}

}  // namespace

DomainDataset::DomainDataset(std::string id, Eigen::MatrixXd features, LabelScheme labels,
                             double pi1, bool intercept)
    : id_(std::move(id)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      pi1_(pi1),
      intercept_(intercept) {
  validate();
}

DomainDataset DomainDataset::binary(std::string id, Eigen::MatrixXd features, std::vector<int> y,
                                    double pi1, bool intercept) {
  return DomainDataset(std::move(id), std::move(features), BinaryLabels{std::move(y)}, pi1,
                       intercept);
}

DomainDataset DomainDataset::pu(std::string id, Eigen::MatrixXd features, std::vector<int> z,
                                double pi1, bool intercept) {
  return DomainDataset(std::move(id), std::move(features), PuLabels{std::move(z)}, pi1,
                       intercept);
}

DomainDataset DomainDataset::semi(std::string id, Eigen::MatrixXd features, std::vector<int> z,
                                  std::vector<std::optional<int>> y, double pi1, bool intercept) {
  return DomainDataset(std::move(id), std::move(features),
                       SemiLabels{std::move(z), std::move(y)}, pi1, intercept);
}

Scheme DomainDataset::scheme() const {
  switch (labels_.index()) {
    case 0:
      return Scheme::binary;
    case 1:
      return Scheme::pu;
    default:
      return Scheme::semi;
  }
}

void DomainDataset::validate() const {
  const auto n = static_cast<std::size_t>(features_.rows());
  if (!(pi1_ > 0.0 && pi1_ < 1.0)) {
    throw DataError("domain '" + id_ + "': class prior pi1 must lie in (0, 1)");
  }
  if (features_.rows() == 0 || features_.cols() == 0) {
    throw DataError("domain '" + id_ + "': empty feature matrix");
  }
  if (!features_.allFinite()) {
    throw DataError("domain '" + id_ + "': non-finite feature value");
  }
  if (intercept_ && !(features_.col(0).array() == 1.0).all()) {
    throw DataError("domain '" + id_ + "': intercept column 0 must be all ones");
  }
  if (const auto* b = std::get_if<BinaryLabels>(&labels_)) {
    if (b->y.size() != n) throw DataError("domain '" + id_ + "': y length differs from row count");
    check_binary_vector(b->y, "y", id_);
  } else if (const auto* p = std::get_if<PuLabels>(&labels_)) {
    if (p->z.size() != n) throw DataError("domain '" + id_ + "': z length differs from row count");
    check_binary_vector(p->z, "z", id_);
    long labeled = 0;
    for (int z : p->z) labeled += z;
    if (labeled == 0 || labeled == static_cast<long>(n)) {
      throw DataError("domain '" + id_ +
                      "': degenerate PU dataset (needs both labeled and unlabeled rows)");
    }
  } else {
    const auto& s = std::get<SemiLabels>(labels_);
    if (s.z.size() != n || s.y.size() != n) {
      throw DataError("domain '" + id_ + "': label lengths differ from row count");
    }
    check_binary_vector(s.z, "z", id_);
    for (std::size_t i = 0; i < n; ++i) {
      if (s.z[i] == 1) {
        if (!s.y[i] || (*s.y[i] != 0 && *s.y[i] != 1)) {
          throw DataError("domain '" + id_ + "': labeled semi-supervised row " +
                          std::to_string(i) + " needs y in {0, 1}");
        }
      } else if (s.y[i]) {
        throw DataError("domain '" + id_ + "': unlabeled semi-supervised row " +
                        std::to_string(i) + " carries a y value");
      }
    }
  }
}

const std::vector<int>& DomainDataset::indicator() const {
  if (const auto* b = std::get_if<BinaryLabels>(&labels_)) return b->y;
  if (const auto* p = std::get_if<PuLabels>(&labels_)) return p->z;
  return std::get<SemiLabels>(labels_).z;
}

LabelCounts DomainDataset::counts() const {
  LabelCounts c;
  if (const auto* b = std::get_if<BinaryLabels>(&labels_)) {
    for (int y : b->y) (y == 1 ? c.n_labeled_pos : c.n_labeled_neg)++;
    c.n_labeled = c.n_labeled_pos + c.n_labeled_neg;
  } else if (const auto* p = std::get_if<PuLabels>(&labels_)) {
    for (int z : p->z) (z == 1 ? c.n_labeled : c.n_unlabeled)++;
    c.n_labeled_pos = c.n_labeled;
  } else {
    const auto& s = std::get<SemiLabels>(labels_);
    for (std::size_t i = 0; i < s.z.size(); ++i) {
      if (s.z[i] == 1) {
        (*s.y[i] == 1 ? c.n_labeled_pos : c.n_labeled_neg)++;
      } else {
        c.n_unlabeled++;
      }
    }
    c.n_labeled = c.n_labeled_pos + c.n_labeled_neg;
  }
  return c;
}

DomainDataset DomainDataset::subset(std::span<const Eigen::Index> rows) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), features_.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) x.row(static_cast<Eigen::Index>(k)) = features_.row(rows[k]);
  const auto pick = [&rows](const auto& v) {
    std::remove_cvref_t<decltype(v)> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(v[static_cast<std::size_t>(r)]);
    return out;
  };
  LabelScheme labels = std::visit(
      [&](const auto& l) -> LabelScheme {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, BinaryLabels>) {
          return BinaryLabels{pick(l.y)};
        } else if constexpr (std::is_same_v<T, PuLabels>) {
          return PuLabels{pick(l.z)};
        } else {
          return SemiLabels{pick(l.z), pick(l.y)};
        }
      },
      labels_);
  return DomainDataset(id_, std::move(x), std::move(labels), pi1_, intercept_);
}

DomainDataset DomainDataset::with_features(Eigen::MatrixXd features, bool intercept) const {
  if (features.rows() != features_.rows()) {
    throw DataError("domain '" + id_ + "': replacement features change the row count");
  }
  return DomainDataset(id_, std::move(features), labels_, pi1_, intercept);
}

DomainDataset DomainDataset::with_id(std::string id) const {
  return DomainDataset(std::move(id), features_, labels_, pi1_, intercept_);
}

}  // namespace putl
