#include "putl/links.hpp"

#include "putl/error.hpp"

#include <cmath>
#include <limits>
#include <variant>

namespace putl {

double link_c(int z, double b) {
  if (z == 0) return 0.0;
  if (!(b > 0.0)) throw NumericalError("degenerate PU constant: log(b) with b = 0");
  return static_cast<double>(z) * std::log(b);
}

LinkDerivatives link_derivs(double t, double b) {
  const double s = sigmoid(t);
  const double sb = sigmoid(t + std::log1p(b));
  // 1 - s computed as sigmoid(-t) keeps precision for large t.
  const double one_minus_s = sigmoid(-t);
  const double one_minus_sb = sigmoid(-(t + std::log1p(b)));
  LinkDerivatives d;
  d.h1 = one_minus_s;
  d.h2 = -s * one_minus_s;
  // Difference of the two small tails when they are the accurate pair.
  d.g1 = t > 0.0 ? one_minus_s - one_minus_sb : sb - s;
  d.g2 = sb * one_minus_sb - s * one_minus_s;
  return d;
}

LinkConstants pu_constant(long n_labeled, long n_unlabeled, double pi1) {
  if (n_labeled <= 0 || n_unlabeled <= 0) throw DataError("degenerate PU dataset");
  if (!(pi1 > 0.0 && pi1 < 1.0)) throw DataError("class prior pi1 must lie in (0, 1)");
  LinkConstants c;
  c.b = static_cast<double>(n_labeled) / (pi1 * static_cast<double>(n_unlabeled));
  c.counts.n_labeled = n_labeled;
  c.counts.n_unlabeled = n_unlabeled;
  c.counts.n_labeled_pos = n_labeled;
  return c;
}

LinkConstants semi_constants(long n_labeled_neg, long n_labeled_pos, long n_unlabeled,
                             double pi1) {
  if (n_labeled_neg <= 0 || n_labeled_pos <= 0 || n_unlabeled <= 0) {
    throw DataError("degenerate semi-supervised dataset");
  }
  if (!(pi1 > 0.0 && pi1 < 1.0)) throw DataError("class prior pi1 must lie in (0, 1)");
  const double pi0 = 1.0 - pi1;
  const double l0 = static_cast<double>(n_labeled_neg);
  const double l1 = static_cast<double>(n_labeled_pos);
  const double u = static_cast<double>(n_unlabeled);
  LinkConstants c;
  c.h0 = l0 / (l0 + pi0 * u);
  c.h1 = l1 / (l1 + pi1 * u);
  c.nu = std::log((l1 + pi1 * u) * pi0) - std::log((l0 + pi0 * u) * pi1);
  c.counts.n_labeled_neg = n_labeled_neg;
  c.counts.n_labeled_pos = n_labeled_pos;
  c.counts.n_labeled = n_labeled_neg + n_labeled_pos;
  c.counts.n_unlabeled = n_unlabeled;
  return c;
}

LinkConstants constants_for(const DomainDataset& data) {
  const LabelCounts counts = data.counts();
  switch (data.scheme()) {
    case Scheme::pu:
      return pu_constant(counts.n_labeled, counts.n_unlabeled, data.pi1());
    case Scheme::semi:
      return semi_constants(counts.n_labeled_neg, counts.n_labeled_pos, counts.n_unlabeled,
                            data.pi1());
    case Scheme::binary:
      break;
  }
  LinkConstants c;
  c.counts = counts;
  return c;
}

}  // namespace putl
