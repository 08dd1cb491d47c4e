#pragma once

// Scalar link functions of the PU likelihood and the per-domain nuisance
// constants.
//
//   h(t)    = t - log(1 + e^t)
//   g(t, b) = log(1 + (1 + b) e^t) - log(1 + e^t)
//   c(z, b) = z log b
//
// so that one PU observation contributes z h(eta) - g(eta) + c(z, b) to the
// log-likelihood. Everything here is overflow-safe for any finite argument.

#include "putl/dataset.hpp"

#include <cmath>

namespace putl {

// log(1 + e^t) without overflow.
inline double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double link_h(double t) { return -softplus(-t); }

// g with log(1 + b) precomputed; the hot loops call this form.
inline double link_g_shifted(double t, double log1p_b) {
  return softplus(t + log1p_b) - softplus(t);
}

inline double link_g(double t, double b) { return link_g_shifted(t, std::log1p(b)); }

// Throws NumericalError("degenerate PU constant") for z = 1, b = 0.
double link_c(int z, double b);

struct LinkDerivatives {
  double h1 = 0.0;  // h'(t)  = 1 - s
  double h2 = 0.0;  // h''(t) = -s (1 - s)
  double g1 = 0.0;  // g'(t)  = s_b - s
  double g2 = 0.0;  // g''(t) = s_b (1 - s_b) - s (1 - s)
};

// s = sigmoid(t), s_b = sigmoid(t + log(1 + b)).
LinkDerivatives link_derivs(double t, double b);

struct LinkConstants {
  double b = 0.0;   // PU
  double h0 = 0.0;  // semi-supervised
  double h1 = 0.0;
  double nu = 0.0;
  LabelCounts counts;
};

// b = n_L / (pi1 n_U). Throws DataError("degenerate PU dataset") on empty strata.
LinkConstants pu_constant(long n_labeled, long n_unlabeled, double pi1);

// h0 = n_L0 / (n_L0 + pi0 n_U), h1 = n_L1 / (n_L1 + pi1 n_U) and the offset
// nu = log[(n_L1 + pi1 n_U) pi0] - log[(n_L0 + pi0 n_U) pi1].
LinkConstants semi_constants(long n_labeled_neg, long n_labeled_pos, long n_unlabeled,
                             double pi1);

// Constants from the dataset's own counts; all zero for Binary.
LinkConstants constants_for(const DomainDataset& data);

}  // namespace putl
