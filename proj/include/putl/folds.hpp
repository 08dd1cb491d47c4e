#pragma once

#include "putl/dataset.hpp"

#include <cstdint>
#include <vector>

namespace putl {

// Row-to-fold map. Folds are 0-based. Each stratum (value of the label
// indicator) is shuffled and dealt round-robin, so fold sizes within a
// stratum differ by at most one.
struct FoldPlan {
  int folds = 0;
  std::vector<int> assignment;  // fold of each row
  std::vector<int> strata;      // indicator value of each row

  std::vector<Eigen::Index> held_out(int fold) const;
  std::vector<Eigen::Index> complement(int fold) const;
  // Rows of `stratum` in `fold`.
  long count(int fold, int stratum) const;
};

FoldPlan stratified_folds(const std::vector<int>& strata, int folds, std::uint64_t seed);

// Target split: needs a PU dataset with at least `folds` rows per stratum.
FoldPlan make_folds(const DomainDataset& target, int folds, std::uint64_t seed);

}  // namespace putl
