#include "putl/folds.hpp"

#include "putl/error.hpp"
#include "putl/rng.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace putl {

std::vector<Eigen::Index> FoldPlan::held_out(int fold) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) rows.push_back(static_cast<Eigen::Index>(i));
  }
  return rows;
}

std::vector<Eigen::Index> FoldPlan::complement(int fold) const {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) rows.push_back(static_cast<Eigen::Index>(i));
  }
  return rows;
}

long FoldPlan::count(int fold, int stratum) const {
  long c = 0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold && strata[i] == stratum) ++c;
  }
  return c;
}

FoldPlan stratified_folds(const std::vector<int>& strata, int folds, std::uint64_t seed) {
  if (folds < 2) throw DataError("need at least 2 folds");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < strata.size(); ++i) members[strata[i]].push_back(i);
  for (const auto& [stratum, rows] : members) {
    if (static_cast<long>(rows.size()) < folds) {
      throw DataError("stratum " + std::to_string(stratum) + " has " +
                      std::to_string(rows.size()) + " rows, fewer than the " +
                      std::to_string(folds) + " folds requested");
    }
  }
  FoldPlan plan;
  plan.folds = folds;
  plan.strata = strata;
  plan.assignment.assign(strata.size(), -1);
  Rng rng = make_rng(seed, {0xf01dULL});
  // Continue the round-robin across strata so leftover rows do not all land
  // in the first folds.
  std::size_t dealt = 0;
  for (auto& [stratum, rows] : members) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t row : rows) {
      plan.assignment[row] = static_cast<int>(dealt % static_cast<std::size_t>(folds));
      ++dealt;
    }
  }
  return plan;
}

FoldPlan make_folds(const DomainDataset& target, int folds, std::uint64_t seed) {
  if (target.scheme() != Scheme::pu) throw DataError("target domain must use the PU scheme");
  return stratified_folds(target.indicator(), folds, seed);
}

}  // namespace putl
