#ifndef MED_PERMUTATION_HPP
#define MED_PERMUTATION_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "med/dataset.hpp"
#include "med/smoother.hpp"

namespace med {

struct TestConfig {
  SmootherConfig smoother;
  // total permutation budget S, counting the observed statistic; S-1 random
  // relabelings are drawn, and the p-value lives on the lattice {1/S..S/S}
  int permutations = 200;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = all hardware threads
  bool keep_permuted = false;

  void validate() const;  // throws DataError
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool reject = false;
  std::vector<double> permuted_statistics;  // S-1 values when retained
  std::uint64_t seed = 0;
};

// Reorders whole subjects: perm[k] is the position in the concatenated
// (x then y) subject list that lands at slot k; the first n slots form the
// new X group. Subject sizes n and m are preserved.
TwoSampleDataset apply_permutation(const TwoSampleDataset& ds,
                                   const std::vector<std::size_t>& perm);

// (1 + count_ge) / total: the permutation p-value with the observed statistic
// counted once in both numerator and denominator.
double p_value_from_counts(std::size_t count_ge, int total);

using StatisticFn = std::function<double(const TwoSampleDataset&)>;

// Subject-relabeling permutation test. Replicate l derives its own RNG
// stream from (config.seed, l), so results are identical for any worker
// count. A statistic failure on replicate l is rethrown with l attached.
TestResult permutation_test(const TwoSampleDataset& ds, const TestConfig& config,
                            const StatisticFn& statistic);

}  // namespace med

#endif
