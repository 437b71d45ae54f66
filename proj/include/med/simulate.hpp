#ifndef MED_SIMULATE_HPP
#define MED_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "med/dataset.hpp"
#include "med/permutation.hpp"

namespace med {

enum class SimFamily { example1, example2, gaussian_scale };

SimFamily family_from_name(std::string_view name);  // throws DataError
std::string family_name(SimFamily f);

// Synthetic two-sample designs. The X group is always the two-harmonic
// process xi1*(-cos 2 pi t) + xi2*sin(2 pi t) with standard normal scores,
// which has unit variance at every t. Families differ in the Y group:
//   example1       same law as X (null case)
//   example2       Y = s1*t^2 + s2*sqrt(1-t^4) with symmetric two-component
//                  Gaussian mixture scores (mu_s, sigma_s)
//   gaussian_scale Y uses X's shapes with scores scaled by y_scale, making
//                  Y(t) marginally N(0, y_scale^2)
struct SimDesign {
  SimFamily family = SimFamily::example1;
  std::size_t n = 100, m = 70;
  int N_low = 2, N_high = 10;   // per-subject observation count range
  double sigma1 = 0.0, sigma2 = 0.0;  // measurement noise sd per group
  double mu_s = 0.98, sigma_s = 0.199;
  int dense_grid = 0;  // > 0: every subject observed on that shared grid
  bool enforce_equal_variance = true;
  double y_scale = 2.0;  // gaussian_scale only

  void validate() const;  // throws DataError
};

TwoSampleDataset gen_example1(const SimDesign& d, std::uint64_t seed);
TwoSampleDataset gen_example2(const SimDesign& d, std::uint64_t seed);
TwoSampleDataset gen_gaussian_scale(const SimDesign& d, std::uint64_t seed);

// dispatch on d.family
TwoSampleDataset generate(const SimDesign& d, std::uint64_t seed);

// Exact binomial (Clopper-Pearson) confidence interval for k successes in n.
struct Interval {
  double lo = 0.0, hi = 1.0;
};
Interval binomial_ci(int k, int n, double confidence = 0.95);

struct RejectionSummary {
  double rate = 0.0;
  Interval ci;
  std::vector<double> p_values;  // one per replication
  int reps = 0;
};

// Monte Carlo rejection rate of the marginal test on the design. Each
// replication draws a fresh dataset (and fresh augmentation noise) from a
// stream derived from (seed, replication); unequal design sigmas switch the
// test into augment mode, equal sigmas into the plain equal-errors test.
// test.threads parallelizes across replications; each inner test runs
// single-threaded so results never depend on the worker count.
RejectionSummary monte_carlo_rejection_rate(const SimDesign& d, const TestConfig& test,
                                            int reps, std::uint64_t seed);

}  // namespace med

#endif
