#ifndef MED_NOISE_HPP
#define MED_NOISE_HPP

#include <cstdint>
#include <vector>

#include "med/curve.hpp"
#include "med/dataset.hpp"
#include "med/permutation.hpp"
#include "med/smoother.hpp"

namespace med {

// Measurement-error diagnostics for both groups. raw_diag smooths squared
// centered residuals, so it targets Var Z(t) + sigma^2; cov_diag smooths
// within-subject off-diagonal products, which are noise-free, so the gap
// between the two curves is the error variance.
struct NoiseEstimate {
  double sigma2_x = 0.0, sigma2_y = 0.0;  // clamped at zero
  DiagonalCurve mean_curve_x, mean_curve_y;
  DiagonalCurve cov_diag_x, cov_diag_y;
  DiagonalCurve raw_diag_x, raw_diag_y;
};

// Local-linear estimate of a group's mean function on the uniform grid.
// Pooled fit over all observations, each subject weighted 1/N_i so heavily
// sampled subjects do not dominate. Empty windows expand like the surface
// smoother; a window that stays empty raises DegenerateWindow.
DiagonalCurve estimate_mean_function(const std::vector<SubjectRecord>& sample,
                                     double bandwidth, std::size_t grid_size,
                                     KernelFamily kernel = KernelFamily::epanechnikov,
                                     double expand_factor = 1.5, int max_expansions = 3);

// Error variance of one group: mean over grid times in [0.25, 0.75] of
// raw_diag(t) - cov_diag(t), clamped at zero. Bandwidths for the mean,
// residual, and covariance smooths are chosen from the pooled observation
// count (config.hx and config.hy are the test's surface bandwidths and are
// deliberately not reused; the variance curves need smaller windows).
// Throws InsufficientPairs when no subject has two observations.
double estimate_noise_variance(const std::vector<SubjectRecord>& sample,
                               const SmootherConfig& config);

// Both groups plus the diagnostic curves behind the two sigma2 values.
NoiseEstimate estimate_noise(const TwoSampleDataset& ds, const SmootherConfig& config);

// Error augmentation: adds i.i.d. N(0, |sigma2_x - sigma2_y|) draws to every
// observation value of the lower-variance group; the other group, all times,
// ids and counts are untouched. Equal variances return the input unchanged.
TwoSampleDataset augment_errors(const TwoSampleDataset& ds, double sigma2_x,
                                double sigma2_y, std::uint64_t seed);

// Full test under measurement error. equal_error_assumed runs the plain
// permutation test on the data as given (valid when both groups share one
// error law). Otherwise the two variances are estimated, the lower-variance
// group is augmented once, and the permutation test runs on the augmented
// dataset; permutations shuffle augmented subjects. The augmentation stream
// is derived from config.seed, so a seed fixes the whole procedure. When
// noise_out is non-null the estimates are stored there (in augment mode
// always; in equal-error mode they are computed only for the report).
TestResult med_test_with_noise(const TwoSampleDataset& ds, const TestConfig& config,
                               bool equal_error_assumed,
                               NoiseEstimate* noise_out = nullptr);

}  // namespace med

#endif
