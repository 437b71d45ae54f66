#ifndef MED_PIPELINE_HPP
#define MED_PIPELINE_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "med/dataset.hpp"
#include "med/med.hpp"
#include "med/noise.hpp"
#include "med/permutation.hpp"

namespace med {

// How measurement error is treated by an end-to-end run:
//   none          plain test, no error diagnostics at all
//   equal_errors  plain test; variances are estimated for the report only
//                 (valid when both groups share one error law)
//   augment       estimate both variances, add noise to the lower-variance
//                 group once, then test the augmented data
enum class NoiseMode { none, equal_errors, augment };

NoiseMode noise_mode_from_name(std::string_view name);  // throws DataError
std::string noise_mode_name(NoiseMode mode);

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

// Everything needed to archive or replay one run: the input's content
// digest, the configuration echo (seed included), the error-variance
// estimates when the mode produced them, the test result, and the three
// diagonal curves behind the statistic. Reruns with the same input, config
// and mode agree byte for byte except for timings.
struct RunReport {
  std::string input_digest;
  NoiseMode noise_mode = NoiseMode::equal_errors;
  TestConfig config;
  std::optional<NoiseEstimate> noise;
  TestResult result;
  std::optional<MedBreakdown> curves;
  std::vector<StageTiming> timings;
};

// End-to-end orchestration: validate, digest, handle measurement error per
// the mode, compute the curve breakdown, run the permutation test. Stage
// failures propagate with the stage name prefixed to the message. In
// equal_errors mode a numerical failure inside the (report-only) variance
// estimation is swallowed and the noise field stays empty; in augment mode
// the estimate is load-bearing and every error propagates. The curves in
// augment mode describe the augmented data, which is what the test saw.
RunReport run_med_test(const TwoSampleDataset& ds, const TestConfig& config,
                       NoiseMode noise_mode = NoiseMode::equal_errors);

// Writes g1.csv (cross), g2.csv (within first sample), g3.csv (within
// second sample) and integrand.csv (2*g1 - g2 - g3) into dir, creating it
// if needed. Values round-trip exactly through curve_from_csv. Throws
// NoCurves when the report has no curves, DataError on I/O failure.
void export_curves(const RunReport& report, const std::string& dir);

// Deterministic JSON rendering (fixed key order, shortest round-trip
// doubles). include_timings=false drops the only nondeterministic section,
// which is what report equality checks should compare.
std::string report_to_json(const RunReport& report, bool include_timings = true);

std::string noise_estimate_to_json(const NoiseEstimate& est);

}  // namespace med

#endif
