#include "med/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <type_traits>
#include <utility>

#include "json.hpp"
#include "med/errors.hpp"
#include "med/kernel.hpp"

namespace med {

namespace {

using ordered = nlohmann::ordered_json;

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  const auto dt = std::chrono::steady_clock::now() - t0;
  return std::chrono::duration<double, std::milli>(dt).count();
}

// Runs one pipeline stage, records its duration, and prefixes the stage
// name onto any data or numeric error so failures name where they happened.
template <typename F>
decltype(auto) run_stage(std::vector<StageTiming>& timings, const char* name, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
      std::forward<F>(f)();
      timings.push_back({name, elapsed_ms(t0)});
      return;
    } else {
      auto out = std::forward<F>(f)();
      timings.push_back({name, elapsed_ms(t0)});
      return out;
    }
  } catch (const DataError& e) {
    throw DataError("stage " + std::string(name) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError("stage " + std::string(name) + ": " + e.what());
  }
}

ordered curve_json(const DiagonalCurve& c) {
  return ordered{{"grid", c.grid}, {"values", c.values}};
}

ordered noise_json(const NoiseEstimate& est) {
  return ordered{{"sigma2_x", est.sigma2_x},
                 {"sigma2_y", est.sigma2_y},
                 {"mean_curve_x", curve_json(est.mean_curve_x)},
                 {"mean_curve_y", curve_json(est.mean_curve_y)},
                 {"raw_diag_x", curve_json(est.raw_diag_x)},
                 {"raw_diag_y", curve_json(est.raw_diag_y)},
                 {"cov_diag_x", curve_json(est.cov_diag_x)},
                 {"cov_diag_y", curve_json(est.cov_diag_y)}};
}

}  // namespace

NoiseMode noise_mode_from_name(std::string_view name) {
  if (name == "none") return NoiseMode::none;
  if (name == "equal_errors") return NoiseMode::equal_errors;
  if (name == "augment") return NoiseMode::augment;
  throw DataError("unknown noise mode '" + std::string(name) +
                  "' (expected none, equal_errors or augment)");
}

std::string noise_mode_name(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::none:
      return "none";
    case NoiseMode::equal_errors:
      return "equal_errors";
    case NoiseMode::augment:
      return "augment";
  }
  throw DataError("invalid noise mode value");
}

RunReport run_med_test(const TwoSampleDataset& ds, const TestConfig& config,
                       NoiseMode noise_mode) {
  config.validate();
  RunReport report;
  report.noise_mode = noise_mode;
  report.config = config;
  auto& timings = report.timings;

  run_stage(timings, "validate", [&] { require_valid(ds); });
  report.input_digest = run_stage(timings, "digest", [&] { return dataset_digest(ds); });

  const TwoSampleDataset* test_data = &ds;
  TwoSampleDataset augmented;
  switch (noise_mode) {
    case NoiseMode::none:
      break;
    case NoiseMode::equal_errors:
      run_stage(timings, "noise", [&] {
        try {
          report.noise = estimate_noise(ds, config.smoother);
        } catch (const NumericError&) {
          // diagnostics only here; the plain test does not need them
        }
      });
      break;
    case NoiseMode::augment:
      report.noise = run_stage(timings, "noise",
                               [&] { return estimate_noise(ds, config.smoother); });
      augmented = run_stage(timings, "augment", [&] {
        return augment_errors(ds, report.noise->sigma2_x, report.noise->sigma2_y,
                              config.seed);
      });
      test_data = &augmented;
      break;
  }

  report.curves = run_stage(
      timings, "curves", [&] { return med_breakdown(*test_data, config.smoother, config.threads); });
  report.result = run_stage(timings, "test", [&] {
    return permutation_test(*test_data, config, [&config](const TwoSampleDataset& d) {
      return med_statistic(d, config.smoother, 1);
    });
  });
  return report;
}

void export_curves(const RunReport& report, const std::string& dir) {
  if (!report.curves) throw NoCurves("report retained no curves to export");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
  const auto write = [&](const char* name, const DiagonalCurve& c) {
    const fs::path path = fs::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << curve_to_csv(c);
    out.flush();
    if (!out) throw DataError("failed while writing " + path.string());
  };
  write("g1.csv", report.curves->cross);
  write("g2.csv", report.curves->within_x);
  write("g3.csv", report.curves->within_y);
  write("integrand.csv", report.curves->integrand());
}

std::string report_to_json(const RunReport& report, bool include_timings) {
  ordered j;
  j["input_digest"] = report.input_digest;
  j["noise_mode"] = noise_mode_name(report.noise_mode);
  const auto& s = report.config.smoother;
  j["config"] = ordered{{"smoother", ordered{{"kernel", kernel_name(s.kernel)},
                                             {"h_x", s.h_x},
                                             {"h_y", s.h_y},
                                             {"grid_size", s.grid_size},
                                             {"cond_tol", s.cond_tol},
                                             {"expand_factor", s.expand_factor},
                                             {"max_expansions", s.max_expansions},
                                             {"shared_grid_fast_path", s.shared_grid_fast_path}}},
                        {"permutations", report.config.permutations},
                        {"alpha", report.config.alpha},
                        {"seed", report.config.seed},
                        {"threads", report.config.threads},
                        {"keep_permuted", report.config.keep_permuted}};
  if (report.noise)
    j["noise"] = noise_json(*report.noise);
  else
    j["noise"] = nullptr;
  j["result"] = ordered{{"statistic", report.result.statistic},
                        {"p_value", report.result.p_value},
                        {"reject", report.result.reject},
                        {"seed", report.result.seed},
                        {"permuted_statistics", report.result.permuted_statistics}};
  if (report.curves)
    j["curves"] = ordered{{"statistic", report.curves->statistic},
                          {"g1", curve_json(report.curves->cross)},
                          {"g2", curve_json(report.curves->within_x)},
                          {"g3", curve_json(report.curves->within_y)}};
  else
    j["curves"] = nullptr;
  if (include_timings) {
    ordered arr = ordered::array();
    for (const auto& t : report.timings)
      arr.push_back(ordered{{"stage", t.stage}, {"ms", t.ms}});
    j["timings"] = std::move(arr);
  }
  return j.dump(2) + "\n";
}

std::string noise_estimate_to_json(const NoiseEstimate& est) {
  return noise_json(est).dump(2) + "\n";
}

}  // namespace med
