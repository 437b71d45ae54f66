#include "med/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "med/errors.hpp"
#include "med/local_fit.hpp"
#include "med/med.hpp"
#include "med/rng.hpp"

namespace med {

namespace {

constexpr std::uint64_t kAugmentTag = 0x6175676dull;  // stream label

double clamped(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

// Bandwidths for the error-variance machinery, from the pooled observation
// count P and the within-subject pair count Q. These are deliberately
// smaller than the test's surface bandwidths: the variance gap needs tight
// local fits, not a stable global surface. Constants were fixed by Monte
// Carlo on the unit-variance benchmark processes (see tests).
double mean_bandwidth(std::size_t pooled) {
  return clamped(0.7 * std::pow(static_cast<double>(pooled), -0.2), 0.05, 0.3);
}
double cov_bandwidth(std::size_t pairs) {
  return clamped(0.3 * std::pow(static_cast<double>(pairs), -1.0 / 6.0), 0.05, 0.3);
}

// Local-linear fit of resp (aligned with idx order) on time at t. The fit is
// centered on the first in-window response so a constant field is reproduced
// exactly: its centered moments are all 0.0 and no rounding can reenter.
// Exact residual zeros matter downstream, where the two groups' variance
// estimates must tie exactly on degenerate data for augmentation to be a
// no-op.
double fit_1d_at(const PointIndex& idx, const std::vector<double>& resp, double t, double h,
                 const SmootherConfig& cfg) {
  for (int attempt = 0;; ++attempt) {
    const auto [lo, hi] = idx.window(t - h, t + h);
    MomentAccumulator1 a;
    double ref = 0.0;
    bool have_ref = false;
    for (std::size_t p = lo; p < hi; ++p) {
      const double u = (idx.time[p] - t) / h;
      const double k = kernel_eval(cfg.kernel, u);
      if (k <= 0.0) continue;
      if (!have_ref) {
        ref = resp[p];
        have_ref = true;
      }
      const double kw = idx.weight[p] * k / h;
      const double r = resp[p] - ref;
      a.s0 += kw;
      a.s1 += kw * u;
      a.s2 += kw * u * u;
      a.r0 += kw * r;
      a.r1 += kw * u * r;
    }
    if (a.s0 > 0.0) return ref + solve_local_linear_1d(a, cfg.cond_tol).beta0;
    if (attempt == cfg.max_expansions)
      throw DegenerateWindow(t, "curve window at t=" + std::to_string(t) +
                                    " is empty after " + std::to_string(attempt) +
                                    " bandwidth expansions");
    h *= cfg.expand_factor;
  }
}

DiagonalCurve fit_1d_curve(const PointIndex& idx, const std::vector<double>& resp, double h,
                           std::size_t grid_size, const SmootherConfig& cfg) {
  DiagonalCurve out;
  out.grid = make_uniform_grid(static_cast<int>(grid_size));
  out.values.resize(out.grid.size());
  for (std::size_t i = 0; i < out.grid.size(); ++i)
    out.values[i] = fit_1d_at(idx, resp, out.grid[i], h, cfg);
  return out;
}

// Per-subject kernel sums for the diagonal pair fits at one point.
// s*: plain moments of k u^j; q*: same-point squares (they remove p == q
// terms from ordered-pair products); c*/A*: residual and squared-residual
// moments; m*: their same-point squares.
struct PairSums {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  double q0 = 0, q1 = 0, q2 = 0;
  double c0 = 0, c1 = 0, c2 = 0;
  double A0 = 0, A1 = 0, A2 = 0;
  double m0 = 0, m1 = 0;
};

struct DiagFits {
  double raw = 0.0;  // fit of (e_p^2 + e_q^2) / 2: Var Z(t) + sigma^2
  double cov = 0.0;  // fit of e_p e_q: the noise-free covariance diagonal
};

// Smooths within-subject ordered pairs p != q of centered values at the
// diagonal point (t, t). The design is shared by both responses: intercept,
// a = (u_p + u_q)/2 (linear along the diagonal) and b = (u_p - u_q)^2
// (quadratic across it, which absorbs the dominant curvature a diagonal
// window spans). Each pair carries weight k_p k_q / (N_i (N_i - 1)).
// Fitting the raw response on the exact same design makes raw - cov the fit
// of (e_p - e_q)^2 / 2, so the process-level noise shared by the two curves
// cancels from the variance gap instead of entering it twice.
DiagFits diag_fits_at(const PointIndex& idx, const std::vector<double>& resid,
                      const std::vector<double>& pair_weight, double t, double h,
                      const SmootherConfig& cfg, std::vector<PairSums>& sums,
                      std::vector<std::int32_t>& touched) {
  for (int attempt = 0;; ++attempt) {
    const auto [lo, hi] = idx.window(t - h, t + h);
    touched.clear();
    for (std::size_t p = lo; p < hi; ++p) {
      const double u = (idx.time[p] - t) / h;
      const double k = kernel_eval(cfg.kernel, u);
      if (k <= 0.0) continue;
      const auto s = static_cast<std::size_t>(idx.subject[p]);
      if (pair_weight[s] == 0.0) continue;
      PairSums& ps = sums[s];
      if (ps.s0 == 0.0 && ps.q0 == 0.0) touched.push_back(idx.subject[p]);
      const double e = resid[p];
      const double e2 = e * e;
      const double ku = k * u;
      ps.s0 += k;
      ps.s1 += ku;
      ps.s2 += ku * u;
      ps.s3 += ku * u * u;
      ps.s4 += ku * u * u * u;
      ps.q0 += k * k;
      ps.q1 += k * ku;
      ps.q2 += ku * ku;
      ps.c0 += k * e;
      ps.c1 += ku * e;
      ps.c2 += ku * u * e;
      ps.A0 += k * e2;
      ps.A1 += ku * e2;
      ps.A2 += ku * u * e2;
      ps.m0 += k * k * e2;
      ps.m1 += k * ku * e2;
    }

    MomentAccumulator cov;                   // response e_p e_q
    double r00 = 0, r10 = 0, r01 = 0;        // response (e_p^2 + e_q^2) / 2
    for (const auto si : touched) {
      const auto s = static_cast<std::size_t>(si);
      const PairSums& ps = sums[s];
      const double w = pair_weight[s];
      cov.u00 += w * (ps.s0 * ps.s0 - ps.q0);
      cov.u10 += w * (ps.s1 * ps.s0 - ps.q1);
      cov.u01 += w * 2.0 * (ps.s2 * ps.s0 - ps.s1 * ps.s1);
      cov.u20 += w * 0.5 * (ps.s2 * ps.s0 + ps.s1 * ps.s1 - 2.0 * ps.q2);
      cov.u11 += w * (ps.s3 * ps.s0 - ps.s2 * ps.s1);
      cov.u02 += w * (2.0 * ps.s4 * ps.s0 - 8.0 * ps.s3 * ps.s1 + 6.0 * ps.s2 * ps.s2);
      cov.v00 += w * (ps.c0 * ps.c0 - ps.m0);
      cov.v10 += w * (ps.c1 * ps.c0 - ps.m1);
      cov.v01 += w * 2.0 * (ps.c2 * ps.c0 - ps.c1 * ps.c1);
      r00 += w * (ps.A0 * ps.s0 - ps.m0);
      r10 += w * (0.5 * (ps.A1 * ps.s0 + ps.A0 * ps.s1) - ps.m1);
      r01 += w * (ps.A2 * ps.s0 - 2.0 * ps.A1 * ps.s1 + ps.A0 * ps.s2);
      sums[s] = PairSums{};
    }

    if (cov.u00 > 0.0) {
      DiagFits out;
      out.cov = solve_local_linear(cov, cfg.cond_tol).beta0;
      cov.v00 = r00;
      cov.v10 = r10;
      cov.v01 = r01;
      out.raw = solve_local_linear(cov, cfg.cond_tol).beta0;
      return out;
    }
    if (attempt == cfg.max_expansions)
      throw DegenerateWindow(t, "no within-subject pair near t=" + std::to_string(t) +
                                    " after " + std::to_string(attempt) +
                                    " bandwidth expansions");
    h *= cfg.expand_factor;
  }
}

struct GroupCurves {
  double sigma2 = 0.0;
  DiagonalCurve mean, raw, cov;
};

GroupCurves group_noise(const std::vector<SubjectRecord>& sample, const SmootherConfig& cfg) {
  std::size_t pooled = 0, pairs = 0, with_pairs = 0;
  for (const auto& s : sample) {
    const std::size_t ni = s.obs.size();
    pooled += ni;
    if (ni >= 2) {
      pairs += ni * (ni - 1);
      ++with_pairs;
    }
  }
  if (with_pairs < 2)
    throw InsufficientPairs("error-variance estimation needs at least 2 subjects with "
                            "repeated observations");

  const PointIndex idx(sample);
  const double h_mean = mean_bandwidth(pooled);
  const double h_cov = cov_bandwidth(pairs);
  const auto grid_size = static_cast<std::size_t>(cfg.grid_size);

  GroupCurves out;
  out.mean = fit_1d_curve(idx, idx.value, h_mean, grid_size, cfg);

  // residuals at the observation times, in index order
  std::vector<double> resid(idx.size());
  for (std::size_t p = 0; p < idx.size(); ++p)
    resid[p] = idx.value[p] - fit_1d_at(idx, idx.value, idx.time[p], h_mean, cfg);

  std::vector<double> pair_weight(sample.size(), 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto ni = static_cast<double>(sample[i].obs.size());
    if (ni >= 2.0) pair_weight[i] = 1.0 / (ni * (ni - 1.0));
  }
  std::vector<PairSums> sums(sample.size());
  std::vector<std::int32_t> touched;
  out.raw.grid = make_uniform_grid(cfg.grid_size);
  out.raw.values.resize(out.raw.grid.size());
  out.cov.grid = out.raw.grid;
  out.cov.values.resize(out.cov.grid.size());
  for (std::size_t i = 0; i < out.cov.grid.size(); ++i) {
    const DiagFits f =
        diag_fits_at(idx, resid, pair_weight, out.cov.grid[i], h_cov, cfg, sums, touched);
    out.raw.values[i] = f.raw;
    out.cov.values[i] = f.cov;
  }

  // error variance: mean gap between noisy and noise-free diagonals over the
  // interior band, where both fits are boundary-bias free
  double gap = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < out.raw.grid.size(); ++i) {
    const double t = out.raw.grid[i];
    if (t < 0.25 || t > 0.75) continue;
    gap += out.raw.values[i] - out.cov.values[i];
    ++used;
  }
  out.sigma2 = std::max(0.0, gap / static_cast<double>(used));
  return out;
}

}  // namespace

DiagonalCurve estimate_mean_function(const std::vector<SubjectRecord>& sample,
                                     double bandwidth, std::size_t grid_size,
                                     KernelFamily kernel, double expand_factor,
                                     int max_expansions) {
  std::size_t pooled = 0;
  for (const auto& s : sample) pooled += s.obs.size();
  if (pooled < 2) throw DataError("mean estimation needs at least 2 pooled observations");
  if (!(bandwidth > 0.0)) throw DataError("bandwidth must be positive");
  if (grid_size < 2) throw DataError("grid needs at least 2 points");
  SmootherConfig cfg;
  cfg.kernel = kernel;
  cfg.expand_factor = expand_factor;
  cfg.max_expansions = max_expansions;
  cfg.validate();
  const PointIndex idx(sample);
  return fit_1d_curve(idx, idx.value, bandwidth, grid_size, cfg);
}

double estimate_noise_variance(const std::vector<SubjectRecord>& sample,
                               const SmootherConfig& config) {
  config.validate();
  return group_noise(sample, config).sigma2;
}

NoiseEstimate estimate_noise(const TwoSampleDataset& ds, const SmootherConfig& config) {
  config.validate();
  GroupCurves gx = group_noise(ds.x, config);
  GroupCurves gy = group_noise(ds.y, config);
  NoiseEstimate est;
  est.sigma2_x = gx.sigma2;
  est.sigma2_y = gy.sigma2;
  est.mean_curve_x = std::move(gx.mean);
  est.mean_curve_y = std::move(gy.mean);
  est.raw_diag_x = std::move(gx.raw);
  est.raw_diag_y = std::move(gy.raw);
  est.cov_diag_x = std::move(gx.cov);
  est.cov_diag_y = std::move(gy.cov);
  return est;
}

TwoSampleDataset augment_errors(const TwoSampleDataset& ds, double sigma2_x, double sigma2_y,
                                std::uint64_t seed) {
  if (!(sigma2_x >= 0.0) || !(sigma2_y >= 0.0))
    throw DataError("error variances must be >= 0");
  TwoSampleDataset out = ds;
  if (sigma2_x == sigma2_y) return out;
  const double sd = std::sqrt(std::fabs(sigma2_x - sigma2_y));
  auto& group = sigma2_x < sigma2_y ? out.x : out.y;
  // The seed goes through a dedicated stream tag, so sharing one seed with
  // the permutation test never couples the two sets of draws.
  Rng rng(derive_seed(seed, kAugmentTag));
  for (auto& subj : group)
    for (auto& ob : subj.obs) ob.value += sd * rng.normal();
  return out;
}

TestResult med_test_with_noise(const TwoSampleDataset& ds, const TestConfig& config,
                               bool equal_error_assumed, NoiseEstimate* noise_out) {
  config.validate();
  const StatisticFn statistic = [&config](const TwoSampleDataset& d) {
    return med_statistic(d, config.smoother, 1);
  };
  if (equal_error_assumed) {
    if (noise_out) *noise_out = estimate_noise(ds, config.smoother);
    return permutation_test(ds, config, statistic);
  }
  NoiseEstimate est = estimate_noise(ds, config.smoother);
  const TwoSampleDataset augmented =
      augment_errors(ds, est.sigma2_x, est.sigma2_y, config.seed);
  if (noise_out) *noise_out = std::move(est);
  return permutation_test(augmented, config, statistic);
}

}  // namespace med
