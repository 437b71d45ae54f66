#ifndef MED_SMOOTHER_HPP
#define MED_SMOOTHER_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "med/curve.hpp"
#include "med/dataset.hpp"
#include "med/errors.hpp"
#include "med/kernel.hpp"
#include "med/local_fit.hpp"
#include "med/parallel.hpp"

namespace med {

// Default bandwidth scaling: 0.2 at 100 subjects, shrinking at the n^(-1/5)
// rate that keeps the surface fits consistent.
double bandwidth_rate_rule(std::size_t n);

// Which pairwise mean-distance surface to estimate. cross pairs one sample
// against the other; within_x / within_y pair a sample against itself with
// same-subject pairs excluded.
enum class Surface { cross, within_x, within_y };

std::string surface_name(Surface s);

struct SmootherConfig {
  KernelFamily kernel = KernelFamily::epanechnikov;
  double h_x = 0.2;
  double h_y = 0.2;
  int grid_size = 101;
  double cond_tol = 1e-8;
  double expand_factor = 1.5;
  int max_expansions = 3;
  // Detects designs where every subject shares one time grid and switches to
  // a column-factorized evaluation; disable to force the generic path.
  bool shared_grid_fast_path = true;

  void validate() const;  // throws DataError
};

// Flat, time-sorted view of one group. Sort keys are point content
// (time, value, weight), never subject position, so any reordering of the
// subject list yields the identical index and the identical sums downstream.
class PointIndex {
 public:
  PointIndex() = default;
  explicit PointIndex(const std::vector<SubjectRecord>& subjects);

  std::size_t size() const { return time.size(); }
  std::int32_t subject_count() const { return n_subjects_; }

  // Sorted positions with lo < time < hi.
  std::pair<std::size_t, std::size_t> window(double lo, double hi) const;

  std::vector<double> time, value, weight;
  std::vector<std::int32_t> subject;

 private:
  std::int32_t n_subjects_ = 0;
};

struct SurfaceCurves {
  DiagonalCurve cross, within_x, within_y;
};

// Intercept of the local-linear fit of the chosen surface at (t1, t2).
// Empty windows trigger bandwidth expansion per the config; a window that
// stays empty raises DegenerateWindow.
double pair_surface_at(const TwoSampleDataset& ds, Surface s, const SmootherConfig& cfg,
                       double t1, double t2);

// The surface restricted to the diagonal, on the uniform grid of the config.
DiagonalCurve diagonal_curve(const TwoSampleDataset& ds, Surface s, const SmootherConfig& cfg,
                             int threads = 1);

// All three diagonal curves in one pass over the grid.
SurfaceCurves all_diagonal_curves(const TwoSampleDataset& ds, const SmootherConfig& cfg,
                                  int threads = 1);

namespace detail {

// One group's points inside a kernel window, with premultiplied weights:
// kw = subject_weight * K(u)/h and kwu = kw * u for u = (time - center)/h.
// s0..s2 are the factorized moment sums over the whole window.
struct Win {
  std::vector<double> t, z, u, kw, kwu;
  std::vector<std::int32_t> subj;
  double s0 = 0, s1 = 0, s2 = 0;

  std::size_t size() const { return t.size(); }
  void clear() {
    t.clear(); z.clear(); u.clear(); kw.clear(); kwu.clear(); subj.clear();
    s0 = s1 = s2 = 0;
  }
};

void build_window(const PointIndex& idx, double center, double h, KernelFamily fam, Win& out);

// Window positions grouped by subject, ordered by first appearance in the
// window so the grouping never depends on subject storage order.
struct SubjectGroups {
  std::vector<std::vector<std::size_t>> lists;
  std::size_t used = 0;

  void build(const Win& w, std::int32_t subject_count, std::vector<std::int32_t>& slot);
};

// Per-subject positions across two windows of the same sample.
struct PairGroups {
  struct Entry {
    std::vector<std::size_t> a, b;
  };
  std::vector<Entry> entries;
  std::size_t used = 0;

  void build(const Win& wa, const Win& wb, std::int32_t subject_count,
             std::vector<std::int32_t>& slot);
};

struct Workspace {
  Win wa, wb;
  SubjectGroups groups;
  PairGroups pair_groups;
  std::vector<std::int32_t> slot;
};

inline Workspace& tls_workspace() {
  static thread_local Workspace ws;
  return ws;
}

// Ordered pairs (p in a) x (q in b) with no exclusions. The u-moments
// factorize into products of per-window sums; the response forbids that for
// the v-moments, so those take the explicit pair loop.
template <class Response>
void cross_moments(const Win& a, const Win& b, MomentAccumulator& acc, Response&& resp) {
  acc.u00 = a.s0 * b.s0;
  acc.u10 = a.s1 * b.s0;
  acc.u01 = a.s0 * b.s1;
  acc.u20 = a.s2 * b.s0;
  acc.u11 = a.s1 * b.s1;
  acc.u02 = a.s0 * b.s2;
  double v00 = 0, v10 = 0, v01 = 0;
  const std::size_t nb = b.size();
  for (std::size_t p = 0; p < a.size(); ++p) {
    const double za = a.z[p], ta = a.t[p];
    const double* bz = b.z.data();
    const double* bkw = b.kw.data();
    const double* bkwu = b.kwu.data();
    const double* bt = b.t.data();
    double s0 = 0, s1 = 0;
    for (std::size_t q = 0; q < nb; ++q) {
      const double r = resp(za, bz[q], ta, bt[q]);
      s0 += bkw[q] * r;
      s1 += bkwu[q] * r;
    }
    v00 += a.kw[p] * s0;
    v10 += a.kwu[p] * s0;
    v01 += a.kw[p] * s1;
  }
  acc.v00 = v00;
  acc.v10 = v10;
  acc.v01 = v01;
}

// Within-sample moments at a general evaluation point: full ordered
// enumeration minus the same-subject contributions. Works for any response.
template <class Response>
void within_moments_general(const Win& wa, const Win& wb, const PairGroups& groups,
                            MomentAccumulator& acc, Response&& resp) {
  cross_moments(wa, wb, acc, resp);
  for (std::size_t e = 0; e < groups.used; ++e) {
    const auto& g = groups.entries[e];
    double s0a = 0, s1a = 0, s2a = 0;
    for (auto p : g.a) {
      s0a += wa.kw[p];
      s1a += wa.kwu[p];
      s2a += wa.kwu[p] * wa.u[p];
    }
    double s0b = 0, s1b = 0, s2b = 0;
    for (auto q : g.b) {
      s0b += wb.kw[q];
      s1b += wb.kwu[q];
      s2b += wb.kwu[q] * wb.u[q];
    }
    acc.u00 -= s0a * s0b;
    acc.u10 -= s1a * s0b;
    acc.u01 -= s0a * s1b;
    acc.u20 -= s2a * s0b;
    acc.u11 -= s1a * s1b;
    acc.u02 -= s0a * s2b;
    if (g.a.empty() || g.b.empty()) continue;
    double c00 = 0, c10 = 0, c01 = 0;
    for (auto p : g.a) {
      const double za = wa.z[p], ta = wa.t[p];
      double s0 = 0, s1 = 0;
      for (auto q : g.b) {
        const double r = resp(za, wb.z[q], ta, wb.t[q]);
        s0 += wb.kw[q] * r;
        s1 += wb.kwu[q] * r;
      }
      c00 += wa.kw[p] * s0;
      c10 += wa.kwu[p] * s0;
      c01 += wa.kw[p] * s1;
    }
    acc.v00 -= c00;
    acc.v10 -= c10;
    acc.v01 -= c01;
  }
}

// Diagonal specialization for symmetric responses (t1 == t2, one shared
// window): each unordered pair is visited once and contributes both
// orientations, which also makes u10 == u01 and v10 == v01 bit-identical.
template <class Response>
void within_moments_diag(const Win& w, const SubjectGroups& groups, MomentAccumulator& acc,
                         Response&& resp) {
  double T0 = 0, T1 = 0;
  const std::size_t n = w.size();
  for (std::size_t p = 0; p + 1 < n; ++p) {
    const double za = w.z[p], ta = w.t[p];
    const double* wz = w.z.data();
    const double* wkw = w.kw.data();
    const double* wkwu = w.kwu.data();
    const double* wt = w.t.data();
    double s0 = 0, s1 = 0;
    for (std::size_t q = p + 1; q < n; ++q) {
      const double r = resp(za, wz[q], ta, wt[q]);
      s0 += wkw[q] * r;
      s1 += wkwu[q] * r;
    }
    T0 += w.kw[p] * s0;
    T1 += w.kwu[p] * s0 + w.kw[p] * s1;
  }

  double u00c = 0, u10c = 0, u20c = 0, u11c = 0, T0c = 0, T1c = 0;
  for (std::size_t e = 0; e < groups.used; ++e) {
    const auto& g = groups.lists[e];
    double s0 = 0, s1 = 0, s2 = 0;
    for (auto p : g) {
      s0 += w.kw[p];
      s1 += w.kwu[p];
      s2 += w.kwu[p] * w.u[p];
    }
    u00c += s0 * s0;
    u10c += s0 * s1;
    u20c += s0 * s2;
    u11c += s1 * s1;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      const std::size_t p = g[i];
      const double za = w.z[p], ta = w.t[p];
      double s0r = 0, s1r = 0;
      for (std::size_t j = i + 1; j < g.size(); ++j) {
        const std::size_t q = g[j];
        const double r = resp(za, w.z[q], ta, w.t[q]);
        s0r += w.kw[q] * r;
        s1r += w.kwu[q] * r;
      }
      T0c += w.kw[p] * s0r;
      T1c += w.kwu[p] * s0r + w.kw[p] * s1r;
    }
  }

  acc.u00 = w.s0 * w.s0 - u00c;
  acc.u10 = acc.u01 = w.s0 * w.s1 - u10c;
  acc.u20 = acc.u02 = w.s0 * w.s2 - u20c;
  acc.u11 = w.s1 * w.s1 - u11c;
  acc.v00 = 2.0 * (T0 - T0c);
  acc.v10 = acc.v01 = T1 - T1c;
}

inline double surface_norm(Surface s, const PointIndex& ix, const PointIndex& iy) {
  const double n = static_cast<double>(ix.subject_count());
  const double m = static_cast<double>(iy.subject_count());
  switch (s) {
    case Surface::cross:
      return 1.0 / (n * m);
    case Surface::within_x:
      return 1.0 / (n * (n - 1.0));
    case Surface::within_y:
      return 1.0 / (m * (m - 1.0));
  }
  return 1.0;
}

[[noreturn]] void throw_degenerate(Surface s, double t1, double t2, double h1, double h2);

// Evaluation core shared by the production path and the response-injected
// test path. Symmetric responses may take the halved diagonal loop; anything
// injected goes through the general enumeration.
template <bool Symmetric, class Response>
LocalFit fit_at(const PointIndex& ix, const PointIndex& iy, Surface s,
                const SmootherConfig& cfg, double t1, double t2, Response&& resp) {
  const bool within = s != Surface::cross;
  const PointIndex& ia = s == Surface::within_y ? iy : ix;
  const PointIndex& ib = s == Surface::within_x ? ix : iy;
  if (within && ia.subject_count() < 2)
    throw DataError("within-sample surface needs at least 2 subjects");

  double h1 = s == Surface::within_y ? cfg.h_y : cfg.h_x;
  double h2 = s == Surface::within_x ? cfg.h_x : cfg.h_y;
  const double norm = surface_norm(s, ix, iy);

  Workspace& ws = tls_workspace();
  for (int attempt = 0;; ++attempt) {
    MomentAccumulator acc;
    if (within && Symmetric && t1 == t2 && h1 == h2) {
      build_window(ia, t1, h1, cfg.kernel, ws.wa);
      ws.groups.build(ws.wa, ia.subject_count(), ws.slot);
      within_moments_diag(ws.wa, ws.groups, acc, resp);
    } else if (within) {
      build_window(ia, t1, h1, cfg.kernel, ws.wa);
      build_window(ia, t2, h2, cfg.kernel, ws.wb);
      ws.pair_groups.build(ws.wa, ws.wb, ia.subject_count(), ws.slot);
      within_moments_general(ws.wa, ws.wb, ws.pair_groups, acc, resp);
    } else {
      build_window(ia, t1, h1, cfg.kernel, ws.wa);
      build_window(ib, t2, h2, cfg.kernel, ws.wb);
      cross_moments(ws.wa, ws.wb, acc, resp);
    }
    if (acc.u00 > 0.0) {
      acc.scale(norm);
      return solve_local_linear(acc, cfg.cond_tol);
    }
    if (attempt == cfg.max_expansions) throw_degenerate(s, t1, t2, h1, h2);
    h1 *= cfg.expand_factor;
    h2 *= cfg.expand_factor;
  }
}

struct AbsDiff {
  double operator()(double za, double zb, double, double) const { return std::fabs(za - zb); }
};

}  // namespace detail

// Test seam: evaluate a surface with an arbitrary response
// (value_a, value_b, time_a, time_b) -> double in place of |value_a - value_b|.
template <class Response>
double pair_surface_at_with_response(const TwoSampleDataset& ds, Surface s,
                                     const SmootherConfig& cfg, double t1, double t2,
                                     Response&& resp) {
  cfg.validate();
  PointIndex ix(ds.x), iy(ds.y);
  return detail::fit_at<false>(ix, iy, s, cfg, t1, t2, resp).beta0;
}

template <class Response>
DiagonalCurve diagonal_curve_with_response(const TwoSampleDataset& ds, Surface s,
                                           const SmootherConfig& cfg, Response&& resp,
                                           int threads = 1) {
  cfg.validate();
  PointIndex ix(ds.x), iy(ds.y);
  DiagonalCurve out;
  out.grid = make_uniform_grid(cfg.grid_size);
  out.values.resize(out.grid.size());
  parallel_for(out.grid.size(), threads, [&](std::size_t i) {
    out.values[i] = detail::fit_at<false>(ix, iy, s, cfg, out.grid[i], out.grid[i], resp).beta0;
  });
  return out;
}

}  // namespace med

#endif
