#include "med/smoother.hpp"

#include <algorithm>
#include <cmath>

#include "shared_grid.hpp"

namespace med {

double bandwidth_rate_rule(std::size_t n) {
  if (n == 0) throw DataError("bandwidth_rate_rule: need n >= 1");
  return 0.2 * std::pow(static_cast<double>(n) / 100.0, -0.2);
}

std::string surface_name(Surface s) {
  switch (s) {
    case Surface::cross:
      return "cross";
    case Surface::within_x:
      return "within_x";
    case Surface::within_y:
      return "within_y";
  }
  return "cross";
}

void SmootherConfig::validate() const {
  if (!(h_x > 0.0) || !(h_y > 0.0)) throw DataError("bandwidths must be positive");
  if (grid_size < 2) throw DataError("grid_size must be at least 2");
  if (!(cond_tol > 0.0)) throw DataError("cond_tol must be positive");
  if (!(expand_factor > 1.0)) throw DataError("expand_factor must exceed 1");
  if (max_expansions < 0) throw DataError("max_expansions must be >= 0");
}

PointIndex::PointIndex(const std::vector<SubjectRecord>& subjects) {
  n_subjects_ = static_cast<std::int32_t>(subjects.size());
  struct Rec {
    double t, z, w;
    std::int32_t subj;
  };
  std::vector<Rec> recs;
  std::size_t total = 0;
  for (const auto& s : subjects) total += s.obs.size();
  recs.reserve(total);
  for (std::int32_t i = 0; i < n_subjects_; ++i) {
    const auto& s = subjects[static_cast<std::size_t>(i)];
    if (s.obs.empty()) continue;
    const double w = 1.0 / static_cast<double>(s.obs.size());
    for (const auto& p : s.obs) recs.push_back({p.time, p.value, w, i});
  }
  // content keys only; subject position must never influence sum order
  std::sort(recs.begin(), recs.end(), [](const Rec& a, const Rec& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.z != b.z) return a.z < b.z;
    return a.w < b.w;
  });
  time.reserve(recs.size());
  value.reserve(recs.size());
  weight.reserve(recs.size());
  subject.reserve(recs.size());
  for (const auto& r : recs) {
    time.push_back(r.t);
    value.push_back(r.z);
    weight.push_back(r.w);
    subject.push_back(r.subj);
  }
}

std::pair<std::size_t, std::size_t> PointIndex::window(double lo, double hi) const {
  const auto first = std::upper_bound(time.begin(), time.end(), lo);
  const auto last = std::lower_bound(first, time.end(), hi);
  return {static_cast<std::size_t>(first - time.begin()),
          static_cast<std::size_t>(last - time.begin())};
}

namespace detail {

void build_window(const PointIndex& idx, double center, double h, KernelFamily fam, Win& out) {
  out.clear();
  const auto [lo, hi] = idx.window(center - h, center + h);
  for (std::size_t p = lo; p < hi; ++p) {
    const double u = (idx.time[p] - center) / h;
    const double k = kernel_eval(fam, u);
    if (k <= 0.0) continue;
    const double kw = idx.weight[p] * k / h;
    const double kwu = kw * u;
    out.t.push_back(idx.time[p]);
    out.z.push_back(idx.value[p]);
    out.u.push_back(u);
    out.kw.push_back(kw);
    out.kwu.push_back(kwu);
    out.subj.push_back(idx.subject[p]);
    out.s0 += kw;
    out.s1 += kwu;
    out.s2 += kwu * u;
  }
}

void SubjectGroups::build(const Win& w, std::int32_t subject_count,
                          std::vector<std::int32_t>& slot) {
  slot.assign(static_cast<std::size_t>(subject_count), -1);
  for (std::size_t e = 0; e < used; ++e) lists[e].clear();
  used = 0;
  for (std::size_t p = 0; p < w.size(); ++p) {
    const auto s = static_cast<std::size_t>(w.subj[p]);
    std::int32_t k = slot[s];
    if (k < 0) {
      k = static_cast<std::int32_t>(used);
      slot[s] = k;
      if (lists.size() == used) lists.emplace_back();
      ++used;
    }
    lists[static_cast<std::size_t>(k)].push_back(p);
  }
}

void PairGroups::build(const Win& wa, const Win& wb, std::int32_t subject_count,
                       std::vector<std::int32_t>& slot) {
  slot.assign(static_cast<std::size_t>(subject_count), -1);
  for (std::size_t e = 0; e < used; ++e) {
    entries[e].a.clear();
    entries[e].b.clear();
  }
  used = 0;
  auto claim = [&](std::int32_t subj) {
    const auto s = static_cast<std::size_t>(subj);
    std::int32_t k = slot[s];
    if (k < 0) {
      k = static_cast<std::int32_t>(used);
      slot[s] = k;
      if (entries.size() == used) entries.emplace_back();
      ++used;
    }
    return static_cast<std::size_t>(k);
  };
  for (std::size_t p = 0; p < wa.size(); ++p) entries[claim(wa.subj[p])].a.push_back(p);
  for (std::size_t q = 0; q < wb.size(); ++q) entries[claim(wb.subj[q])].b.push_back(q);
}

void throw_degenerate(Surface s, double t1, double t2, double h1, double h2) {
  throw DegenerateWindow(
      t1, "degenerate window: surface " + surface_name(s) + " at t1=" + std::to_string(t1) +
              ", t2=" + std::to_string(t2) + " is empty even at bandwidths (" +
              std::to_string(h1) + ", " + std::to_string(h2) + ")");
}

}  // namespace detail

double pair_surface_at(const TwoSampleDataset& ds, Surface s, const SmootherConfig& cfg,
                       double t1, double t2) {
  cfg.validate();
  PointIndex ix(ds.x), iy(ds.y);
  return detail::fit_at<true>(ix, iy, s, cfg, t1, t2, detail::AbsDiff{}).beta0;
}

namespace {

SurfaceCurves curves_impl(const TwoSampleDataset& ds, const SmootherConfig& cfg,
                          bool want_cross, bool want_wx, bool want_wy, int threads) {
  cfg.validate();
  if (cfg.shared_grid_fast_path) {
    if (auto dense = detail::detect_shared_design(ds)) {
      SurfaceCurves out;
      detail::shared_grid_curves(*dense, cfg, want_cross, want_wx, want_wy, out, threads);
      return out;
    }
  }

  PointIndex ix(ds.x), iy(ds.y);
  SurfaceCurves out;
  const auto grid = make_uniform_grid(cfg.grid_size);
  auto init = [&grid](DiagonalCurve& c) {
    c.grid = grid;
    c.values.resize(grid.size());
  };
  if (want_cross) init(out.cross);
  if (want_wx) init(out.within_x);
  if (want_wy) init(out.within_y);

  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const double t = grid[i];
    if (want_cross)
      out.cross.values[i] =
          detail::fit_at<true>(ix, iy, Surface::cross, cfg, t, t, detail::AbsDiff{}).beta0;
    if (want_wx)
      out.within_x.values[i] =
          detail::fit_at<true>(ix, iy, Surface::within_x, cfg, t, t, detail::AbsDiff{}).beta0;
    if (want_wy)
      out.within_y.values[i] =
          detail::fit_at<true>(ix, iy, Surface::within_y, cfg, t, t, detail::AbsDiff{}).beta0;
  });
  return out;
}

}  // namespace

DiagonalCurve diagonal_curve(const TwoSampleDataset& ds, Surface s, const SmootherConfig& cfg,
                             int threads) {
  SurfaceCurves all = curves_impl(ds, cfg, s == Surface::cross, s == Surface::within_x,
                                  s == Surface::within_y, threads);
  switch (s) {
    case Surface::cross:
      return std::move(all.cross);
    case Surface::within_x:
      return std::move(all.within_x);
    case Surface::within_y:
      return std::move(all.within_y);
  }
  return std::move(all.cross);
}

SurfaceCurves all_diagonal_curves(const TwoSampleDataset& ds, const SmootherConfig& cfg,
                                  int threads) {
  return curves_impl(ds, cfg, true, true, true, threads);
}

}  // namespace med
