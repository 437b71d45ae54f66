#include "shared_grid.hpp"

#include <algorithm>
#include <cmath>

namespace med::detail {

std::optional<SharedDesign> detect_shared_design(const TwoSampleDataset& ds) {
  if (ds.x.empty() || ds.y.empty()) return std::nullopt;
  const auto& ref = ds.x.front().obs;
  const std::size_t K = ref.size();
  if (K == 0) return std::nullopt;
  for (std::size_t j = 1; j < K; ++j)
    if (!(ref[j].time > ref[j - 1].time)) return std::nullopt;
  auto matches = [&](const SubjectRecord& s) {
    if (s.obs.size() != K) return false;
    for (std::size_t j = 0; j < K; ++j)
      if (s.obs[j].time != ref[j].time) return false;
    return true;
  };
  for (const auto& s : ds.x)
    if (!matches(s)) return std::nullopt;
  for (const auto& s : ds.y)
    if (!matches(s)) return std::nullopt;

  SharedDesign d;
  d.times.resize(K);
  for (std::size_t j = 0; j < K; ++j) d.times[j] = ref[j].time;
  d.n = ds.x.size();
  d.m = ds.y.size();
  d.x.resize(d.n * K);
  d.y.resize(d.m * K);
  for (std::size_t i = 0; i < d.n; ++i)
    for (std::size_t j = 0; j < K; ++j) d.x[i * K + j] = ds.x[i].obs[j].value;
  for (std::size_t i = 0; i < d.m; ++i)
    for (std::size_t j = 0; j < K; ++j) d.y[i * K + j] = ds.y[i].obs[j].value;
  return d;
}

namespace {

// Per time column: subject values sorted ascending plus prefix sums, the
// ingredients of O(rows) absolute-difference cross sums.
struct ColumnSet {
  std::size_t rows = 0, cols = 0;
  std::vector<double> sorted;  // cols x rows
  std::vector<double> pref;    // cols x (rows + 1)

  void build(const std::vector<double>& mat, std::size_t rows_, std::size_t cols_) {
    rows = rows_;
    cols = cols_;
    sorted.resize(rows * cols);
    pref.resize((rows + 1) * cols);
    for (std::size_t j = 0; j < cols; ++j) {
      double* col = &sorted[j * rows];
      for (std::size_t i = 0; i < rows; ++i) col[i] = mat[i * cols + j];
      std::sort(col, col + rows);
      double* pp = &pref[j * (rows + 1)];
      pp[0] = 0.0;
      for (std::size_t i = 0; i < rows; ++i) pp[i + 1] = pp[i] + col[i];
    }
  }

  const double* col(std::size_t j) const { return &sorted[j * rows]; }
  const double* prefix(std::size_t j) const { return &pref[j * (rows + 1)]; }
};

// sum over every (i,k) of |a_i - b_k|, both arrays ascending
double cross_abs_sum(const double* a, const double* prefa, std::size_t p, const double* b,
                     std::size_t q) {
  const double total = prefa[p];
  const double pd = static_cast<double>(p);
  double out = 0.0;
  std::size_t i = 0;
  for (std::size_t k = 0; k < q; ++k) {
    const double bk = b[k];
    while (i < p && a[i] <= bk) ++i;
    out += bk * (2.0 * static_cast<double>(i) - pd) + total - 2.0 * prefa[i];
  }
  return out;
}

// tab[j1*K + j2] = sum over subject pairs of |x_{i1 j1} - y_{i2 j2}|
std::vector<double> cross_table(const ColumnSet& cx, const ColumnSet& cy) {
  const std::size_t K = cx.cols;
  std::vector<double> tab(K * K);
  for (std::size_t j1 = 0; j1 < K; ++j1)
    for (std::size_t j2 = 0; j2 < K; ++j2)
      tab[j1 * K + j2] =
          cross_abs_sum(cx.col(j1), cx.prefix(j1), cx.rows, cy.col(j2), cy.rows);
  return tab;
}

// tab[j1*K + j2] = sum over ordered distinct-subject pairs of
// |v_{i1 j1} - v_{i2 j2}|: the full cross sum minus the same-subject sums.
std::vector<double> within_table(const ColumnSet& c, const std::vector<double>& mat) {
  const std::size_t K = c.cols;
  const std::size_t rows = c.rows;
  std::vector<double> tab(K * K);
  for (std::size_t j1 = 0; j1 < K; ++j1)
    for (std::size_t j2 = j1; j2 < K; ++j2) {
      const double full = cross_abs_sum(c.col(j1), c.prefix(j1), rows, c.col(j2), rows);
      double same = 0.0;
      for (std::size_t i = 0; i < rows; ++i)
        same += std::fabs(mat[i * K + j1] - mat[i * K + j2]);
      tab[j1 * K + j2] = tab[j2 * K + j1] = full - same;
    }
  return tab;
}

// Kernel window over the shared time columns.
struct AxisWin {
  std::vector<std::size_t> cols;
  std::vector<double> kw, kwu;
  double a0 = 0, a1 = 0, a2 = 0;

  void build(const std::vector<double>& times, double center, double h, KernelFamily fam,
             double subj_weight) {
    cols.clear();
    kw.clear();
    kwu.clear();
    a0 = a1 = a2 = 0;
    const auto first = std::upper_bound(times.begin(), times.end(), center - h);
    const auto last = std::lower_bound(first, times.end(), center + h);
    for (auto it = first; it != last; ++it) {
      const double u = (*it - center) / h;
      const double k = kernel_eval(fam, u);
      if (k <= 0.0) continue;
      const double w = subj_weight * k / h;
      const double wu = w * u;
      cols.push_back(static_cast<std::size_t>(it - times.begin()));
      kw.push_back(w);
      kwu.push_back(wu);
      a0 += w;
      a1 += wu;
      a2 += wu * u;
    }
  }
};

LocalFit fit_dense_cross(const SharedDesign& d, const std::vector<double>& tab,
                         const SmootherConfig& cfg, double t) {
  const std::size_t K = d.times.size();
  const double wsubj = 1.0 / static_cast<double>(K);
  double h1 = cfg.h_x, h2 = cfg.h_y;
  AxisWin wa, wb;
  for (int attempt = 0;; ++attempt) {
    wa.build(d.times, t, h1, cfg.kernel, wsubj);
    wb.build(d.times, t, h2, cfg.kernel, wsubj);
    if (wa.a0 > 0.0 && wb.a0 > 0.0) {
      MomentAccumulator acc;
      acc.u00 = wa.a0 * wb.a0;
      acc.u10 = wa.a1 * wb.a0;
      acc.u01 = wa.a0 * wb.a1;
      acc.u20 = wa.a2 * wb.a0;
      acc.u11 = wa.a1 * wb.a1;
      acc.u02 = wa.a0 * wb.a2;
      double v00 = 0, v10 = 0, v01 = 0;
      for (std::size_t i1 = 0; i1 < wa.cols.size(); ++i1) {
        const double* row = &tab[wa.cols[i1] * K];
        double s0 = 0, s1 = 0;
        for (std::size_t i2 = 0; i2 < wb.cols.size(); ++i2) {
          const double tv = row[wb.cols[i2]];
          s0 += wb.kw[i2] * tv;
          s1 += wb.kwu[i2] * tv;
        }
        v00 += wa.kw[i1] * s0;
        v10 += wa.kwu[i1] * s0;
        v01 += wa.kw[i1] * s1;
      }
      const double norm = 1.0 / (static_cast<double>(d.n) * static_cast<double>(d.m));
      acc.v00 = v00 * norm;
      acc.v10 = v10 * norm;
      acc.v01 = v01 * norm;
      return solve_local_linear(acc, cfg.cond_tol);
    }
    if (attempt == cfg.max_expansions) throw_degenerate(Surface::cross, t, t, h1, h2);
    h1 *= cfg.expand_factor;
    h2 *= cfg.expand_factor;
  }
}

LocalFit fit_dense_within(const SharedDesign& d, const std::vector<double>& tab,
                          std::size_t nsubj, double h_base, Surface s,
                          const SmootherConfig& cfg, double t) {
  const std::size_t K = d.times.size();
  const double wsubj = 1.0 / static_cast<double>(K);
  double h = h_base;
  AxisWin wa;
  for (int attempt = 0;; ++attempt) {
    wa.build(d.times, t, h, cfg.kernel, wsubj);
    if (wa.a0 > 0.0) {
      MomentAccumulator acc;
      acc.u00 = wa.a0 * wa.a0;
      acc.u10 = acc.u01 = wa.a0 * wa.a1;
      acc.u20 = acc.u02 = wa.a0 * wa.a2;
      acc.u11 = wa.a1 * wa.a1;
      double c00 = 0, c1 = 0, d00 = 0, d1 = 0;
      for (std::size_t i1 = 0; i1 < wa.cols.size(); ++i1) {
        const double* row = &tab[wa.cols[i1] * K];
        const double tjj = row[wa.cols[i1]];
        d00 += wa.kw[i1] * wa.kw[i1] * tjj;
        d1 += wa.kwu[i1] * wa.kw[i1] * tjj;
        double s0 = 0, s1 = 0;
        for (std::size_t i2 = i1 + 1; i2 < wa.cols.size(); ++i2) {
          const double tv = row[wa.cols[i2]];
          s0 += wa.kw[i2] * tv;
          s1 += wa.kwu[i2] * tv;
        }
        c00 += wa.kw[i1] * s0;
        c1 += wa.kwu[i1] * s0 + wa.kw[i1] * s1;
      }
      const double norm =
          1.0 / (static_cast<double>(nsubj) * (static_cast<double>(nsubj) - 1.0));
      acc.v00 = (2.0 * c00 + d00) * norm;
      acc.v10 = acc.v01 = (c1 + d1) * norm;
      return solve_local_linear(acc, cfg.cond_tol);
    }
    if (attempt == cfg.max_expansions) throw_degenerate(s, t, t, h, h);
    h *= cfg.expand_factor;
  }
}

}  // namespace

void shared_grid_curves(const SharedDesign& d, const SmootherConfig& cfg, bool want_cross,
                        bool want_wx, bool want_wy, SurfaceCurves& out, int threads) {
  const std::size_t K = d.times.size();
  if ((want_wx && d.n < 2) || (want_wy && d.m < 2))
    throw DataError("within-sample surface needs at least 2 subjects");

  ColumnSet cx, cy;
  if (want_cross || want_wx) cx.build(d.x, d.n, K);
  if (want_cross || want_wy) cy.build(d.y, d.m, K);

  std::vector<double> tab_cross, tab_x, tab_y;
  if (want_cross) tab_cross = cross_table(cx, cy);
  if (want_wx) tab_x = within_table(cx, d.x);
  if (want_wy) tab_y = within_table(cy, d.y);

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
    if (want_cross) out.cross.values[i] = fit_dense_cross(d, tab_cross, cfg, t).beta0;
    if (want_wx)
      out.within_x.values[i] =
          fit_dense_within(d, tab_x, d.n, cfg.h_x, Surface::within_x, cfg, t).beta0;
    if (want_wy)
      out.within_y.values[i] =
          fit_dense_within(d, tab_y, d.m, cfg.h_y, Surface::within_y, cfg, t).beta0;
  });
}

}  // namespace med::detail
