#include "med/med.hpp"

#include <cmath>

#include "med/errors.hpp"

namespace med {

DiagonalCurve MedBreakdown::integrand() const {
  DiagonalCurve out;
  out.grid = cross.grid;
  out.values.resize(cross.values.size());
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = 2.0 * cross.values[i] - within_x.values[i] - within_y.values[i];
  return out;
}

MedBreakdown med_breakdown(const TwoSampleDataset& ds, const SmootherConfig& cfg, int threads) {
  MedBreakdown out;
  SurfaceCurves curves = all_diagonal_curves(ds, cfg, threads);
  out.cross = std::move(curves.cross);
  out.within_x = std::move(curves.within_x);
  out.within_y = std::move(curves.within_y);
  out.statistic = trapezoid_uniform_unit(out.integrand().values);
  return out;
}

double med_statistic(const TwoSampleDataset& ds, const SmootherConfig& cfg, int threads) {
  return med_breakdown(ds, cfg, threads).statistic;
}

namespace {

// squared trapezoid L2 distance between two rows over the grid steps
double l2_distance(const std::vector<double>& a, const std::vector<double>& b,
                   const std::vector<double>& dt) {
  double sum = 0.0;
  for (std::size_t i = 0; i < dt.size(); ++i) {
    const double d0 = a[i] - b[i];
    const double d1 = a[i + 1] - b[i + 1];
    sum += 0.5 * dt[i] * (d0 * d0 + d1 * d1);
  }
  return std::sqrt(sum);
}

}  // namespace

double dense_energy_distance(const std::vector<std::vector<double>>& x,
                             const std::vector<std::vector<double>>& y,
                             const std::vector<double>& grid) {
  if (x.size() < 2 || y.size() < 2)
    throw DataError("energy distance needs at least 2 curves per sample");
  if (grid.size() < 2) throw DataError("energy distance needs a grid of at least 2 points");
  std::vector<double> dt(grid.size() - 1);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    dt[i] = grid[i + 1] - grid[i];
    if (!(dt[i] > 0.0)) throw DataError("energy distance grid must be strictly increasing");
  }
  for (const auto& row : x)
    if (row.size() != grid.size()) throw DataError("curve length must match the grid");
  for (const auto& row : y)
    if (row.size() != grid.size()) throw DataError("curve length must match the grid");

  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());

  double cross = 0.0;
  for (const auto& a : x)
    for (const auto& b : y) cross += l2_distance(a, b, dt);
  cross /= n * m;

  double within_x = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) within_x += l2_distance(x[i], x[j], dt);
  within_x *= 2.0 / (n * (n - 1.0));

  double within_y = 0.0;
  for (std::size_t i = 0; i + 1 < y.size(); ++i)
    for (std::size_t j = i + 1; j < y.size(); ++j) within_y += l2_distance(y[i], y[j], dt);
  within_y *= 2.0 / (m * (m - 1.0));

  return 2.0 * cross - within_x - within_y;
}

}  // namespace med
