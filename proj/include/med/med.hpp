#ifndef MED_MED_HPP
#define MED_MED_HPP

#include <vector>

#include "med/curve.hpp"
#include "med/dataset.hpp"
#include "med/smoother.hpp"

namespace med {

// Marginal energy distance: the integral over [0,1] of
// 2*cross(t) - within_x(t) - within_y(t), where the three curves are the
// smoothed mean absolute differences between and within the samples.
struct MedBreakdown {
  double statistic = 0.0;
  DiagonalCurve cross, within_x, within_y;

  // 2*cross - within_x - within_y on the shared grid
  DiagonalCurve integrand() const;
};

MedBreakdown med_breakdown(const TwoSampleDataset& ds, const SmootherConfig& cfg,
                           int threads = 1);

double med_statistic(const TwoSampleDataset& ds, const SmootherConfig& cfg, int threads = 1);

// Classical energy distance between two samples of curves observed on one
// common strictly increasing grid, using trapezoid L2 distances. Within-sample
// means exclude self pairs, matching the marginal statistic's convention.
double dense_energy_distance(const std::vector<std::vector<double>>& x,
                             const std::vector<std::vector<double>>& y,
                             const std::vector<double>& grid);

}  // namespace med

#endif
