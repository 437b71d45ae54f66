#ifndef MED_SRC_SHARED_GRID_HPP
#define MED_SRC_SHARED_GRID_HPP

#include <optional>
#include <vector>

#include "med/smoother.hpp"

// Column-factorized evaluation for designs where every subject in both
// groups is observed on one shared, strictly increasing time grid. The
// estimator is unchanged; only the enumeration is: per pair of time columns
// the inter-subject absolute-difference sums are precomputed with sorted
// columns and prefix sums, after which each grid point costs O(window^2)
// instead of O((n*window)^2).

namespace med::detail {

struct SharedDesign {
  std::vector<double> times;  // K shared times, strictly increasing
  std::size_t n = 0, m = 0;
  std::vector<double> x, y;  // row-major subject-by-time value matrices
};

std::optional<SharedDesign> detect_shared_design(const TwoSampleDataset& ds);

void shared_grid_curves(const SharedDesign& d, const SmootherConfig& cfg, bool want_cross,
                        bool want_wx, bool want_wy, SurfaceCurves& out, int threads);

}  // namespace med::detail

#endif
