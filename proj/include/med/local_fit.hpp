#ifndef MED_LOCAL_FIT_HPP
#define MED_LOCAL_FIT_HPP

#include <cmath>

namespace med {

// Kernel-weighted sums for one bivariate local-linear problem with design
// (1, u, v), where u and v are bandwidth-normalized offsets, so |u|,|v| < 1
// and every u-moment is bounded by u00. v-moments carry the response.
// u10 stores the (1,0) moment, u11 the (1,1) moment, and so on.
struct MomentAccumulator {
  double u00 = 0, u10 = 0, u01 = 0, u20 = 0, u11 = 0, u02 = 0;
  double v00 = 0, v10 = 0, v01 = 0;

  void scale(double c) {
    u00 *= c; u10 *= c; u01 *= c; u20 *= c; u11 *= c; u02 *= c;
    v00 *= c; v10 *= c; v01 *= c;
  }

  MomentAccumulator& operator-=(const MomentAccumulator& o) {
    u00 -= o.u00; u10 -= o.u10; u01 -= o.u01;
    u20 -= o.u20; u11 -= o.u11; u02 -= o.u02;
    v00 -= o.v00; v10 -= o.v10; v01 -= o.v01;
    return *this;
  }
};

struct LocalFit {
  double beta0 = 0.0;
  bool fallback = false;  // local-constant value used for a near-singular system
};

// Intercept of the weighted least squares solution by Cramer's rule on the
// 3x3 normal equations
//   [u00 u10 u01] [b0]   [v00]
//   [u10 u20 u11] [b1] = [v10]
//   [u01 u11 u02] [b2]   [v01].
// Requires u00 > 0. With normalized offsets the determinant scale is u00^3;
// below cond_tol times that the fit degrades to the local-constant mean.
inline LocalFit solve_local_linear(const MomentAccumulator& a, double cond_tol) {
  const double w1 = a.u20 * a.u02 - a.u11 * a.u11;
  const double w2 = a.u10 * a.u02 - a.u01 * a.u11;
  const double w3 = a.u10 * a.u11 - a.u01 * a.u20;
  const double det = a.u00 * w1 - a.u10 * w2 + a.u01 * w3;
  const double scale = a.u00 * a.u00 * a.u00;
  if (!(std::fabs(det) > cond_tol * scale))
    return {a.v00 / a.u00, true};
  return {(a.v00 * w1 - a.v10 * w2 + a.v01 * w3) / det, false};
}

// 1D analogue with design (1, u): s-moments of the weights, r-moments of the
// response.
struct MomentAccumulator1 {
  double s0 = 0, s1 = 0, s2 = 0, r0 = 0, r1 = 0;
};

inline LocalFit solve_local_linear_1d(const MomentAccumulator1& a, double cond_tol) {
  const double det = a.s0 * a.s2 - a.s1 * a.s1;
  if (!(std::fabs(det) > cond_tol * a.s0 * a.s0))
    return {a.r0 / a.s0, true};
  return {(a.s2 * a.r0 - a.s1 * a.r1) / det, false};
}

}  // namespace med

#endif
