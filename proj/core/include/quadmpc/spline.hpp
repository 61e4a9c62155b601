#pragma once

#include <vector>

#include "quadmpc/types.hpp"

namespace quadmpc {

/// Clamped B-spline reference path in 3-D.
struct BSplinePath {
  int degree = 3;
  std::vector<Vec3> control_points;
  std::vector<double> knots;  // non-decreasing, size = control_points.size() + degree + 1

  double t_min() const { return knots.front(); }
  double t_max() const { return knots.back(); }

  /// Throws std::invalid_argument if the knot/control-point structure is invalid.
  void validate() const;
};

/// Cox-de Boor basis function N_{i,p}(t). Degree-0 basis is 1 on
/// [t_i, t_{i+1}) and 0 otherwise; 0/0 terms in the recursion are 0.
/// Rejects i with i + p + 1 >= knots.size().
double bspline_basis(int i, int p, double t, const std::vector<double>& knots);

/// Clamped knot vector: end knots repeated p+1 times, interior knots uniform
/// on [0,1]. Rejects n_ctrl <= p.
std::vector<double> make_clamped_knots(int n_ctrl, int p);

/// Point on the curve at parameter t in [first knot, last knot]; the clamped
/// ends return the first/last control point exactly. Rejects t outside.
Vec3 eval(const BSplinePath& path, double t);

/// Waypoints become control points directly (approximating, not
/// interpolating) over a clamped uniform knot vector. Rejects fewer than
/// degree+1 waypoints.
BSplinePath build_from_waypoints(const std::vector<Vec3>& waypoints, int degree);

struct ReferencePoint {
  StateVec state;
  ControlVec input;
};

/// Time-sampled reference for the receding-horizon controller. Velocities are
/// forward differences of the sampled positions, so they are consistent with
/// the position sequence by construction.
struct ReferenceTrajectory {
  double dt = 0.0;
  std::vector<ReferencePoint> points;
};

/// Sweeps the spline parameter linearly over the knot range across `duration`
/// and samples every dt. Attitude and yaw-rate references are zero; the input
/// reference is (hover_thrust, 0, 0, 0) at every step. Rejects dt <= 0 and
/// duration < dt.
ReferenceTrajectory sample_reference(const BSplinePath& path, double duration, double dt,
                                     double hover_thrust);

}  // namespace quadmpc
