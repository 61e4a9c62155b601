#include "quadmpc/spline.hpp"

#include <cmath>
#include <stdexcept>

namespace quadmpc {

void BSplinePath::validate() const {
  if (degree < 1) throw std::invalid_argument("spline degree must be >= 1");
  const std::size_t n = control_points.size();
  if (n < static_cast<std::size_t>(degree) + 1)
    throw std::invalid_argument("spline needs at least degree+1 control points");
  if (knots.size() != n + degree + 1)
    throw std::invalid_argument("knot count must be control points + degree + 1");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (knots[i] < knots[i - 1]) throw std::invalid_argument("knots must be non-decreasing");
  for (int i = 0; i <= degree; ++i) {
    if (knots[i] != knots.front() || knots[knots.size() - 1 - i] != knots.back())
      throw std::invalid_argument("knots must be clamped (end multiplicity degree+1)");
  }
  if (!(knots.front() < knots.back()))
    throw std::invalid_argument("knot range must be non-degenerate");
}

double bspline_basis(int i, int p, double t, const std::vector<double>& knots) {
  if (i < 0 || p < 0 || static_cast<std::size_t>(i + p + 1) >= knots.size())
    throw std::invalid_argument("bspline_basis: index out of range");
  if (p == 0) return (knots[i] <= t && t < knots[i + 1]) ? 1.0 : 0.0;

  double left = 0.0;
  const double den_l = knots[i + p] - knots[i];
  if (den_l > 0.0) left = (t - knots[i]) / den_l * bspline_basis(i, p - 1, t, knots);

  double right = 0.0;
  const double den_r = knots[i + p + 1] - knots[i + 1];
  if (den_r > 0.0) right = (knots[i + p + 1] - t) / den_r * bspline_basis(i + 1, p - 1, t, knots);

  return left + right;
}

std::vector<double> make_clamped_knots(int n_ctrl, int p) {
  if (p < 1) throw std::invalid_argument("make_clamped_knots: degree must be >= 1");
  if (n_ctrl <= p) throw std::invalid_argument("make_clamped_knots: need n_ctrl >= degree+1");
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(n_ctrl) + p + 1);
  const int interior = n_ctrl - p - 1;
  for (int i = 0; i <= p; ++i) knots.push_back(0.0);
  for (int j = 1; j <= interior; ++j)
    knots.push_back(static_cast<double>(j) / static_cast<double>(interior + 1));
  for (int i = 0; i <= p; ++i) knots.push_back(1.0);
  return knots;
}

Vec3 eval(const BSplinePath& path, double t) {
  path.validate();
  if (!(t >= path.t_min() && t <= path.t_max()))
    throw std::invalid_argument("eval: parameter outside the knot range");
  // The half-open degree-0 intervals make every basis vanish at the last
  // knot; the curve limit there is the last control point.
  if (t >= path.t_max()) return path.control_points.back();
  Vec3 point = Vec3::Zero();
  for (std::size_t i = 0; i < path.control_points.size(); ++i)
    point += bspline_basis(static_cast<int>(i), path.degree, t, path.knots) *
             path.control_points[i];
  return point;
}

BSplinePath build_from_waypoints(const std::vector<Vec3>& waypoints, int degree) {
  if (waypoints.size() < static_cast<std::size_t>(degree) + 1)
    throw std::invalid_argument("build_from_waypoints: need at least degree+1 waypoints");
  BSplinePath path;
  path.degree = degree;
  path.control_points = waypoints;
  path.knots = make_clamped_knots(static_cast<int>(waypoints.size()), degree);
  path.validate();
  return path;
}

ReferenceTrajectory sample_reference(const BSplinePath& path, double duration, double dt,
                                     double hover_thrust) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_reference: dt must be > 0");
  if (duration < dt) throw std::invalid_argument("sample_reference: duration must be >= dt");
  const int n = static_cast<int>(std::llround(duration / dt));
  const double t0 = path.t_min();
  const double t1 = path.t_max();

  ReferenceTrajectory traj;
  traj.dt = dt;
  traj.points.resize(static_cast<std::size_t>(n) + 1);

  std::vector<Vec3> positions(traj.points.size());
  for (int k = 0; k <= n; ++k)
    positions[k] = eval(path, t0 + (t1 - t0) * (static_cast<double>(k) / n));

  for (int k = 0; k <= n; ++k) {
    ReferencePoint& ref = traj.points[k];
    ref.state = StateVec::Zero();
    ref.state.head<3>() = positions[k];
    const Vec3 vel = (k < n) ? ((positions[k + 1] - positions[k]) / dt)
                             : ((positions[n] - positions[n - 1]) / dt);
    ref.state.segment<3>(state::vx) = vel;
    ref.input = ControlVec::Zero();
    ref.input(input::thrust) = hover_thrust;
  }
  return traj;
}

}  // namespace quadmpc
