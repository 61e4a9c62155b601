#pragma once

#include <vector>

#include "quadmpc/types.hpp"

namespace quadmpc {

/// Sphere obstacle with a safety shell around it.
struct Obstacle {
  Vec3 center{0.0, 0.0, 0.0};
  double radius = 0.5;   // m, > 0
  double safety = 0.5;   // m, >= 0

  void validate() const;
};

struct ObstacleField {
  std::vector<Obstacle> obstacles;
  double eta = 10.0;  // repulsion gain, >= 0

  void validate() const;
};

// Distances below this are floored before inversion so the repulsive
// potential stays finite when an iterate crosses an obstacle center.
inline constexpr double kDistanceFloor = 1e-6;

/// Euclidean distance from pos to the obstacle center.
double distance(const Vec3& pos, const Obstacle& obs);

/// Signed clearance to the safety sphere: distance - (radius + safety).
/// Nonnegative iff the avoidance constraint holds.
double margin(const Vec3& pos, const Obstacle& obs);

/// Repulsive potential: (eta/2) (1/d - 1/(r+ds))^2 inside the safety sphere,
/// 0 outside.
double potential(const Vec3& pos, const Obstacle& obs, double eta);

/// Analytic gradient of `potential` w.r.t. pos; zero outside the safety
/// sphere and within the floored core.
Vec3 potential_gradient(const Vec3& pos, const Obstacle& obs, double eta);

/// Sum of potentials over all obstacles in the field.
double total_potential(const Vec3& pos, const ObstacleField& field);

/// Sum of potential gradients over all obstacles in the field.
Vec3 total_potential_gradient(const Vec3& pos, const ObstacleField& field);

/// Gauss-Newton curvature of `potential` w.r.t. pos: eta/d^4 * n n^T on the
/// residual (1/d - 1/(r+ds)), which is positive semidefinite by construction.
Mat3 potential_gn_hessian(const Vec3& pos, const Obstacle& obs, double eta);

}  // namespace quadmpc
