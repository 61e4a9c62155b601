#include "quadmpc/obstacle.hpp"

#include <stdexcept>

namespace quadmpc {

void Obstacle::validate() const {
  if (!(radius > 0.0)) throw std::invalid_argument("obstacle radius must be > 0");
  if (!(safety >= 0.0)) throw std::invalid_argument("obstacle safety must be >= 0");
  if (!center.allFinite()) throw std::invalid_argument("obstacle center must be finite");
}

void ObstacleField::validate() const {
  if (!(eta >= 0.0)) throw std::invalid_argument("obstacle eta must be >= 0");
  for (const Obstacle& obs : obstacles) obs.validate();
}

double distance(const Vec3& pos, const Obstacle& obs) { return (pos - obs.center).norm(); }

double margin(const Vec3& pos, const Obstacle& obs) {
  return distance(pos, obs) - (obs.radius + obs.safety);
}

double potential(const Vec3& pos, const Obstacle& obs, double eta) {
  const double boundary = obs.radius + obs.safety;
  const double d = distance(pos, obs);
  if (d >= boundary) return 0.0;
  const double d_eff = std::max(d, kDistanceFloor);
  const double gap = 1.0 / d_eff - 1.0 / boundary;
  return 0.5 * eta * gap * gap;
}

Vec3 potential_gradient(const Vec3& pos, const Obstacle& obs, double eta) {
  const double boundary = obs.radius + obs.safety;
  const double d = distance(pos, obs);
  // Inside the floor the floored potential is constant, so the gradient is 0.
  if (d >= boundary || d <= kDistanceFloor) return Vec3::Zero();
  const double gap = 1.0 / d - 1.0 / boundary;
  return -eta * gap / (d * d) * ((pos - obs.center) / d);
}

double total_potential(const Vec3& pos, const ObstacleField& field) {
  double sum = 0.0;
  for (const Obstacle& obs : field.obstacles) sum += potential(pos, obs, field.eta);
  return sum;
}

Vec3 total_potential_gradient(const Vec3& pos, const ObstacleField& field) {
  Vec3 sum = Vec3::Zero();
  for (const Obstacle& obs : field.obstacles) sum += potential_gradient(pos, obs, field.eta);
  return sum;
}

Mat3 potential_gn_hessian(const Vec3& pos, const Obstacle& obs, double eta) {
  const double boundary = obs.radius + obs.safety;
  const double d = distance(pos, obs);
  if (d >= boundary || d <= kDistanceFloor) return Mat3::Zero();
  const Vec3 n = (pos - obs.center) / d;
  // Radial part of the exact curvature; the tangential part is negative
  // inside the shell and is clamped away to keep the block PSD.
  const double gap = 1.0 / d - 1.0 / boundary;
  const double radial = eta * (1.0 / (d * d * d * d) + 2.0 * gap / (d * d * d));
  return radial * (n * n.transpose());
}

}  // namespace quadmpc
