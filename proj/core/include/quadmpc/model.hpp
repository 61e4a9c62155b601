#pragma once

#include "quadmpc/types.hpp"

namespace quadmpc {

/// Continuous-time controller model parameters.
///
/// Translational motion: accel = (1/m) R [0,0,T]^T + [0,0,-g]^T - diag(b) vel,
/// with drag opposing velocity. Roll, pitch and yaw rate follow closed-loop
/// first-order responses toward their references with time constant tau and
/// gain k per axis.
struct ModelParams {
  double mass = 3.787;     // kg; default puts hover thrust at ~37.15 N
  double gravity = 9.81;   // m/s^2
  Vec3 drag{0.1, 0.1, 0.2};  // 1/s, per inertial axis
  double tau_phi = 0.2;    // s
  double tau_theta = 0.2;  // s
  double tau_psi = 0.3;    // s
  double k_phi = 1.0;
  double k_theta = 1.0;
  double k_psi = 1.0;

  /// Throws std::invalid_argument if any invariant is violated.
  void validate() const;
};

/// Thrust balancing gravity at level attitude, as a full input vector.
ControlVec hover_input(const ModelParams& p);

/// Body-to-inertial rotation, Z-Y-X (yaw-pitch-roll) intrinsic composition.
Mat3 rotation_matrix(double phi, double theta, double psi);

/// Time derivative of the 10-dimensional state.
StateVec dynamics(const StateVec& x, const ControlVec& u, const ModelParams& p);

/// Forward Euler step x + f(x,u) dt. Rejects dt <= 0.
StateVec step_euler(const StateVec& x, const ControlVec& u, const ModelParams& p, double dt);

/// Classic fourth-order Runge-Kutta step with zero-order-hold input.
/// Rejects dt <= 0.
StateVec step_rk4(const StateVec& x, const ControlVec& u, const ModelParams& p, double dt);

}  // namespace quadmpc
