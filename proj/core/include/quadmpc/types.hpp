#pragma once

#include <Eigen/Core>

namespace quadmpc {

inline constexpr int kStateDim = 10;
inline constexpr int kInputDim = 4;

/// 10-dimensional UAV state: position, attitude, inertial velocity, yaw rate.
/// Attitude angles are stored unwrapped; no operation applies modular reduction.
using StateVec = Eigen::Matrix<double, kStateDim, 1>;

/// 4-dimensional input: total thrust [N], roll/pitch reference angles [rad],
/// yaw-rate reference [rad/s].
using ControlVec = Eigen::Matrix<double, kInputDim, 1>;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using StateJacobian = Eigen::Matrix<double, kStateDim, kStateDim>;
using InputJacobian = Eigen::Matrix<double, kStateDim, kInputDim>;

// State vector layout.
namespace state {
inline constexpr int x = 0;
inline constexpr int y = 1;
inline constexpr int z = 2;
inline constexpr int phi = 3;
inline constexpr int theta = 4;
inline constexpr int psi = 5;
inline constexpr int vx = 6;
inline constexpr int vy = 7;
inline constexpr int vz = 8;
inline constexpr int psi_dot = 9;
}  // namespace state

// Input vector layout.
namespace input {
inline constexpr int thrust = 0;
inline constexpr int phi_ref = 1;
inline constexpr int theta_ref = 2;
inline constexpr int psi_dot_ref = 3;
}  // namespace input

inline Eigen::Ref<const Vec3> position(const StateVec& x) { return x.head<3>(); }
inline Eigen::Ref<const Vec3> attitude(const StateVec& x) { return x.segment<3>(state::phi); }
inline Eigen::Ref<const Vec3> velocity(const StateVec& x) { return x.segment<3>(state::vx); }

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

}  // namespace quadmpc
