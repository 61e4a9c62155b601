#include "quadmpc/model.hpp"

#include <cmath>
#include <stdexcept>

namespace quadmpc {

void ModelParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("model.mass must be > 0");
  if (!(gravity > 0.0)) throw std::invalid_argument("model.gravity must be > 0");
  if (!(drag.array() >= 0.0).all()) throw std::invalid_argument("model.drag must be >= 0");
  if (!(tau_phi > 0.0 && tau_theta > 0.0 && tau_psi > 0.0))
    throw std::invalid_argument("model.tau must be > 0");
  if (!(k_phi > 0.0 && k_theta > 0.0 && k_psi > 0.0))
    throw std::invalid_argument("model.gain must be > 0");
}

ControlVec hover_input(const ModelParams& p) {
  ControlVec u = ControlVec::Zero();
  u(input::thrust) = p.mass * p.gravity;
  return u;
}

Mat3 rotation_matrix(double phi, double theta, double psi) {
  const double cphi = std::cos(phi), sphi = std::sin(phi);
  const double cth = std::cos(theta), sth = std::sin(theta);
  const double cpsi = std::cos(psi), spsi = std::sin(psi);
  Mat3 r;
  r << cpsi * cth, cpsi * sth * sphi - spsi * cphi, cpsi * sth * cphi + spsi * sphi,
       spsi * cth, spsi * sth * sphi + cpsi * cphi, spsi * sth * cphi - cpsi * sphi,
       -sth,       cth * sphi,                      cth * cphi;
  return r;
}

StateVec dynamics(const StateVec& x, const ControlVec& u, const ModelParams& p) {
  StateVec dx;
  dx.head<3>() = velocity(x);

  dx(state::phi) = (p.k_phi / p.tau_phi) * (u(input::phi_ref) - x(state::phi));
  dx(state::theta) = (p.k_theta / p.tau_theta) * (u(input::theta_ref) - x(state::theta));
  dx(state::psi) = x(state::psi_dot);

  const Mat3 r = rotation_matrix(x(state::phi), x(state::theta), x(state::psi));
  const Vec3 thrust_accel = r.col(2) * (u(input::thrust) / p.mass);
  dx.segment<3>(state::vx) = thrust_accel - Vec3(0.0, 0.0, p.gravity)
                             - p.drag.cwiseProduct(velocity(x));

  dx(state::psi_dot) = (p.k_psi / p.tau_psi) * (u(input::psi_dot_ref) - x(state::psi_dot));
  return dx;
}

static void check_dt(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
}

StateVec step_euler(const StateVec& x, const ControlVec& u, const ModelParams& p, double dt) {
  check_dt(dt);
  return x + dynamics(x, u, p) * dt;
}

StateVec step_rk4(const StateVec& x, const ControlVec& u, const ModelParams& p, double dt) {
  check_dt(dt);
  const StateVec k1 = dynamics(x, u, p);
  const StateVec k2 = dynamics(x + 0.5 * dt * k1, u, p);
  const StateVec k3 = dynamics(x + 0.5 * dt * k2, u, p);
  const StateVec k4 = dynamics(x + dt * k3, u, p);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace quadmpc
