#include "quadmpc/ocp.hpp"

#include <cmath>
#include <stdexcept>

namespace quadmpc {

void Weights::validate() const {
  if (!(q.array() >= 0.0).all() || !(q_f.array() >= 0.0).all() ||
      !(r.array() >= 0.0).all() || !(r_delta.array() >= 0.0).all())
    throw std::invalid_argument("weights must be >= 0");
}

void OcpConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("ocp.horizon must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("ocp.dt must be > 0");
  if (!(u_min.array() <= u_max.array()).all())
    throw std::invalid_argument("ocp.u_min must be <= ocp.u_max componentwise");
}

bool Decision::all_entries_finite() const {
  for (const StateVec& x : states)
    if (!x.allFinite()) return false;
  for (const ControlVec& u : controls)
    if (!u.allFinite()) return false;
  return true;
}

void OcpProblem::validate() const {
  weights.validate();
  config.validate();
  field.validate();
  params.validate();
  if (!x0.allFinite() || !u_prev.allFinite())
    throw std::invalid_argument("ocp problem: x0 and u_prev must be finite");
  if (refs.size() < static_cast<std::size_t>(config.horizon) + 1)
    throw std::invalid_argument("ocp problem: refs window must hold horizon+1 points");
}

static void check_sizes(const Decision& d, const OcpProblem& prob) {
  if (!d.sized_for(prob.config.horizon))
    throw std::invalid_argument("decision sized for a different horizon");
  if (prob.refs.size() < static_cast<std::size_t>(prob.config.horizon) + 1)
    throw std::invalid_argument("refs window shorter than horizon+1");
}

double stage_cost(const StateVec& x_k, const ControlVec& u_k, const ControlVec& u_prev_k,
                  const StateVec& x_r, const ControlVec& u_r, const Weights& w) {
  const StateVec ex = x_k - x_r;
  const ControlVec eu = u_k - u_r;
  const ControlVec du = u_k - u_prev_k;
  return ex.dot(w.q.cwiseProduct(ex)) + eu.dot(w.r.cwiseProduct(eu)) +
         du.dot(w.r_delta.cwiseProduct(du));
}

double terminal_cost(const StateVec& x_n, const StateVec& x_rn, const Weights& w) {
  const StateVec ex = x_n - x_rn;
  return ex.dot(w.q_f.cwiseProduct(ex));
}

// In hard-constraint mode the avoidance inequality is folded into the same
// solver as an exact penalty on negative margins. The distance entering the
// margin is floored like the potential so the term stays consistent with its
// (zeroed) gradient around an obstacle center.
namespace {
constexpr double kHardPenaltyScale = 1e4;

double hard_margin(const Vec3& pos, const Obstacle& obs) {
  return std::max(distance(pos, obs), kDistanceFloor) - (obs.radius + obs.safety);
}
}  // namespace

double node_obstacle_cost(const Vec3& pos, const ObstacleField& field, ObstacleMode mode) {
  if (mode == ObstacleMode::penalty) return total_potential(pos, field);
  const double w = kHardPenaltyScale * field.eta;
  double sum = 0.0;
  for (const Obstacle& obs : field.obstacles) {
    const double m = hard_margin(pos, obs);
    if (m < 0.0) sum += w * m * m;
  }
  return sum;
}

Vec3 node_obstacle_gradient(const Vec3& pos, const ObstacleField& field, ObstacleMode mode) {
  if (mode == ObstacleMode::penalty) return total_potential_gradient(pos, field);
  const double w = kHardPenaltyScale * field.eta;
  Vec3 sum = Vec3::Zero();
  for (const Obstacle& obs : field.obstacles) {
    const double d = distance(pos, obs);
    if (d <= kDistanceFloor) continue;
    const double m = d - (obs.radius + obs.safety);
    if (m < 0.0) sum += (2.0 * w * m / d) * (pos - obs.center);
  }
  return sum;
}

Mat3 node_obstacle_gn_hessian(const Vec3& pos, const ObstacleField& field, ObstacleMode mode) {
  Mat3 sum = Mat3::Zero();
  if (mode == ObstacleMode::penalty) {
    for (const Obstacle& obs : field.obstacles)
      sum += potential_gn_hessian(pos, obs, field.eta);
    return sum;
  }
  const double w = kHardPenaltyScale * field.eta;
  for (const Obstacle& obs : field.obstacles) {
    const double d = distance(pos, obs);
    if (d <= kDistanceFloor) continue;
    if (d - (obs.radius + obs.safety) < 0.0) {
      const Vec3 n = (pos - obs.center) / d;
      sum += 2.0 * w * (n * n.transpose());
    }
  }
  return sum;
}

double total_objective(const Decision& d, const OcpProblem& prob) {
  check_sizes(d, prob);
  const int n = prob.config.horizon;
  const ObstacleMode mode = prob.config.obstacle_mode;

  double j = 0.0;
  for (int k = 0; k < n; ++k) {
    const StateVec& x_k = (k == 0) ? prob.x0 : d.states[k - 1];
    const ControlVec& u_prev_k = (k == 0) ? prob.u_prev : d.controls[k - 1];
    j += stage_cost(x_k, d.controls[k], u_prev_k, prob.refs[k].state, prob.refs[k].input,
                    prob.weights);
  }
  j += terminal_cost(d.states[n - 1], prob.refs[n].state, prob.weights);

  j += node_obstacle_cost(position(prob.x0), prob.field, mode);
  for (int k = 1; k <= n; ++k)
    j += node_obstacle_cost(position(d.states[k - 1]), prob.field, mode);
  return j;
}

std::vector<StateVec> continuity_residuals(const Decision& d, const OcpProblem& prob) {
  check_sizes(d, prob);
  const int n = prob.config.horizon;
  std::vector<StateVec> res(n);
  for (int k = 0; k < n; ++k) {
    const StateVec& x_k = (k == 0) ? prob.x0 : d.states[k - 1];
    res[k] = d.states[k] - step_euler(x_k, d.controls[k], prob.params, prob.config.dt);
  }
  return res;
}

StepJacobians linearize_step(const StateVec& x, const ControlVec& u, const ModelParams& p,
                             double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("linearize_step: dt must be > 0");
  StateJacobian fx = StateJacobian::Zero();
  InputJacobian fu = InputJacobian::Zero();

  // d(position)/dt = velocity
  fx(state::x, state::vx) = 1.0;
  fx(state::y, state::vy) = 1.0;
  fx(state::z, state::vz) = 1.0;

  // closed-loop attitude responses
  fx(state::phi, state::phi) = -p.k_phi / p.tau_phi;
  fu(state::phi, input::phi_ref) = p.k_phi / p.tau_phi;
  fx(state::theta, state::theta) = -p.k_theta / p.tau_theta;
  fu(state::theta, input::theta_ref) = p.k_theta / p.tau_theta;
  fx(state::psi, state::psi_dot) = 1.0;
  fx(state::psi_dot, state::psi_dot) = -p.k_psi / p.tau_psi;
  fu(state::psi_dot, input::psi_dot_ref) = p.k_psi / p.tau_psi;

  // translational acceleration: (T/m) r3(phi,theta,psi) - g e3 - diag(b) v,
  // with r3 the body z axis in the inertial frame
  const double cphi = std::cos(x(state::phi)), sphi = std::sin(x(state::phi));
  const double cth = std::cos(x(state::theta)), sth = std::sin(x(state::theta));
  const double cpsi = std::cos(x(state::psi)), spsi = std::sin(x(state::psi));
  const double t_over_m = u(input::thrust) / p.mass;

  const Vec3 r3{cpsi * sth * cphi + spsi * sphi,
                spsi * sth * cphi - cpsi * sphi,
                cth * cphi};
  const Vec3 dr3_dphi{-cpsi * sth * sphi + spsi * cphi,
                      -spsi * sth * sphi - cpsi * cphi,
                      -cth * sphi};
  const Vec3 dr3_dtheta{cpsi * cth * cphi, spsi * cth * cphi, -sth * cphi};
  const Vec3 dr3_dpsi{-spsi * sth * cphi + cpsi * sphi,
                      cpsi * sth * cphi + spsi * sphi,
                      0.0};

  fx.block<3, 1>(state::vx, state::phi) = t_over_m * dr3_dphi;
  fx.block<3, 1>(state::vx, state::theta) = t_over_m * dr3_dtheta;
  fx.block<3, 1>(state::vx, state::psi) = t_over_m * dr3_dpsi;
  fx(state::vx, state::vx) = -p.drag(0);
  fx(state::vy, state::vy) = -p.drag(1);
  fx(state::vz, state::vz) = -p.drag(2);
  fu.block<3, 1>(state::vx, input::thrust) = r3 / p.mass;

  StepJacobians jac;
  jac.a = StateJacobian::Identity() + dt * fx;
  jac.b = dt * fu;
  return jac;
}

ObjectiveGradient objective_gradient(const Decision& d, const OcpProblem& prob) {
  check_sizes(d, prob);
  const int n = prob.config.horizon;
  const Weights& w = prob.weights;
  const ObstacleMode mode = prob.config.obstacle_mode;

  ObjectiveGradient g;
  g.states.assign(n, StateVec::Zero());
  g.controls.assign(n, ControlVec::Zero());

  for (int k = 0; k < n; ++k) {
    const ControlVec& u_prev_k = (k == 0) ? prob.u_prev : d.controls[k - 1];
    const ControlVec du = d.controls[k] - u_prev_k;
    g.controls[k] += 2.0 * w.r.cwiseProduct(d.controls[k] - prob.refs[k].input);
    g.controls[k] += 2.0 * w.r_delta.cwiseProduct(du);
    // du also couples backward into u_{k-1}
    if (k > 0) g.controls[k - 1] -= 2.0 * w.r_delta.cwiseProduct(du);
    if (k > 0) g.states[k - 1] += 2.0 * w.q.cwiseProduct(d.states[k - 1] - prob.refs[k].state);
  }
  g.states[n - 1] += 2.0 * w.q_f.cwiseProduct(d.states[n - 1] - prob.refs[n].state);

  for (int k = 1; k <= n; ++k)
    g.states[k - 1].head<3>() +=
        node_obstacle_gradient(position(d.states[k - 1]), prob.field, mode);
  return g;
}

}  // namespace quadmpc
