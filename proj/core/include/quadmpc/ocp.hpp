#pragma once

#include <vector>

#include "quadmpc/model.hpp"
#include "quadmpc/obstacle.hpp"
#include "quadmpc/spline.hpp"
#include "quadmpc/types.hpp"

namespace quadmpc {

/// Diagonal weights of the tracking objective, stored as vectors.
struct Weights {
  StateVec q = (StateVec() << 10, 10, 10, 2, 2, 2, 1, 1, 1, 1).finished();
  ControlVec r = (ControlVec() << 0.2, 0.5, 0.5, 0.1).finished();
  ControlVec r_delta = (ControlVec() << 0.05, 0.1, 0.1, 0.05).finished();
  StateVec q_f = (StateVec() << 20, 20, 20, 4, 4, 4, 2, 2, 2, 2).finished();

  void validate() const;
};

enum class ObstacleMode { penalty, hard_constraint };

struct OcpConfig {
  int horizon = 30;  // steps, >= 1
  double dt = 0.05;  // s, > 0
  ControlVec u_min = (ControlVec() << 5.0, -0.35, -0.35, -1.0).finished();
  ControlVec u_max = (ControlVec() << 60.0, 0.35, 0.35, 1.0).finished();
  ObstacleMode obstacle_mode = ObstacleMode::penalty;

  void validate() const;
};

/// Multiple-shooting decision variables: states x_1..x_N and controls
/// u_0..u_{N-1}. The initial state x_0 is data, not a variable.
struct Decision {
  std::vector<StateVec> states;
  std::vector<ControlVec> controls;

  bool sized_for(int horizon) const {
    return states.size() == static_cast<std::size_t>(horizon) &&
           controls.size() == static_cast<std::size_t>(horizon);
  }
  bool all_entries_finite() const;
};

/// One finite-horizon tracking problem. refs must hold at least horizon+1
/// points (index k is the reference for node k).
struct OcpProblem {
  StateVec x0 = StateVec::Zero();
  ControlVec u_prev = ControlVec::Zero();  // anchors the first input-rate term
  std::vector<ReferencePoint> refs;
  Weights weights;
  OcpConfig config;
  ObstacleField field;
  ModelParams params;

  void validate() const;
};

/// Weighted squared tracking norm of one stage, including the input-rate term
/// toward u_prev_k.
double stage_cost(const StateVec& x_k, const ControlVec& u_k, const ControlVec& u_prev_k,
                  const StateVec& x_r, const ControlVec& u_r, const Weights& w);

double terminal_cost(const StateVec& x_n, const StateVec& x_rn, const Weights& w);

/// Per-node obstacle contribution according to the configured mode: the
/// repulsive potential, or the exact penalty 1e4*eta*margin^2 on negative
/// margins in hard-constraint mode.
double node_obstacle_cost(const Vec3& pos, const ObstacleField& field, ObstacleMode mode);
Vec3 node_obstacle_gradient(const Vec3& pos, const ObstacleField& field, ObstacleMode mode);
Mat3 node_obstacle_gn_hessian(const Vec3& pos, const ObstacleField& field, ObstacleMode mode);

/// Stage costs plus terminal cost plus the obstacle contribution at every
/// node position 0..N. Rejects a decision sized for a different horizon.
double total_objective(const Decision& d, const OcpProblem& prob);

/// Shooting-gap residuals x_{k+1} - step_euler(x_k, u_k) for k = 0..N-1.
std::vector<StateVec> continuity_residuals(const Decision& d, const OcpProblem& prob);

/// Jacobians of the Euler step: A = I + dt df/dx, B = dt df/du.
struct StepJacobians {
  StateJacobian a;
  InputJacobian b;
};
StepJacobians linearize_step(const StateVec& x, const ControlVec& u, const ModelParams& p,
                             double dt);

/// Gradient of total_objective with respect to every decision variable.
/// states[i] is the gradient w.r.t. x_{i+1}; controls[k] w.r.t. u_k.
struct ObjectiveGradient {
  std::vector<StateVec> states;
  std::vector<ControlVec> controls;
};
ObjectiveGradient objective_gradient(const Decision& d, const OcpProblem& prob);

}  // namespace quadmpc
