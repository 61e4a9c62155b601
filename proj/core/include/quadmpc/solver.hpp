#pragma once

#include <vector>

#include "quadmpc/ocp.hpp"

namespace quadmpc {

struct SolverConfig {
  int max_iterations = 50;
  double kkt_tolerance = 1e-6;
  double line_search_shrink = 0.5;     // in (0,1)
  double line_search_min_step = 1e-8;
  double constraint_tolerance = 1e-8;

  void validate() const;
};

enum class SolveStatus { converged, max_iterations, line_search_failure };

/// Per-iteration line-search record; merit values use that iteration's mu.
struct IterationRecord {
  double merit_before = 0.0;
  double merit_after = 0.0;
  double step_length = 0.0;
  double mu = 0.0;
  double kkt = 0.0;
};

struct SolveResult {
  Decision decision;
  int iterations = 0;
  double kkt_residual = 0.0;
  double continuity_residual_inf = 0.0;
  double objective = 0.0;
  double wall_time = 0.0;  // s
  SolveStatus status = SolveStatus::max_iterations;
  std::vector<IterationRecord> trace;
};

/// Reference inputs with states rolled out by forward Euler from x0, so the
/// initial continuity residual is zero.
Decision cold_start(const OcpProblem& prob);

/// Controls shifted one step (last duplicated), states re-rolled from the new
/// x0. Rejects a decision sized for a different horizon.
Decision shift_warm_start(const Decision& prev, const OcpProblem& prob);

/// Continuity-constraint multiplier estimates from the adjoint recursion at
/// the given iterate; index k corresponds to the gap x_{k+1} - F(x_k, u_k).
std::vector<StateVec> estimate_multipliers(const Decision& d, const OcpProblem& prob);

/// Infinity norm of the projected stationarity residual (controls projected
/// onto their box) plus infinity norm of the continuity residuals.
double kkt_residual(const Decision& d, const OcpProblem& prob,
                    const std::vector<StateVec>& multipliers);

/// Warm-startable Gauss-Newton SQP over the multiple-shooting variables.
/// Linearized continuity gaps are eliminated by forward condensing, the
/// resulting box-constrained QP in the controls is solved by projected
/// gradient with active-set refinement, and steps are accepted by a
/// backtracking line search on an l1 merit function. Throws if the initial
/// objective is not finite; a line-search failure is reported in the status,
/// not thrown.
SolveResult solve(const OcpProblem& prob, const Decision& init, const SolverConfig& cfg);

}  // namespace quadmpc
