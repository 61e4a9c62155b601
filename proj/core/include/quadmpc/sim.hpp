#pragma once

#include <string>
#include <vector>

#include "quadmpc/solver.hpp"

namespace quadmpc {

enum class PlantIntegrator { euler, rk4 };

/// Complete description of one closed-loop run. Everything is defaulted
/// except the name and the waypoints.
struct Scenario {
  std::string name;
  std::vector<Vec3> waypoints;
  int spline_degree = 3;
  double traversal_duration = 20.0;  // s, reference sweep time
  double sim_duration = 25.0;        // s, >= traversal_duration
  StateVec initial_state = StateVec::Zero();
  ModelParams model;
  Weights weights;
  OcpConfig ocp;
  SolverConfig solver;
  ObstacleField obstacles;
  PlantIntegrator plant_integrator = PlantIntegrator::euler;
  Vec3 wind_accel{0.0, 0.0, 0.0};  // m/s^2, applied to the plant only
  double arrival_radius = 0.3;     // m
  bool warm_start = true;

  void validate() const;
};

// Scenarios must stay clear of pitch gimbal lock; the simulator asserts this
// bound on the plant state every step.
inline constexpr double kPitchLimitMargin = 0.1;

struct SimRecord {
  double t = 0.0;
  StateVec plant_state = StateVec::Zero();
  ControlVec applied_input = ControlVec::Zero();
  StateVec reference_state = StateVec::Zero();
  double deviation = 0.0;             // position error vs the time-indexed reference
  double closest_ref_distance = 0.0;  // distance to the nearest sampled reference point
  int solver_iterations = 0;
  double solve_time = 0.0;  // s, wall clock
  double kkt_residual = 0.0;
  std::vector<double> obstacle_distances;
  std::vector<double> obstacle_margins;
};

struct SimLog {
  double dt = 0.0;
  std::vector<SimRecord> records;
  bool aborted = false;
  std::string abort_reason;
};

/// Summary statistics in the shape of the usual closed-loop report.
/// navigation_time is -1 when the arrival radius is never permanently
/// reached.
struct Metrics {
  double average_deviation = 0.0;
  double maximum_deviation = 0.0;
  double avg_solver_iterations = 0.0;
  double avg_convergence_time = 0.0;
  double thrust_min = 0.0;
  double thrust_max = 0.0;
  double total_time = 0.0;
  double navigation_time = -1.0;
  double safety_margin_violation_fraction = 0.0;
  int hard_collision_count = 0;
};

struct MetricsComparison {
  Metrics delta;  // b - a, fieldwise
  double navigation_time_increase_pct = 0.0;
};

/// Reference trajectory a scenario tracks: the waypoint spline sampled at the
/// controller rate over the traversal duration.
ReferenceTrajectory build_reference(const Scenario& s);

/// Receding-horizon loop: solve, apply the first input to the plant, advance,
/// log. The reference window holds its last point beyond the trajectory end.
/// Solver failures and pitch-limit breaches abort with the partial log.
SimLog run_closed_loop(const Scenario& s);

/// Rejects an empty log.
Metrics compute_metrics(const SimLog& log, const Scenario& s);

/// Fieldwise deltas plus the percentage navigation-time increase of b over a.
/// Rejects a.navigation_time <= 0.
MetricsComparison compare_runs(const Metrics& a, const Metrics& b);

}  // namespace quadmpc
