#include "quadmpc/sim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace quadmpc {

void Scenario::validate() const {
  if (name.empty()) throw std::invalid_argument("scenario.name must be non-empty");
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
      throw std::invalid_argument("scenario.name must match [A-Za-z0-9_-]+");
  if (spline_degree < 1) throw std::invalid_argument("scenario.spline_degree must be >= 1");
  if (waypoints.size() < static_cast<std::size_t>(spline_degree) + 1)
    throw std::invalid_argument("scenario.waypoints needs at least spline_degree+1 points");
  for (const Vec3& wp : waypoints)
    if (!wp.allFinite()) throw std::invalid_argument("scenario.waypoints must be finite");
  if (!(traversal_duration >= ocp.dt))
    throw std::invalid_argument("scenario.traversal_duration must be >= ocp.dt");
  if (!(sim_duration >= traversal_duration))
    throw std::invalid_argument("scenario.sim_duration must be >= traversal_duration");
  if (!(arrival_radius > 0.0)) throw std::invalid_argument("scenario.arrival_radius must be > 0");
  if (!initial_state.allFinite())
    throw std::invalid_argument("scenario.initial_state must be finite");
  if (!(std::abs(initial_state(state::theta)) <
        std::numbers::pi / 2.0 - kPitchLimitMargin))
    throw std::invalid_argument("scenario.initial_state pitch too close to gimbal lock");
  if (!wind_accel.allFinite()) throw std::invalid_argument("scenario.wind_accel must be finite");
  model.validate();
  weights.validate();
  ocp.validate();
  solver.validate();
  obstacles.validate();
  const double hover_thrust = model.mass * model.gravity;
  if (hover_thrust < ocp.u_min(input::thrust) || hover_thrust > ocp.u_max(input::thrust))
    throw std::invalid_argument("scenario: hover thrust m*g must lie within the thrust bounds");
}

ReferenceTrajectory build_reference(const Scenario& s) {
  const BSplinePath path = build_from_waypoints(s.waypoints, s.spline_degree);
  return sample_reference(path, s.traversal_duration, s.ocp.dt,
                          s.model.mass * s.model.gravity);
}

namespace {

// Plant derivative: controller model plus the constant wind acceleration on
// the velocity states.
StateVec plant_dynamics(const StateVec& x, const ControlVec& u, const Scenario& s) {
  StateVec dx = dynamics(x, u, s.model);
  dx.segment<3>(state::vx) += s.wind_accel;
  return dx;
}

StateVec plant_step(const StateVec& x, const ControlVec& u, const Scenario& s) {
  const double dt = s.ocp.dt;
  if (s.plant_integrator == PlantIntegrator::euler) return x + plant_dynamics(x, u, s) * dt;
  const StateVec k1 = plant_dynamics(x, u, s);
  const StateVec k2 = plant_dynamics(x + 0.5 * dt * k1, u, s);
  const StateVec k3 = plant_dynamics(x + 0.5 * dt * k2, u, s);
  const StateVec k4 = plant_dynamics(x + dt * k3, u, s);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::vector<ReferencePoint> window_refs(const ReferenceTrajectory& refs, int start, int horizon) {
  std::vector<ReferencePoint> out(static_cast<std::size_t>(horizon) + 1);
  const int last = static_cast<int>(refs.points.size()) - 1;
  for (int i = 0; i <= horizon; ++i) out[i] = refs.points[std::min(start + i, last)];
  return out;
}

double closest_ref_distance(const Vec3& pos, const ReferenceTrajectory& refs) {
  double best = std::numeric_limits<double>::infinity();
  for (const ReferencePoint& p : refs.points)
    best = std::min(best, (pos - position(p.state)).norm());
  return best;
}

}  // namespace

SimLog run_closed_loop(const Scenario& s) {
  s.validate();
  const ReferenceTrajectory refs = build_reference(s);
  const int steps = static_cast<int>(std::llround(s.sim_duration / s.ocp.dt));
  const int ref_last = static_cast<int>(refs.points.size()) - 1;

  SimLog log;
  log.dt = s.ocp.dt;
  log.records.reserve(static_cast<std::size_t>(steps) + 1);

  StateVec plant = s.initial_state;
  ControlVec u_prev = hover_input(s.model);
  Decision prev_solution;
  bool have_prev = false;

  for (int k = 0; k <= steps; ++k) {
    if (!(std::abs(plant(state::theta)) < std::numbers::pi / 2.0 - kPitchLimitMargin)) {
      log.aborted = true;
      log.abort_reason = "pitch magnitude exceeded the gimbal-lock guard";
      return log;
    }

    OcpProblem prob;
    prob.x0 = plant;
    prob.u_prev = u_prev;
    prob.refs = window_refs(refs, k, s.ocp.horizon);
    prob.weights = s.weights;
    prob.config = s.ocp;
    prob.field = s.obstacles;
    prob.params = s.model;

    SolveResult res;
    try {
      const Decision init = (have_prev && s.warm_start) ? shift_warm_start(prev_solution, prob)
                                                        : cold_start(prob);
      res = solve(prob, init, s.solver);
    } catch (const std::exception& e) {
      log.aborted = true;
      log.abort_reason = std::string("solver failure: ") + e.what();
      return log;
    }
    if (!res.decision.all_entries_finite() || !std::isfinite(res.objective)) {
      log.aborted = true;
      log.abort_reason = "solver produced a non-finite iterate";
      return log;
    }

    const ControlVec u = res.decision.controls.front();
    const ReferencePoint& ref = refs.points[std::min(k, ref_last)];

    SimRecord rec;
    rec.t = k * s.ocp.dt;
    rec.plant_state = plant;
    rec.applied_input = u;
    rec.reference_state = ref.state;
    rec.deviation = (position(plant) - position(ref.state)).norm();
    rec.closest_ref_distance = closest_ref_distance(position(plant), refs);
    rec.solver_iterations = res.iterations;
    rec.solve_time = res.wall_time;
    rec.kkt_residual = res.kkt_residual;
    rec.obstacle_distances.reserve(s.obstacles.obstacles.size());
    rec.obstacle_margins.reserve(s.obstacles.obstacles.size());
    for (const Obstacle& obs : s.obstacles.obstacles) {
      rec.obstacle_distances.push_back(distance(position(plant), obs));
      rec.obstacle_margins.push_back(margin(position(plant), obs));
    }
    log.records.push_back(std::move(rec));

    if (k < steps) plant = plant_step(plant, u, s);
    prev_solution = std::move(res.decision);
    u_prev = u;
    have_prev = true;
  }
  return log;
}

Metrics compute_metrics(const SimLog& log, const Scenario& s) {
  if (log.records.empty()) throw std::invalid_argument("compute_metrics: empty log");
  const std::size_t n = log.records.size();

  Metrics m;
  m.maximum_deviation = 0.0;
  m.thrust_min = std::numeric_limits<double>::infinity();
  m.thrust_max = -std::numeric_limits<double>::infinity();
  double dev_sum = 0.0, iter_sum = 0.0, time_sum = 0.0;
  std::size_t violation_steps = 0;

  for (const SimRecord& rec : log.records) {
    dev_sum += rec.deviation;
    m.maximum_deviation = std::max(m.maximum_deviation, rec.deviation);
    iter_sum += rec.solver_iterations;
    time_sum += rec.solve_time;
    m.thrust_min = std::min(m.thrust_min, rec.applied_input(input::thrust));
    m.thrust_max = std::max(m.thrust_max, rec.applied_input(input::thrust));

    bool in_margin = false, in_collision = false;
    for (std::size_t i = 0; i < rec.obstacle_margins.size(); ++i) {
      if (rec.obstacle_margins[i] < 0.0) in_margin = true;
      if (rec.obstacle_distances[i] < s.obstacles.obstacles[i].radius) in_collision = true;
    }
    if (in_margin) ++violation_steps;
    if (in_collision) ++m.hard_collision_count;
  }

  m.average_deviation = dev_sum / static_cast<double>(n);
  m.avg_solver_iterations = iter_sum / static_cast<double>(n);
  m.avg_convergence_time = time_sum / static_cast<double>(n);
  m.total_time = s.sim_duration;
  m.safety_margin_violation_fraction = static_cast<double>(violation_steps) / static_cast<double>(n);

  // navigation time: first entry into the arrival ball around the final
  // reference point that is never left again
  const Vec3 goal = position(log.records.back().reference_state);
  std::size_t first_settled = n;
  for (std::size_t i = n; i-- > 0;) {
    if ((position(log.records[i].plant_state) - goal).norm() <= s.arrival_radius)
      first_settled = i;
    else
      break;
  }
  m.navigation_time = (first_settled < n) ? log.records[first_settled].t : -1.0;
  return m;
}

MetricsComparison compare_runs(const Metrics& a, const Metrics& b) {
  if (!(a.navigation_time > 0.0))
    throw std::invalid_argument("compare_runs: baseline navigation_time must be > 0");
  MetricsComparison cmp;
  cmp.delta.average_deviation = b.average_deviation - a.average_deviation;
  cmp.delta.maximum_deviation = b.maximum_deviation - a.maximum_deviation;
  cmp.delta.avg_solver_iterations = b.avg_solver_iterations - a.avg_solver_iterations;
  cmp.delta.avg_convergence_time = b.avg_convergence_time - a.avg_convergence_time;
  cmp.delta.thrust_min = b.thrust_min - a.thrust_min;
  cmp.delta.thrust_max = b.thrust_max - a.thrust_max;
  cmp.delta.total_time = b.total_time - a.total_time;
  cmp.delta.navigation_time = b.navigation_time - a.navigation_time;
  cmp.delta.safety_margin_violation_fraction =
      b.safety_margin_violation_fraction - a.safety_margin_violation_fraction;
  cmp.delta.hard_collision_count = b.hard_collision_count - a.hard_collision_count;
  cmp.navigation_time_increase_pct =
      100.0 * (b.navigation_time - a.navigation_time) / a.navigation_time;
  return cmp;
}

}  // namespace quadmpc
