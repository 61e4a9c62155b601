#include "quadmpc/scenario_io.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace quadmpc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw std::invalid_argument(where + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path.empty() ? "document" : path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known) fail(join(path, it.key()), "unknown key");
  }
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(join(path, key), "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(join(path, key), "expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd get_vector(const json& obj, const std::string& path, const char* key,
                           const Eigen::VectorXd& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != fallback.size())
    fail(join(path, key),
         "expected an array of " + std::to_string(fallback.size()) + " numbers");
  Eigen::VectorXd out(fallback.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!v[i].is_number()) fail(join(path, key), "expected an array of numbers");
    out(i) = v[i].get<double>();
  }
  return out;
}

Vec3 get_vec3(const json& obj, const std::string& path, const char* key, const Vec3& fallback) {
  return Vec3(get_vector(obj, path, key, Eigen::VectorXd(fallback)));
}

// Dotted-path override "a.b.c=value"; the value is parsed as JSON and falls
// back to a plain string so enum values need no extra quoting.
void apply_override(json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    fail("--set " + assignment, "expected key=value");
  const std::string keypath = assignment.substr(0, eq);
  const std::string value_text = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::parse_error&) {
    value = value_text;
  }

  json* node = &doc;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = keypath.find('.', begin);
    const std::string key = keypath.substr(begin, dot - begin);
    if (key.empty()) fail("--set " + assignment, "empty key segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

int line_of_offset(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

Scenario scenario_from_json(const json& doc, const std::string& src) {
  check_keys(doc, "",
             {"name", "waypoints", "spline_degree", "traversal_duration", "sim_duration",
              "arrival_radius", "plant_integrator", "wind_accel", "warm_start", "initial_state",
              "model", "weights", "ocp", "solver", "obstacles"});
  Scenario s;

  if (!doc.contains("name")) fail(src, "missing required key 'name'");
  s.name = get_string(doc, "", "name", "");

  if (!doc.contains("waypoints")) fail(src, "missing required key 'waypoints'");
  const json& wps = doc.at("waypoints");
  if (!wps.is_array() || wps.empty()) fail("waypoints", "expected a non-empty array of points");
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const json& wp = wps[i];
    if (!wp.is_array() || wp.size() != 3 || !wp[0].is_number() || !wp[1].is_number() ||
        !wp[2].is_number())
      fail("waypoints[" + std::to_string(i) + "]", "expected [x, y, z]");
    s.waypoints.emplace_back(wp[0].get<double>(), wp[1].get<double>(), wp[2].get<double>());
  }

  s.spline_degree = get_int(doc, "", "spline_degree", s.spline_degree);
  s.traversal_duration = get_number(doc, "", "traversal_duration", s.traversal_duration);
  s.sim_duration = get_number(doc, "", "sim_duration", s.traversal_duration + 5.0);
  s.arrival_radius = get_number(doc, "", "arrival_radius", s.arrival_radius);
  s.wind_accel = get_vec3(doc, "", "wind_accel", s.wind_accel);
  s.warm_start = get_bool(doc, "", "warm_start", s.warm_start);

  const std::string integ = get_string(doc, "", "plant_integrator", "euler");
  if (integ == "euler")
    s.plant_integrator = PlantIntegrator::euler;
  else if (integ == "rk4")
    s.plant_integrator = PlantIntegrator::rk4;
  else
    fail("plant_integrator", "expected \"euler\" or \"rk4\"");

  if (doc.contains("model")) {
    const json& m = doc.at("model");
    check_keys(m, "model", {"mass", "gravity", "drag", "tau", "gain"});
    s.model.mass = get_number(m, "model", "mass", s.model.mass);
    s.model.gravity = get_number(m, "model", "gravity", s.model.gravity);
    s.model.drag = get_vec3(m, "model", "drag", s.model.drag);
    const Vec3 tau = get_vec3(m, "model", "tau",
                              Vec3(s.model.tau_phi, s.model.tau_theta, s.model.tau_psi));
    s.model.tau_phi = tau(0);
    s.model.tau_theta = tau(1);
    s.model.tau_psi = tau(2);
    const Vec3 gain =
        get_vec3(m, "model", "gain", Vec3(s.model.k_phi, s.model.k_theta, s.model.k_psi));
    s.model.k_phi = gain(0);
    s.model.k_theta = gain(1);
    s.model.k_psi = gain(2);
  }

  if (doc.contains("initial_state")) {
    const json& init = doc.at("initial_state");
    check_keys(init, "initial_state", {"position", "attitude", "velocity", "yaw_rate"});
    const Vec3 pos = get_vec3(init, "initial_state", "position", s.waypoints.front());
    const Vec3 att = get_vec3(init, "initial_state", "attitude", Vec3::Zero());
    const Vec3 vel = get_vec3(init, "initial_state", "velocity", Vec3::Zero());
    s.initial_state.head<3>() = pos;
    s.initial_state.segment<3>(state::phi) = att;
    s.initial_state.segment<3>(state::vx) = vel;
    s.initial_state(state::psi_dot) = get_number(init, "initial_state", "yaw_rate", 0.0);
  } else {
    s.initial_state.head<3>() = s.waypoints.front();
  }

  if (doc.contains("weights")) {
    const json& w = doc.at("weights");
    check_keys(w, "weights", {"q", "r", "r_delta", "q_f"});
    s.weights.q = get_vector(w, "weights", "q", Eigen::VectorXd(s.weights.q));
    s.weights.r = ControlVec(get_vector(w, "weights", "r", Eigen::VectorXd(s.weights.r)));
    s.weights.r_delta =
        ControlVec(get_vector(w, "weights", "r_delta", Eigen::VectorXd(s.weights.r_delta)));
    s.weights.q_f = get_vector(w, "weights", "q_f", Eigen::VectorXd(s.weights.q_f));
  }

  if (doc.contains("ocp")) {
    const json& o = doc.at("ocp");
    check_keys(o, "ocp", {"horizon", "dt", "u_min", "u_max", "obstacle_mode"});
    s.ocp.horizon = get_int(o, "ocp", "horizon", s.ocp.horizon);
    s.ocp.dt = get_number(o, "ocp", "dt", s.ocp.dt);
    s.ocp.u_min = ControlVec(get_vector(o, "ocp", "u_min", Eigen::VectorXd(s.ocp.u_min)));
    s.ocp.u_max = ControlVec(get_vector(o, "ocp", "u_max", Eigen::VectorXd(s.ocp.u_max)));
    const std::string mode = get_string(o, "ocp", "obstacle_mode", "penalty");
    if (mode == "penalty")
      s.ocp.obstacle_mode = ObstacleMode::penalty;
    else if (mode == "hard_constraint")
      s.ocp.obstacle_mode = ObstacleMode::hard_constraint;
    else
      fail("ocp.obstacle_mode", "expected \"penalty\" or \"hard_constraint\"");
  }

  if (doc.contains("solver")) {
    const json& sv = doc.at("solver");
    check_keys(sv, "solver",
               {"max_iterations", "kkt_tolerance", "line_search_shrink", "line_search_min_step",
                "constraint_tolerance"});
    s.solver.max_iterations = get_int(sv, "solver", "max_iterations", s.solver.max_iterations);
    s.solver.kkt_tolerance = get_number(sv, "solver", "kkt_tolerance", s.solver.kkt_tolerance);
    s.solver.line_search_shrink =
        get_number(sv, "solver", "line_search_shrink", s.solver.line_search_shrink);
    s.solver.line_search_min_step =
        get_number(sv, "solver", "line_search_min_step", s.solver.line_search_min_step);
    s.solver.constraint_tolerance =
        get_number(sv, "solver", "constraint_tolerance", s.solver.constraint_tolerance);
  }

  if (doc.contains("obstacles")) {
    const json& ob = doc.at("obstacles");
    check_keys(ob, "obstacles", {"eta", "spheres"});
    s.obstacles.eta = get_number(ob, "obstacles", "eta", s.obstacles.eta);
    if (ob.contains("spheres")) {
      const json& spheres = ob.at("spheres");
      if (!spheres.is_array()) fail("obstacles.spheres", "expected an array");
      for (std::size_t i = 0; i < spheres.size(); ++i) {
        const std::string path = "obstacles.spheres[" + std::to_string(i) + "]";
        check_keys(spheres[i], path, {"center", "radius", "safety"});
        Obstacle obs;
        obs.center = get_vec3(spheres[i], path, "center", Vec3::Zero());
        obs.radius = get_number(spheres[i], path, "radius", obs.radius);
        obs.safety = get_number(spheres[i], path, "safety", obs.safety);
        if (!(obs.radius > 0.0)) fail(path + ".radius", "must be > 0");
        if (!(obs.safety >= 0.0)) fail(path + ".safety", "must be >= 0");
        s.obstacles.obstacles.push_back(obs);
      }
    }
  }

  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    fail(src, e.what());
  }
  return s;
}

json json_from_scenario(const Scenario& s) {
  json doc;
  doc["name"] = s.name;
  json wps = json::array();
  for (const Vec3& wp : s.waypoints) wps.push_back({wp(0), wp(1), wp(2)});
  doc["waypoints"] = wps;
  doc["spline_degree"] = s.spline_degree;
  doc["traversal_duration"] = s.traversal_duration;
  doc["sim_duration"] = s.sim_duration;
  doc["arrival_radius"] = s.arrival_radius;
  doc["plant_integrator"] = s.plant_integrator == PlantIntegrator::euler ? "euler" : "rk4";
  doc["wind_accel"] = {s.wind_accel(0), s.wind_accel(1), s.wind_accel(2)};
  doc["warm_start"] = s.warm_start;
  doc["initial_state"] = {
      {"position", {s.initial_state(state::x), s.initial_state(state::y), s.initial_state(state::z)}},
      {"attitude",
       {s.initial_state(state::phi), s.initial_state(state::theta), s.initial_state(state::psi)}},
      {"velocity",
       {s.initial_state(state::vx), s.initial_state(state::vy), s.initial_state(state::vz)}},
      {"yaw_rate", s.initial_state(state::psi_dot)}};
  doc["model"] = {{"mass", s.model.mass},
                  {"gravity", s.model.gravity},
                  {"drag", {s.model.drag(0), s.model.drag(1), s.model.drag(2)}},
                  {"tau", {s.model.tau_phi, s.model.tau_theta, s.model.tau_psi}},
                  {"gain", {s.model.k_phi, s.model.k_theta, s.model.k_psi}}};
  doc["weights"] = {{"q", std::vector<double>(s.weights.q.data(), s.weights.q.data() + 10)},
                    {"r", std::vector<double>(s.weights.r.data(), s.weights.r.data() + 4)},
                    {"r_delta",
                     std::vector<double>(s.weights.r_delta.data(), s.weights.r_delta.data() + 4)},
                    {"q_f", std::vector<double>(s.weights.q_f.data(), s.weights.q_f.data() + 10)}};
  doc["ocp"] = {{"horizon", s.ocp.horizon},
                {"dt", s.ocp.dt},
                {"u_min", std::vector<double>(s.ocp.u_min.data(), s.ocp.u_min.data() + 4)},
                {"u_max", std::vector<double>(s.ocp.u_max.data(), s.ocp.u_max.data() + 4)},
                {"obstacle_mode",
                 s.ocp.obstacle_mode == ObstacleMode::penalty ? "penalty" : "hard_constraint"}};
  doc["solver"] = {{"max_iterations", s.solver.max_iterations},
                   {"kkt_tolerance", s.solver.kkt_tolerance},
                   {"line_search_shrink", s.solver.line_search_shrink},
                   {"line_search_min_step", s.solver.line_search_min_step},
                   {"constraint_tolerance", s.solver.constraint_tolerance}};
  json spheres = json::array();
  for (const Obstacle& obs : s.obstacles.obstacles)
    spheres.push_back({{"center", {obs.center(0), obs.center(1), obs.center(2)}},
                       {"radius", obs.radius},
                       {"safety", obs.safety}});
  doc["obstacles"] = {{"eta", s.obstacles.eta}, {"spheres", spheres}};
  return doc;
}

void append_g9(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out += buf;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& source_name,
                             const std::vector<std::string>& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(source_name + ":" + std::to_string(line_of_offset(text, e.byte)) +
                                ": " + e.what());
  }
  for (const std::string& assignment : overrides) apply_override(doc, assignment);
  return scenario_from_json(doc, source_name);
}

Scenario load_scenario(const std::filesystem::path& file,
                       const std::vector<std::string>& overrides) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open scenario file: " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), file.string(), overrides);
}

std::string resolved_scenario_json(const Scenario& s) {
  return json_from_scenario(s).dump(2) + "\n";
}

std::string trajectory_csv(const SimLog& log, const Scenario& s, bool include_timing) {
  std::string out =
      "t,x,y,z,phi,theta,psi,vx,vy,vz,psi_dot,"
      "T,phi_r,theta_r,psi_dot_r,"
      "ref_x,ref_y,ref_z,ref_phi,ref_theta,ref_psi,ref_vx,ref_vy,ref_vz,ref_psi_dot,"
      "deviation,iterations,solve_time,kkt_residual";
  for (std::size_t i = 0; i < s.obstacles.obstacles.size(); ++i)
    out += ",obs" + std::to_string(i) + "_margin";
  out += "\n";

  for (const SimRecord& rec : log.records) {
    append_g9(out, rec.t);
    for (int i = 0; i < kStateDim; ++i) {
      out += ',';
      append_g9(out, rec.plant_state(i));
    }
    for (int i = 0; i < kInputDim; ++i) {
      out += ',';
      append_g9(out, rec.applied_input(i));
    }
    for (int i = 0; i < kStateDim; ++i) {
      out += ',';
      append_g9(out, rec.reference_state(i));
    }
    out += ',';
    append_g9(out, rec.deviation);
    out += ',' + std::to_string(rec.solver_iterations);
    out += ',';
    append_g9(out, include_timing ? rec.solve_time : 0.0);
    out += ',';
    append_g9(out, rec.kkt_residual);
    for (double m : rec.obstacle_margins) {
      out += ',';
      append_g9(out, m);
    }
    out += "\n";
  }
  return out;
}

std::string metrics_json(const Metrics& m, const std::string& scenario_name) {
  json doc;
  doc["scenario"] = scenario_name;
  doc["average_deviation"] = m.average_deviation;
  doc["maximum_deviation"] = m.maximum_deviation;
  doc["avg_solver_iterations"] = m.avg_solver_iterations;
  doc["avg_convergence_time"] = m.avg_convergence_time;
  doc["thrust_min"] = m.thrust_min;
  doc["thrust_max"] = m.thrust_max;
  doc["total_time"] = m.total_time;
  doc["navigation_time"] = m.navigation_time;
  doc["safety_margin_violation_fraction"] = m.safety_margin_violation_fraction;
  doc["hard_collision_count"] = m.hard_collision_count;
  return doc.dump(2) + "\n";
}

Metrics parse_metrics_text(const std::string& text, const std::string& source_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(source_name + ":" + std::to_string(line_of_offset(text, e.byte)) +
                                ": " + e.what());
  }
  check_keys(doc, "",
             {"scenario", "average_deviation", "maximum_deviation", "avg_solver_iterations",
              "avg_convergence_time", "thrust_min", "thrust_max", "total_time", "navigation_time",
              "safety_margin_violation_fraction", "hard_collision_count"});
  Metrics m;
  try {
    m.average_deviation = doc.at("average_deviation").get<double>();
    m.maximum_deviation = doc.at("maximum_deviation").get<double>();
    m.avg_solver_iterations = doc.at("avg_solver_iterations").get<double>();
    m.avg_convergence_time = doc.at("avg_convergence_time").get<double>();
    m.thrust_min = doc.at("thrust_min").get<double>();
    m.thrust_max = doc.at("thrust_max").get<double>();
    m.total_time = doc.at("total_time").get<double>();
    m.navigation_time = doc.at("navigation_time").get<double>();
    m.safety_margin_violation_fraction =
        doc.at("safety_margin_violation_fraction").get<double>();
    m.hard_collision_count = doc.at("hard_collision_count").get<int>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(source_name + ": " + e.what());
  }
  return m;
}

Metrics load_metrics(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open metrics file: " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_metrics_text(buf.str(), file.string());
}

std::string comparison_report(const Metrics& a, const Metrics& b, const std::string& name_a,
                              const std::string& name_b) {
  const MetricsComparison cmp = compare_runs(a, b);
  std::string out = "comparison: " + name_a + " -> " + name_b + "\n";
  auto row = [&out](const char* label, double va, double vb, double d) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-36s %14.6g %14.6g %+14.6g\n", label, va, vb, d);
    out += buf;
  };
  char head[160];
  std::snprintf(head, sizeof(head), "  %-36s %14s %14s %14s\n", "metric", name_a.c_str(),
                name_b.c_str(), "delta");
  out += head;
  row("average_deviation [m]", a.average_deviation, b.average_deviation,
      cmp.delta.average_deviation);
  row("maximum_deviation [m]", a.maximum_deviation, b.maximum_deviation,
      cmp.delta.maximum_deviation);
  row("avg_solver_iterations", a.avg_solver_iterations, b.avg_solver_iterations,
      cmp.delta.avg_solver_iterations);
  row("avg_convergence_time [s]", a.avg_convergence_time, b.avg_convergence_time,
      cmp.delta.avg_convergence_time);
  row("thrust_min [N]", a.thrust_min, b.thrust_min, cmp.delta.thrust_min);
  row("thrust_max [N]", a.thrust_max, b.thrust_max, cmp.delta.thrust_max);
  row("total_time [s]", a.total_time, b.total_time, cmp.delta.total_time);
  row("navigation_time [s]", a.navigation_time, b.navigation_time, cmp.delta.navigation_time);
  row("safety_margin_violation_fraction", a.safety_margin_violation_fraction,
      b.safety_margin_violation_fraction, cmp.delta.safety_margin_violation_fraction);
  row("hard_collision_count", a.hard_collision_count, b.hard_collision_count,
      static_cast<double>(cmp.delta.hard_collision_count));
  char pct[80];
  std::snprintf(pct, sizeof(pct), "  navigation time increase: %+.2f %%\n",
                cmp.navigation_time_increase_pct);
  out += pct;
  return out;
}

std::string path_csv(const Scenario& s, int samples) {
  if (samples < 2) throw std::invalid_argument("path: samples must be >= 2");
  s.validate();
  const BSplinePath path = build_from_waypoints(s.waypoints, s.spline_degree);
  std::string out = "t,x,y,z\n";
  for (int i = 0; i < samples; ++i) {
    const double frac = static_cast<double>(i) / (samples - 1);
    const double t = s.traversal_duration * frac;
    const Vec3 p = eval(path, path.t_min() + (path.t_max() - path.t_min()) * frac);
    append_g9(out, t);
    out += ',';
    append_g9(out, p(0));
    out += ',';
    append_g9(out, p(1));
    out += ',';
    append_g9(out, p(2));
    out += "\n";
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& file, const std::string& content) {
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

RunOutcome run_scenario_to_dir(const Scenario& s, const std::filesystem::path& output_dir,
                               bool include_timing) {
  std::filesystem::create_directories(output_dir);
  RunOutcome outcome;
  outcome.artifacts.trajectory_csv = output_dir / (s.name + "_trajectory.csv");
  outcome.artifacts.metrics_report = output_dir / (s.name + "_metrics.json");
  outcome.artifacts.scenario_echo = output_dir / (s.name + "_scenario.json");

  write_file_atomic(outcome.artifacts.scenario_echo, resolved_scenario_json(s));
  outcome.log = run_closed_loop(s);
  write_file_atomic(outcome.artifacts.trajectory_csv,
                    trajectory_csv(outcome.log, s, include_timing));
  if (!outcome.log.aborted) {
    outcome.metrics = compute_metrics(outcome.log, s);
    write_file_atomic(outcome.artifacts.metrics_report, metrics_json(outcome.metrics, s.name));
  }
  return outcome;
}

}  // namespace quadmpc
