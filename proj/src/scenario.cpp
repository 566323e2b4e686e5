#include "vistrack/scenario.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace vistrack {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(where, "unknown key '" + key + "'");
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(where + "." + key, e.what());
  }
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(number(x, where));
  return v;
}

SmallVec small_vec(const json& j, const std::string& where) {
  const auto v = numbers(j, where);
  if (v.empty() || v.size() > 3) fail(where, "expected 1 to 3 components");
  SmallVec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

template <typename M>
M square_matrix(const json& j, int n, const std::string& where) {
  const auto v = numbers(j, where);
  if (static_cast<int>(v.size()) != n * n) fail(where, "expected " + std::to_string(n * n) + " row-major entries");
  M m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = v[static_cast<std::size_t>(r * n + c)];
  return m;
}

template <typename M>
json matrix_json(const M& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  return a;
}

json vec_json(const SmallVec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

template <typename M>
void check_psd(const M& m, const std::string& where) {
  if (!m.allFinite()) fail(where, "non-finite entries");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) fail(where, "matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(m), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12) fail(where, "matrix is not positive semidefinite");
}

SmallMat default_sensor_cov(SensorKind k) {
  SmallMat m = SmallMat::Zero(k == SensorKind::RangeBearing ? 2 : 3, k == SensorKind::RangeBearing ? 2 : 3);
  if (k == SensorKind::RangeBearing) {
    m.diagonal() << 0.3, 0.05;
  } else {
    m.diagonal() << 1e-2, 0.5e-2, 1e-2;
  }
  return m;
}

std::vector<SmallVec> waypoint_controls(const SmallVec& init, const json& wps, double speed, double dt,
                                        const std::string& where) {
  if (!(speed > 0.0)) fail(where, "waypoint speed must be positive");
  std::vector<SmallVec> controls;
  Vec2 at = target_position(init);
  if (!wps.is_array()) fail(where, "waypoints must be an array");
  for (const auto& w : wps) {
    const auto p = numbers(w, where);
    if (p.size() != 2) fail(where, "waypoints are [x, y] pairs");
    const Vec2 next(p[0], p[1]);
    const double len = (next - at).norm();
    if (len == 0.0) continue;
    const int n = static_cast<int>(std::ceil(len / (speed * dt) - 1e-9));
    const Vec2 vel = (next - at) / (n * dt);
    for (int i = 0; i < n; ++i) controls.push_back(SmallVec(Eigen::Vector2d(vel)));
    at = next;
  }
  return controls;
}

}  // namespace

void Scenario::validate() const {
  if (!(width > 0.0 && height > 0.0)) fail("map", "width and height must be positive");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    for (const Vec2& v : obstacles[i].vertices()) {
      if (v.x() < 0.0 || v.y() < 0.0 || v.x() > width || v.y() > height) {
        fail("obstacles[" + std::to_string(i) + "]", "vertex outside the map bounds");
      }
    }
    if (obstacles[i].contains_strict(robot_init.position, 0.0)) fail("robot_init", "starts inside an obstacle");
  }
  try {
    fov.validate();
    planner.validate();
    scp.validate();
  } catch (const std::invalid_argument& e) {
    fail("scenario", e.what());
  }
  const int dt = target.model.state_dim();
  if (target.init.size() != dt) fail("target.init", "dimension does not match the target model");
  if (noise.target.rows() != dt) fail("noise.target", "dimension does not match the target model");
  if (sensor.noise_cov.rows() != sensor.dim()) fail("sensor.noise_cov", "dimension does not match the sensor");
  if (sensor.kind == SensorKind::CameraPose && dt != 3) fail("sensor", "camera_pose needs a unicycle target");
  check_psd(noise.robot, "noise.robot");
  check_psd(noise.target, "noise.target");
  check_psd(sensor.noise_cov, "sensor.noise_cov");
  for (const auto& u : target.script) {
    if (u.size() != target.model.input_dim()) fail("target.script", "control has the wrong dimension");
  }
  if (target.script.empty() && !target.generator) fail("target", "needs a script or a generator");
  if (target.generator) {
    if (target.model.kind != TargetKind::Unicycle) fail("target.generator", "only unicycle targets are generated");
    if (!(target.generator->v_max > 0.0)) fail("target.generator.v_max", "must be positive");
    if (target.generator->steps < 1) fail("target.generator.steps", "must be >= 1");
  }
  if (!(target.tracking_gain >= 0.0 && target.tracking_gain <= 1.0)) fail("target.tracking_gain", "must lie in [0, 1]");
  if (!(target.prior_cov > 0.0 && target.prior_mean_var >= 0.0)) fail("target", "prior variances must be positive");
  if (episode.max_steps < 1) fail("episode.max_steps", "must be >= 1");
  if (episode.loss_limit < 1) fail("episode.loss_limit", "must be >= 1");
}

Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  check_keys(root, {"name", "map", "obstacles", "fov", "sensor", "noise", "robot_init", "target", "planner", "scp",
                    "episode"},
             "scenario");
  Scenario s;
  read(root, "name", s.name, "scenario");

  if (root.contains("map")) {
    const json& m = root["map"];
    check_keys(m, {"width", "height"}, "map");
    read(m, "width", s.width, "map");
    read(m, "height", s.height, "map");
  }

  if (root.contains("obstacles")) {
    if (!root["obstacles"].is_array()) fail("obstacles", "expected an array of polygons");
    for (std::size_t i = 0; i < root["obstacles"].size(); ++i) {
      const std::string where = "obstacles[" + std::to_string(i) + "]";
      std::vector<Vec2> verts;
      const json& poly = root["obstacles"][i];
      if (!poly.is_array()) fail(where, "expected an array of [x, y] vertices");
      for (const auto& v : poly) {
        const auto p = numbers(v, where);
        if (p.size() != 2) fail(where, "vertices are [x, y] pairs");
        verts.emplace_back(p[0], p[1]);
      }
      try {
        s.obstacles.push_back(ConvexBody::polygon(std::move(verts)));
      } catch (const GeometryError& e) {
        fail(where, e.what());
      }
    }
  }

  if (root.contains("fov")) {
    const json& f = root["fov"];
    check_keys(f, {"r1", "r2", "psi", "arc_segments"}, "fov");
    read(f, "r1", s.fov.r1, "fov");
    read(f, "r2", s.fov.r2, "fov");
    read(f, "psi", s.fov.psi, "fov");
    read(f, "arc_segments", s.fov.arc_segments, "fov");
  }

  // Target model first: several defaults depend on its dimension.
  json tj = root.contains("target") ? root["target"] : json::object();
  check_keys(tj, {"model", "init", "script", "generator", "tracking_gain", "prior_mean_var", "prior_cov"}, "target");
  {
    std::string model = "linear";
    read(tj, "model", model, "target");
    if (model == "linear") {
      s.target.model.kind = TargetKind::LinearIntegrator;
    } else if (model == "unicycle") {
      s.target.model.kind = TargetKind::Unicycle;
    } else {
      fail("target.model", "expected 'linear' or 'unicycle'");
    }
  }
  const int dt = s.target.model.state_dim();
  s.target.init = SmallVec::Zero(dt);
  if (tj.contains("init")) s.target.init = small_vec(tj["init"], "target.init");
  read(tj, "tracking_gain", s.target.tracking_gain, "target");
  read(tj, "prior_mean_var", s.target.prior_mean_var, "target");
  read(tj, "prior_cov", s.target.prior_cov, "target");

  s.noise.robot = Mat4::Zero();
  s.noise.robot.diagonal() << 4e-3, 4e-3, 0.4e-3, 0.4e-3;
  s.noise.target = 0.01 * SmallMat::Identity(dt, dt);
  if (root.contains("noise")) {
    const json& n = root["noise"];
    check_keys(n, {"robot", "target"}, "noise");
    if (n.contains("robot")) s.noise.robot = square_matrix<Mat4>(n["robot"], 4, "noise.robot");
    if (n.contains("target")) s.noise.target = square_matrix<SmallMat>(n["target"], dt, "noise.target");
  }

  s.sensor.kind = SensorKind::RangeBearing;
  if (root.contains("sensor")) {
    const json& sj = root["sensor"];
    check_keys(sj, {"kind", "noise_cov"}, "sensor");
    std::string kind = "range_bearing";
    read(sj, "kind", kind, "sensor");
    if (kind == "range_bearing") {
      s.sensor.kind = SensorKind::RangeBearing;
    } else if (kind == "camera_pose") {
      s.sensor.kind = SensorKind::CameraPose;
    } else {
      fail("sensor.kind", "expected 'range_bearing' or 'camera_pose'");
    }
    s.sensor.noise_cov = default_sensor_cov(s.sensor.kind);
    if (sj.contains("noise_cov")) {
      s.sensor.noise_cov = square_matrix<SmallMat>(sj["noise_cov"], s.sensor.dim(), "sensor.noise_cov");
    }
  } else {
    s.sensor.noise_cov = default_sensor_cov(s.sensor.kind);
  }

  if (root.contains("robot_init")) {
    const auto v = numbers(root["robot_init"], "robot_init");
    if (v.size() != 4) fail("robot_init", "expected [x, y, heading, speed]");
    s.robot_init = RobotState(v[0], v[1], wrap_angle(v[2]), v[3]);
  }

  if (root.contains("planner")) {
    const json& p = root["planner"];
    check_keys(p, {"horizon", "dt", "limits", "delta_s", "objective", "relax_tf", "relax_lo", "valid_obstacle_radius"},
               "planner");
    read(p, "horizon", s.planner.horizon, "planner");
    read(p, "dt", s.planner.dt, "planner");
    read(p, "delta_s", s.planner.delta_s, "planner");
    read(p, "relax_tf", s.planner.relax_tf, "planner");
    read(p, "relax_lo", s.planner.relax_lo, "planner");
    read(p, "valid_obstacle_radius", s.planner.valid_obstacle_radius, "planner");
    if (p.contains("objective")) {
      std::string o;
      read(p, "objective", o, "planner");
      if (o == "entropy") {
        s.planner.objective = Objective::CumulativeEntropy;
      } else if (o == "bpod") {
        s.planner.objective = Objective::NegCumulativeBpod;
      } else if (o == "fov_distance") {
        s.planner.objective = Objective::FovDistance;
      } else {
        fail("planner.objective", "expected 'entropy', 'bpod' or 'fov_distance'");
      }
    }
    if (p.contains("limits")) {
      const json& l = p["limits"];
      check_keys(l, {"accel", "omega", "speed_min", "speed_max"}, "planner.limits");
      if (l.contains("accel")) {
        const auto a = numbers(l["accel"], "planner.limits.accel");
        if (a.size() != 2) fail("planner.limits.accel", "expected [min, max]");
        s.planner.limits.accel_min = a[0];
        s.planner.limits.accel_max = a[1];
      }
      if (l.contains("omega")) {
        const auto w = numbers(l["omega"], "planner.limits.omega");
        if (w.size() != 2) fail("planner.limits.omega", "expected [min, max]");
        s.planner.limits.omega_min = w[0];
        s.planner.limits.omega_max = w[1];
      }
      read(l, "speed_min", s.planner.limits.speed_min, "planner.limits");
      read(l, "speed_max", s.planner.limits.speed_max, "planner.limits");
    }
  }

  if (root.contains("scp")) {
    const json& c = root["scp"];
    check_keys(c, {"eta0", "d0", "beta", "tau_c", "tau_p", "tau_f", "trust_expand", "trust_shrink", "ratio_accept",
                   "max_outer", "max_inner", "fd_step", "seed_levels"},
               "scp");
    read(c, "eta0", s.scp.eta0, "scp");
    read(c, "d0", s.scp.d0, "scp");
    read(c, "beta", s.scp.beta, "scp");
    read(c, "tau_c", s.scp.tau_c, "scp");
    read(c, "tau_p", s.scp.tau_p, "scp");
    read(c, "tau_f", s.scp.tau_f, "scp");
    read(c, "trust_expand", s.scp.trust_expand, "scp");
    read(c, "trust_shrink", s.scp.trust_shrink, "scp");
    read(c, "ratio_accept", s.scp.ratio_accept, "scp");
    read(c, "max_outer", s.scp.max_outer, "scp");
    read(c, "max_inner", s.scp.max_inner, "scp");
    read(c, "fd_step", s.scp.fd_step, "scp");
    read(c, "seed_levels", s.scp.seed_levels, "scp");
  }

  if (root.contains("episode")) {
    const json& e = root["episode"];
    check_keys(e, {"max_steps", "loss_limit", "seeds"}, "episode");
    read(e, "max_steps", s.episode.max_steps, "episode");
    read(e, "loss_limit", s.episode.loss_limit, "episode");
    read(e, "seeds", s.episode.seeds, "episode");
  }

  if (tj.contains("script")) {
    const json& sc = tj["script"];
    check_keys(sc, {"controls", "waypoints", "speed"}, "target.script");
    if (sc.contains("controls") == sc.contains("waypoints")) {
      fail("target.script", "give exactly one of 'controls' or 'waypoints'");
    }
    if (sc.contains("controls")) {
      if (!sc["controls"].is_array()) fail("target.script.controls", "expected an array");
      for (const auto& u : sc["controls"]) s.target.script.push_back(small_vec(u, "target.script.controls"));
    } else {
      if (s.target.model.kind != TargetKind::LinearIntegrator) {
        fail("target.script.waypoints", "waypoints are only supported for linear targets");
      }
      double speed = 1.0;
      read(sc, "speed", speed, "target.script");
      s.target.script = waypoint_controls(s.target.init, sc["waypoints"], speed, s.planner.dt, "target.script");
    }
  }
  if (tj.contains("generator")) {
    const json& g = tj["generator"];
    check_keys(g, {"v_max", "steps", "seed", "clearance", "margin", "omega_max"}, "target.generator");
    TrajectoryGenerator gen;
    read(g, "v_max", gen.v_max, "target.generator");
    read(g, "steps", gen.steps, "target.generator");
    read(g, "seed", gen.seed, "target.generator");
    read(g, "clearance", gen.clearance, "target.generator");
    read(g, "margin", gen.margin, "target.generator");
    read(g, "omega_max", gen.omega_max, "target.generator");
    s.target.generator = gen;
  }

  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["map"] = {{"width", s.width}, {"height", s.height}};
  j["obstacles"] = json::array();
  for (const auto& o : s.obstacles) {
    json poly = json::array();
    for (const Vec2& v : o.vertices()) poly.push_back({v.x(), v.y()});
    j["obstacles"].push_back(poly);
  }
  j["fov"] = {{"r1", s.fov.r1}, {"r2", s.fov.r2}, {"psi", s.fov.psi}, {"arc_segments", s.fov.arc_segments}};
  j["sensor"] = {{"kind", s.sensor.kind == SensorKind::RangeBearing ? "range_bearing" : "camera_pose"},
                 {"noise_cov", matrix_json(s.sensor.noise_cov)}};
  j["noise"] = {{"robot", matrix_json(s.noise.robot)}, {"target", matrix_json(s.noise.target)}};
  j["robot_init"] = {s.robot_init.position.x(), s.robot_init.position.y(), s.robot_init.heading, s.robot_init.speed};

  json t;
  t["model"] = s.target.model.kind == TargetKind::LinearIntegrator ? "linear" : "unicycle";
  t["init"] = vec_json(s.target.init);
  if (!s.target.script.empty()) {
    json c = json::array();
    for (const auto& u : s.target.script) c.push_back(vec_json(u));
    t["script"] = {{"controls", c}};
  }
  if (s.target.generator) {
    const auto& g = *s.target.generator;
    t["generator"] = {{"v_max", g.v_max},         {"steps", g.steps},   {"seed", g.seed},
                      {"clearance", g.clearance}, {"margin", g.margin}, {"omega_max", g.omega_max}};
  }
  t["tracking_gain"] = s.target.tracking_gain;
  t["prior_mean_var"] = s.target.prior_mean_var;
  t["prior_cov"] = s.target.prior_cov;
  j["target"] = t;

  const auto& p = s.planner;
  j["planner"] = {{"horizon", p.horizon},
                  {"dt", p.dt},
                  {"limits",
                   {{"accel", {p.limits.accel_min, p.limits.accel_max}},
                    {"omega", {p.limits.omega_min, p.limits.omega_max}},
                    {"speed_min", p.limits.speed_min},
                    {"speed_max", p.limits.speed_max}}},
                  {"delta_s", p.delta_s},
                  {"objective", p.objective == Objective::CumulativeEntropy   ? "entropy"
                                : p.objective == Objective::NegCumulativeBpod ? "bpod"
                                                                              : "fov_distance"},
                  {"relax_tf", p.relax_tf},
                  {"relax_lo", p.relax_lo},
                  {"valid_obstacle_radius", p.valid_obstacle_radius}};
  const auto& c = s.scp;
  j["scp"] = {{"eta0", c.eta0},
              {"d0", c.d0},
              {"beta", c.beta},
              {"tau_c", c.tau_c},
              {"tau_p", c.tau_p},
              {"tau_f", c.tau_f},
              {"trust_expand", c.trust_expand},
              {"trust_shrink", c.trust_shrink},
              {"ratio_accept", c.ratio_accept},
              {"max_outer", c.max_outer},
              {"max_inner", c.max_inner},
              {"fd_step", c.fd_step}, {"seed_levels", c.seed_levels}};
  j["episode"] = {{"max_steps", s.episode.max_steps}, {"loss_limit", s.episode.loss_limit}, {"seeds", s.episode.seeds}};
  return j.dump(2);
}

}  // namespace vistrack
