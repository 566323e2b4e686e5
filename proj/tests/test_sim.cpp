#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

#include "vistrack/errors.hpp"
#include "vistrack/report.hpp"
#include "vistrack/sim.hpp"

using namespace vistrack;
using nlohmann::json;
using std::numbers::pi;

namespace {

SmallVec vec(std::initializer_list<double> v) {
  SmallVec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Open map, stationary linear target six meters ahead of the robot. The
// planner block matches the bundled scenarios: with the library defaults
// (relax_tf 0.3, no reversing) the entropy objective walks the robot into the
// r1 dead zone of a stationary target.
json base_scenario(int steps) {
  json controls = json::array();
  for (int i = 0; i < steps; ++i) controls.push_back({0.0, 0.0});
  return json{
      {"name", "unit"},
      {"map", {{"width", 60}, {"height", 50}}},
      {"obstacles", json::array()},
      {"sensor", {{"kind", "range_bearing"}, {"noise_cov", {0.3, 0, 0, 0.05}}}},
      {"noise",
       {{"robot", {0.004, 0, 0, 0, 0, 0.004, 0, 0, 0, 0, 0.0004, 0, 0, 0, 0, 0.0004}}, {"target", {0, 0, 0, 0}}}},
      {"robot_init", {20, 25, 0, 0}},
      {"target", {{"model", "linear"}, {"init", {26, 25}}, {"script", {{"controls", controls}}}}},
      {"planner", {{"relax_tf", -0.5}, {"limits", {{"speed_min", -4.0}}}}},
      {"episode", {{"max_steps", steps}, {"loss_limit", 15}, {"seeds", {0}}}},
  };
}

Scenario case2() { return load_scenario(std::string(VISTRACK_SCENARIO_DIR) + "/case2.json"); }

std::string step_csv(const EpisodeLog& log) {
  std::ostringstream os;
  write_step_csv(os, log);
  return os.str();
}

}  // namespace

TEST_SUITE("sim") {
  TEST_CASE("stationary visible target") {
    const Scenario s = parse_scenario(base_scenario(50).dump());
    const EpisodeLog log = run_episode(s, 3);
    const Metrics m = compute_metrics(log);
    CHECK(log.outcome == Outcome::Success);
    CHECK(m.steps == 50);
    CHECK(m.r_vis == 1.0);
    const double floor = 3.0 * std::sqrt(s.sensor.noise_cov(0, 0) + 36.0 * s.sensor.noise_cov(1, 1));
    CHECK(m.e_est < floor);
  }

  TEST_CASE("target leaving the map is lost after the loss limit") {
    json j = base_scenario(60);
    j["target"]["script"]["controls"][10] = {200.0, 0.0};
    j["target"]["tracking_gain"] = 0.0;
    const Scenario s = parse_scenario(j.dump());
    const EpisodeLog log = run_episode(s, 1);
    CHECK(log.outcome == Outcome::Lost);
    REQUIRE(log.steps.size() == 25u);
    for (int k = 0; k < 10; ++k) CHECK(log.steps[k].mu);
    for (int k = 10; k < 25; ++k) CHECK_FALSE(log.steps[k].mu);
  }

  TEST_CASE("collision ends the episode at that step") {
    json j = base_scenario(20);
    j["robot_init"] = {20, 25, 0, 4};
    j["obstacles"] = {{{21, 24}, {23, 24}, {23, 26}, {21, 26}}};
    j["target"]["init"] = {20, 32};
    const Scenario s = parse_scenario(j.dump());
    const EpisodeLog log = run_episode(s, 0);
    CHECK(log.outcome == Outcome::Collision);
    CHECK(log.steps.size() == 1u);
    CHECK(compute_metrics(log).outcome == Outcome::Collision);
  }

  TEST_CASE("episodes are deterministic") {
    const Scenario s = parse_scenario(base_scenario(30).dump());
    EpisodeOptions opts;
    opts.record_timing = false;
    CHECK(step_csv(run_episode(s, 7, opts)) == step_csv(run_episode(s, 7, opts)));
    CHECK(step_csv(run_episode(s, 7, opts)) != step_csv(run_episode(s, 8, opts)));
  }

  TEST_CASE("batch output does not depend on the thread count") {
    Scenario s = parse_scenario(base_scenario(20).dump());
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    EpisodeOptions opts;
    opts.record_timing = false;
    const BatchResult a = run_batch(s, seeds, 1, opts);
    const BatchResult b = run_batch(s, seeds, 3, opts);
    CHECK(summary_json(s.name, seeds, a.metrics, a.logs) == summary_json(s.name, seeds, b.metrics, b.logs));
    for (std::size_t i = 0; i < seeds.size(); ++i) CHECK(step_csv(a.logs[i]) == step_csv(b.logs[i]));
  }

  TEST_CASE("target control from consecutive estimates") {
    SmallVec u = estimate_target_control(vec({0, 0, 0}), vec({0.5, 0, 0.1}), 0.5);
    CHECK(std::abs(u[0] - 1.0) <= 1e-12);
    CHECK(std::abs(u[1] - 0.2) <= 1e-12);
    u = estimate_target_control(vec({3, 4, 1}), vec({3, 4, 1}), 0.5);
    CHECK(u.norm() == 0.0);
    u = estimate_target_control(vec({0, 0, 3.1}), vec({0, 0, -3.1}), 0.5);
    CHECK(std::abs(u[1] - (2 * pi - 6.2) / 0.5) <= 1e-12);
    CHECK(std::abs(u[1] - 0.166) <= 1e-3);
  }

  TEST_CASE("generated trajectories respect speed and clearance") {
    const Scenario s = case2();
    const TargetModel uni{TargetKind::Unicycle};
    TrajectoryGenerator gen;
    gen.v_max = 2.0;
    gen.steps = 400;
    for (std::uint64_t seed : {0u, 1u, 2u}) {
      gen.seed = seed;
      const auto script = generate_target_trajectory(s.width, s.height, s.obstacles, s.target.init, gen, 0.5);
      REQUIRE(script.size() == 400u);
      SmallVec z = s.target.init;
      for (const auto& u : script) {
        CHECK(u[0] <= 2.0 + 1e-12);
        CHECK(u[0] >= -1e-12);
        z = target_step(uni, z, u, 0.5);
        CHECK(min_obstacle_distance(target_position(z), s.obstacles) >= 0.5 - 1e-9);
        CHECK(z[0] >= 0.0);
        CHECK(z[0] <= s.width);
        CHECK(z[1] >= 0.0);
        CHECK(z[1] <= s.height);
      }
      CHECK(script == generate_target_trajectory(s.width, s.height, s.obstacles, s.target.init, gen, 0.5));
    }
  }

  TEST_CASE("a very slow generator barely moves") {
    const Scenario s = case2();
    TrajectoryGenerator gen;
    gen.v_max = 0.001;
    gen.steps = 400;
    const auto script = generate_target_trajectory(s.width, s.height, s.obstacles, s.target.init, gen, 0.5);
    SmallVec z = s.target.init;
    double far = 0.0;
    for (const auto& u : script) {
      z = target_step(TargetModel{TargetKind::Unicycle}, z, u, 0.5);
      far = std::max(far, (target_position(z) - target_position(s.target.init)).norm());
    }
    CHECK(far <= 0.2 + 1e-9);
  }

  TEST_CASE("metric definitions") {
    EpisodeLog log;
    for (int k = 0; k < 100; ++k) {
      StepRecord r;
      r.step = k + 1;
      r.est_error = 0.3;
      r.mu = k >= 4;
      r.solve_ms = 2.0;
      r.d_min = 10.0 - 0.01 * k;
      log.steps.push_back(r);
    }
    const Metrics m = compute_metrics(log);
    CHECK(std::abs(m.e_est - 0.3) <= 1e-12);
    CHECK(std::abs(m.r_vis - 0.96) <= 1e-12);
    CHECK(std::abs(m.t_cal - 0.002) <= 1e-12);
    CHECK(std::abs(m.d_min - 9.01) <= 1e-12);

    const Aggregate a = aggregate({1.0, 2.0, 3.0});
    CHECK(a.mean == 2.0);
    CHECK(a.std > 0.0);
  }

  TEST_CASE("logged gammas match a recomputation from logged beliefs") {
    Scenario s = load_scenario(std::string(VISTRACK_SCENARIO_DIR) + "/case1.json");
    s.episode.max_steps = 40;
    EpisodeOptions opts;
    opts.record_timing = false;
    const EpisodeLog log = run_episode(s, 4, opts);
    REQUIRE(log.steps.size() > 10u);
    std::stringstream csv;
    write_beliefs_csv(csv, log);
    const auto rows = read_beliefs_csv(csv);
    REQUIRE(rows.size() == log.steps.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& rec = log.steps[k];
      std::vector<ConvexBody> valid;
      for (int j : rec.valid) valid.push_back(s.obstacles[static_cast<std::size_t>(j)]);
      const double g = bpod_for(rec.plan_robot, rec.plan_target, valid, s.fov, s.planner.relax_tf, s.planner.relax_lo);
      CHECK(std::abs(g - rec.gamma) <= 1e-12);
      // The CSV round trip keeps full precision.
      const double g2 =
          bpod_for(rows[k].robot, rows[k].target, valid, s.fov, s.planner.relax_tf, s.planner.relax_lo);
      CHECK(g2 == g);
      CHECK(rows[k].valid == rec.valid);
      CHECK(rows[k].gamma == rec.gamma);
    }
  }

  TEST_CASE("scenario documents") {
    const Scenario s = load_scenario(std::string(VISTRACK_SCENARIO_DIR) + "/case1.json");
    const std::string text = scenario_to_json(s);
    CHECK(scenario_to_json(parse_scenario(text)) == text);

    json j = base_scenario(5);
    j["unexpected"] = 1;
    CHECK_THROWS_AS(parse_scenario(j.dump()), ConfigError);
    j = base_scenario(5);
    j["planner"] = {{"horizon", 4}, {"typo", 1}};
    CHECK_THROWS_AS(parse_scenario(j.dump()), ConfigError);
    j = base_scenario(5);
    j["robot_init"] = {20, 25, 0, 0};
    j["obstacles"] = {{{19, 24}, {21, 24}, {21, 26}, {19, 26}}};
    CHECK_THROWS_AS(parse_scenario(j.dump()), ConfigError);
    CHECK_THROWS_AS(parse_scenario("{not json"), ConfigError);
  }

  TEST_CASE("double formatting round trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678, 0.0}) CHECK(std::stod(format_double(x)) == x);
  }
}
