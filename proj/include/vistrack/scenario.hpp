#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vistrack/planner.hpp"

namespace vistrack {

/// Random smooth unicycle reference trajectory parameters.
struct TrajectoryGenerator {
  double v_max = 1.0;
  int steps = 400;
  std::uint64_t seed = 0;
  double clearance = 0.5;   // from every obstacle, meters
  double margin = 2.0;      // from the map border, meters
  double omega_max = 0.8;   // rad/s
};

struct TargetSpec {
  TargetModel model;
  SmallVec init;
  /// Reference controls, one per step. Empty with a generator present.
  std::vector<SmallVec> script;
  std::optional<TrajectoryGenerator> generator;
  /// Fraction of the reference-tracking error removed per step by the true
  /// target; 0 replays the script open loop.
  double tracking_gain = 0.5;
  /// Initial estimate: mean = truth + N(0, prior_mean_var I), cov = prior_cov I.
  double prior_mean_var = 4.0;
  double prior_cov = 25.0;
};

struct EpisodeSpec {
  int max_steps = 400;
  int loss_limit = 15;
  std::vector<std::uint64_t> seeds{0};
};

struct Scenario {
  std::string name = "scenario";
  double width = 60.0;
  double height = 50.0;
  std::vector<ConvexBody> obstacles;
  FovParams fov;
  NoiseCovs noise;
  SensorModel sensor;
  RobotState robot_init;
  TargetSpec target;
  PlannerConfig planner;
  ScpParams scp;
  EpisodeSpec episode;

  /// Throws ConfigError on any invariant violation.
  void validate() const;
};

/// JSON scenario document. Unknown keys are rejected; omitted keys keep defaults.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
std::string scenario_to_json(const Scenario& s);

}  // namespace vistrack
