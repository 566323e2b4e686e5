#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vistrack/scenario.hpp"

namespace vistrack {

enum class Outcome { Success, Collision, Lost, SolverFailure };
std::string to_string(Outcome o);

struct StepRecord {
  int step = 0;
  RobotState robot_true;
  SmallVec target_true;
  bool mu = false;
  TargetBelief estimate;  // posterior after this step's measurement
  double est_error = 0.0;
  // Planner view of the first horizon step.
  RobotBelief plan_robot;
  TargetBelief plan_target;  // predicted, before the visibility-weighted update
  std::vector<int> valid;
  double gamma = 0.0;
  double gamma_tf = 0.0;
  double min_gamma_lo = 1.0;
  double max_gamma_ro = 0.0;
  double solve_ms = 0.0;
  double d_min = 0.0;  // signed distance from the true robot to the nearest obstacle
  int scp_outer = 0;
  int scp_inner = 0;
};

struct EpisodeLog {
  std::uint64_t seed = 0;
  int target_dim = 2;
  std::vector<StepRecord> steps;
  Outcome outcome = Outcome::Success;
  std::string message;
};

struct Metrics {
  double t_cal = 0.0;  // s/step
  double e_est = 0.0;  // m
  double r_vis = 0.0;
  double d_min = 0.0;  // m
  int steps = 0;
  Outcome outcome = Outcome::Success;
};

struct EpisodeOptions {
  bool record_timing = true;
  /// Called after every successful plan with the step number, the planner
  /// inputs and its result.
  std::function<void(int, const RobotBelief&, const TargetBelief&, const PlanningContext&, const ScpResult&)> on_plan;
};

/// Reference controls for the episode: the explicit script, or a generated
/// trajectory seeded from (generator seed, episode seed).
std::vector<SmallVec> reference_controls(const Scenario& s, std::uint64_t episode_seed);

/// Random smooth unicycle controls (speed, turn rate) whose noiseless rollout
/// from `init` stays inside the map margin and `clearance` away from obstacles.
/// Throws std::runtime_error if resampling keeps failing.
std::vector<SmallVec> generate_target_trajectory(double width, double height, std::span<const ConvexBody> obstacles,
                                                 const SmallVec& init, const TrajectoryGenerator& gen, double dt);

/// Speed and turn rate from two consecutive unicycle estimates.
SmallVec estimate_target_control(const SmallVec& prev_est, const SmallVec& curr_est, double dt);

EpisodeLog run_episode(const Scenario& s, std::uint64_t seed, const EpisodeOptions& opts = {});
Metrics compute_metrics(const EpisodeLog& log);

struct BatchResult {
  std::vector<EpisodeLog> logs;
  std::vector<Metrics> metrics;
};

/// Episodes run concurrently on `threads` workers; results are ordered by seed
/// position and independent of scheduling.
BatchResult run_batch(const Scenario& s, const std::vector<std::uint64_t>& seeds, int threads,
                      const EpisodeOptions& opts = {});

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;
};
Aggregate aggregate(const std::vector<double>& xs);

/// Signed distance from a point to the nearest obstacle (+inf without obstacles).
double min_obstacle_distance(const Vec2& p, std::span<const ConvexBody> obstacles);

}  // namespace vistrack
