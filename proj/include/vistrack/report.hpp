#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vistrack/sim.hpp"

namespace vistrack {

/// One row per step: true states, estimate, mu, gammas, timing, clearance.
void write_step_csv(std::ostream& out, const EpisodeLog& log);

/// Planner beliefs at the first horizon step, full precision, for offline
/// BPOD checks.
void write_beliefs_csv(std::ostream& out, const EpisodeLog& log);

struct LoggedBelief {
  int step = 0;
  RobotBelief robot;
  TargetBelief target;
  std::vector<int> valid;
  double gamma_tf = 0.0;
  double gamma = 0.0;
};

/// Throws ConfigError on malformed input.
std::vector<LoggedBelief> read_beliefs_csv(std::istream& in);

/// Per-seed metrics plus mean/std aggregates and the success rate.
std::string summary_json(const std::string& scenario_name, const std::vector<std::uint64_t>& seeds,
                         const std::vector<Metrics>& metrics, const std::vector<EpisodeLog>& logs);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

}  // namespace vistrack
