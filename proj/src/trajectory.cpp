#include <cmath>
#include <limits>
#include <stdexcept>

#include "vistrack/rng.hpp"
#include "vistrack/sim.hpp"

namespace vistrack {

namespace {

constexpr int kSegmentMin = 4;
constexpr int kSegmentMax = 16;
constexpr int kAttemptsPerSegment = 50;
constexpr int kTotalAttempts = 20000;

bool admissible(const SmallVec& z, double width, double height, std::span<const ConvexBody> obstacles,
                const TrajectoryGenerator& gen) {
  const Vec2 p = target_position(z);
  if (p.x() < gen.margin || p.y() < gen.margin || p.x() > width - gen.margin || p.y() > height - gen.margin) {
    return false;
  }
  return min_obstacle_distance(p, obstacles) >= gen.clearance;
}

}  // namespace

double min_obstacle_distance(const Vec2& p, std::span<const ConvexBody> obstacles) {
  double d = std::numeric_limits<double>::infinity();
  const ConvexBody pt = ConvexBody::point(p);
  for (const auto& o : obstacles) d = std::min(d, signed_distance(pt, o).signed_distance);
  return d;
}

std::vector<SmallVec> generate_target_trajectory(double width, double height, std::span<const ConvexBody> obstacles,
                                                 const SmallVec& init, const TrajectoryGenerator& gen, double dt) {
  if (!(gen.v_max > 0.0)) throw std::invalid_argument("generate_target_trajectory: v_max must be positive");
  if (gen.steps < 1) throw std::invalid_argument("generate_target_trajectory: steps must be >= 1");
  if (init.size() != 3) throw std::invalid_argument("generate_target_trajectory: needs a unicycle initial state");

  const TargetModel model{TargetKind::Unicycle};
  CounterRng rng = make_stream(gen.seed, Stream::Trajectory);

  // Accepted segments, each with the state reached at its end.
  struct Segment {
    SmallVec u;
    int length;
    SmallVec end;
  };
  std::vector<Segment> segments;
  int total = 0;
  int attempts = 0;
  int failures = 0;
  while (total < gen.steps) {
    if (++attempts > kTotalAttempts) {
      throw std::runtime_error("generate_target_trajectory: no admissible trajectory after bounded resampling");
    }
    const SmallVec start = segments.empty() ? init : segments.back().end;
    const int length = std::min(gen.steps - total,
                                kSegmentMin + static_cast<int>(rng.next_u64() % (kSegmentMax - kSegmentMin + 1)));
    SmallVec u(2);
    u << rng.uniform(0.5, 1.0) * gen.v_max, rng.uniform(-gen.omega_max, gen.omega_max);

    SmallVec z = start;
    bool ok = true;
    for (int i = 0; i < length && ok; ++i) {
      z = target_step(model, z, u, dt);
      ok = admissible(z, width, height, obstacles, gen);
    }
    if (ok) {
      segments.push_back({u, length, z});
      total += length;
      failures = 0;
      continue;
    }
    if (++failures >= kAttemptsPerSegment && !segments.empty()) {
      total -= segments.back().length;
      segments.pop_back();
      failures = 0;
    }
  }

  std::vector<SmallVec> controls;
  controls.reserve(static_cast<std::size_t>(gen.steps));
  for (const auto& s : segments) controls.insert(controls.end(), static_cast<std::size_t>(s.length), s.u);
  return controls;
}

std::vector<SmallVec> reference_controls(const Scenario& s, std::uint64_t episode_seed) {
  if (!s.target.script.empty() || !s.target.generator) return s.target.script;
  TrajectoryGenerator gen = *s.target.generator;
  gen.seed = derive_key(gen.seed, static_cast<std::uint64_t>(Stream::Trajectory), episode_seed);
  return generate_target_trajectory(s.width, s.height, s.obstacles, s.target.init, gen, s.planner.dt);
}

SmallVec estimate_target_control(const SmallVec& prev_est, const SmallVec& curr_est, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("estimate_target_control: dt must be positive");
  SmallVec u(2);
  u << (target_position(curr_est) - target_position(prev_est)).norm() / dt,
      wrap_angle(curr_est[2] - prev_est[2]) / dt;
  return u;
}

}  // namespace vistrack
