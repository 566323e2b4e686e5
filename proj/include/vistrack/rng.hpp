#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace vistrack {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Key for an independent stream, e.g. (episode seed, stream id, sample index).
constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return mix64(mix64(mix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL)) ^ (index * 0x8cb92ba72f3d8dd7ULL));
}

/// Counter-based generator: the n-th draw is a pure function of (key, n), so
/// streams never interact regardless of evaluation order or threading.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform in (0, 1].
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * (uniform() - 0x1.0p-53); }

  /// Standard normal via Box-Muller, one draw per pair of uniforms.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream ids used by an episode.
enum class Stream : std::uint64_t {
  RobotNoise = 1,
  TargetNoise = 2,
  SensorNoise = 3,
  TargetPrior = 4,
  Trajectory = 5,
  MonteCarlo = 6,
};

inline CounterRng make_stream(std::uint64_t seed, Stream s, std::uint64_t index = 0) {
  return CounterRng(derive_key(seed, static_cast<std::uint64_t>(s), index));
}

}  // namespace vistrack
