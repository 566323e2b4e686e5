#pragma once

#include <Eigen/Core>

#include <span>
#include <utility>
#include <vector>

#include "vistrack/belief.hpp"
#include "vistrack/geom2d.hpp"

namespace vistrack {

/// Robot state (x, y, heading, speed) stacked on the target state.
using StackedVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 7, 1>;
using StackedMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 7, 7>;

/// Joint Gaussian over [z^r; z^t]. The two blocks are independent: the
/// robot and target beliefs are propagated separately and no cross term exists.
struct StackedGaussian {
  Vec4 robot_mean = Vec4::Zero();
  Mat4 robot_cov = Mat4::Zero();
  SmallVec target_mean;
  SmallMat target_cov;

  static StackedGaussian from(const RobotBelief& rb, const TargetBelief& tb);
  int dim() const { return 4 + static_cast<int>(target_mean.size()); }
  StackedVec mean() const;
  StackedMat cov() const;
  /// a^T Sigma a using the block structure.
  double quadratic(const StackedVec& a) const;
};

/// How a body's local frame depends on the stacked state.
enum class Frame { Static, RobotPose, RobotPosition, TargetPosition };

/// Frozen contact data: witness points in body-local coordinates (or the
/// separative ratio for a line of sight) plus the world-frame contact normal.
struct SdfParams {
  enum class Kind { BodyPair, LosPair };
  Kind kind = Kind::BodyPair;
  Frame frame1 = Frame::Static;
  Frame frame2 = Frame::Static;
  Vec2 local1 = Vec2::Zero();  // BodyPair only
  double lambda = 0.0;         // LosPair only: p1 = lambda * x^r + (1 - lambda) * x^t
  Vec2 local2 = Vec2::Zero();
  Vec2 normal = Vec2::UnitX();
};

struct AttachedBody {
  ConvexBody world;  // posed at the Gaussian mean
  Frame frame = Frame::Static;
};

enum class Sense { Leq, Geq };

/// Pr(a^T x <= b) for x ~ N(mean, cov); the standard-deviation denominator is
/// floored at 1e-9 so deterministic inputs give a step function.
double linear_gaussian_prob(const Eigen::Ref<const Eigen::VectorXd>& a, double b,
                            const Eigen::Ref<const Eigen::VectorXd>& mean,
                            const Eigen::Ref<const Eigen::MatrixXd>& cov);

/// Frame origin/rotation at the stacked mean.
Pose2 frame_pose(Frame f, const StackedGaussian& g);

std::pair<SdfParams, SdfResult> compute_sdf_params(const AttachedBody& a, const AttachedBody& b,
                                                   const StackedGaussian& at);
/// Line of sight x^r -> x^t against `b`. Throws GeometryError when the
/// robot and target means coincide.
std::pair<SdfParams, SdfResult> compute_los_params(const AttachedBody& b, const StackedGaussian& at);

/// Linearized SDF at the mean: value and gradient w.r.t. the stacked state.
struct LinearizedSdf {
  double value = 0.0;
  StackedVec gradient;
};
LinearizedSdf linearize_sdf(const SdfParams& params, const StackedGaussian& g);

/// Probability that the linearized SDF is <= (Leq) or >= (Geq) `threshold`.
double possdf_prob(const SdfParams& params, const StackedGaussian& g, Sense sense, double threshold);

// Specializations ------------------------------------------------------------

/// Convexified FOV in the sensor frame, built once per FovParams.
ConvexBody fov_local_polygon(const FovParams& fov);

SdfParams tf_params(const StackedGaussian& g, const ConvexBody& fov_local);
SdfParams lo_params(const StackedGaussian& g, const ConvexBody& obstacle);
SdfParams ro_params(const StackedGaussian& g, const ConvexBody& obstacle);

inline double tf_prob(const SdfParams& p, const StackedGaussian& g, double relax) {
  return possdf_prob(p, g, Sense::Leq, relax);
}
inline double lo_prob(const SdfParams& p, const StackedGaussian& g, double relax) {
  return possdf_prob(p, g, Sense::Geq, -relax);
}
inline double ro_prob(const SdfParams& p, const StackedGaussian& g) { return possdf_prob(p, g, Sense::Leq, 0.0); }

/// Target inside the (convexified) FOV.
double gamma_tf(const RobotBelief& rb, const TargetBelief& tb, const FovParams& fov, double relax);
/// Line of sight clear of `obstacle`.
double gamma_lo(const RobotBelief& rb, const TargetBelief& tb, const ConvexBody& obstacle, double relax);
/// Robot inside `obstacle`. Overestimates the true collision probability
/// since the obstacle is replaced by the half-plane through the witness point.
double gamma_ro(const RobotBelief& rb, const ConvexBody& obstacle);

/// gamma_tf * prod(gamma_lo)
double bpod(double gamma_tf, std::span<const double> gamma_lo);

/// BPOD over all obstacles with the given relaxations.
double bpod_for(const RobotBelief& rb, const TargetBelief& tb, std::span<const ConvexBody> obstacles,
                const FovParams& fov, double relax_tf, double relax_lo);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo detection probability against the true annular sector.
/// Sample i draws from its own stream keyed by (seed, i).
McEstimate mc_bpod_oracle(const RobotBelief& rb, const TargetBelief& tb, std::span<const ConvexBody> obstacles,
                          const FovParams& fov, int n_samples, std::uint64_t seed);

/// Monte-Carlo Pr(robot position inside the obstacle interior).
McEstimate mc_collision_oracle(const RobotBelief& rb, const ConvexBody& obstacle, int n_samples, std::uint64_t seed);

}  // namespace vistrack
