#include "vistrack/possdf.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "vistrack/rng.hpp"

namespace vistrack {

StackedGaussian StackedGaussian::from(const RobotBelief& rb, const TargetBelief& tb) {
  return {rb.mean.vec(), rb.cov, tb.mean, tb.cov};
}

StackedVec StackedGaussian::mean() const {
  StackedVec m(dim());
  m << robot_mean, target_mean;
  return m;
}

StackedMat StackedGaussian::cov() const {
  StackedMat c = StackedMat::Zero(dim(), dim());
  c.topLeftCorner<4, 4>() = robot_cov;
  c.bottomRightCorner(target_mean.size(), target_mean.size()) = target_cov;
  return c;
}

double StackedGaussian::quadratic(const StackedVec& a) const {
  const Vec4 ar = a.head<4>();
  const SmallVec at = a.tail(target_mean.size());
  return ar.dot(robot_cov * ar) + at.dot(target_cov * at);
}

namespace {

constexpr double kStdFloor = 1e-9;

double half_erfc(double z) { return 0.5 * std::erfc(z); }

}  // namespace

double linear_gaussian_prob(const Eigen::Ref<const Eigen::VectorXd>& a, double b,
                            const Eigen::Ref<const Eigen::VectorXd>& mean,
                            const Eigen::Ref<const Eigen::MatrixXd>& cov) {
  const double var = std::max(a.dot(cov * a), 0.0);
  const double denom = std::max(std::sqrt(2.0 * var), kStdFloor);
  return half_erfc((a.dot(mean) - b) / denom);
}

Pose2 frame_pose(Frame f, const StackedGaussian& g) {
  switch (f) {
    case Frame::Static:
      return {};
    case Frame::RobotPose:
      return {g.robot_mean[0], g.robot_mean[1], g.robot_mean[2]};
    case Frame::RobotPosition:
      return {g.robot_mean[0], g.robot_mean[1], 0.0};
    case Frame::TargetPosition:
      return {g.target_mean[0], g.target_mean[1], 0.0};
  }
  return {};
}

std::pair<SdfParams, SdfResult> compute_sdf_params(const AttachedBody& a, const AttachedBody& b,
                                                   const StackedGaussian& at) {
  const SdfResult r = signed_distance(a.world, b.world);
  SdfParams p;
  p.kind = SdfParams::Kind::BodyPair;
  p.frame1 = a.frame;
  p.frame2 = b.frame;
  p.local1 = frame_pose(a.frame, at).to_local(r.p1);
  p.local2 = frame_pose(b.frame, at).to_local(r.p2);
  p.normal = r.normal;
  return {p, r};
}

std::pair<SdfParams, SdfResult> compute_los_params(const AttachedBody& b, const StackedGaussian& at) {
  const Vec2 xr = at.robot_mean.head<2>();
  const Vec2 xt = target_position(at.target_mean);
  const double len = (xr - xt).norm();
  if (len == 0.0) throw GeometryError("line of sight has zero length");
  const SdfResult r = signed_distance(ConvexBody::segment(xt, xr), b.world);
  SdfParams p;
  p.kind = SdfParams::Kind::LosPair;
  p.frame1 = Frame::Static;
  p.frame2 = b.frame;
  p.lambda = std::clamp((r.p1 - xt).norm() / len, 0.0, 1.0);
  p.local2 = frame_pose(b.frame, at).to_local(r.p2);
  p.normal = r.normal;
  return {p, r};
}

namespace {

// World point of `local` in frame f at the mean; adds sign * J^T n to grad.
Vec2 attach(Frame f, const Vec2& local, const StackedGaussian& g, const Vec2& n, double sign, StackedVec& grad) {
  switch (f) {
    case Frame::Static:
      return local;
    case Frame::RobotPose: {
      const Vec2 rotated = rotation(g.robot_mean[2]) * local;
      grad.head<2>() += sign * n;
      grad[2] += sign * n.dot(perp(rotated));
      return rotated + g.robot_mean.head<2>();
    }
    case Frame::RobotPosition:
      grad.head<2>() += sign * n;
      return local + g.robot_mean.head<2>();
    case Frame::TargetPosition:
      grad.segment<2>(4) += sign * n;
      return local + target_position(g.target_mean);
  }
  return local;
}

}  // namespace

LinearizedSdf linearize_sdf(const SdfParams& params, const StackedGaussian& g) {
  LinearizedSdf out;
  out.gradient = StackedVec::Zero(g.dim());
  const Vec2& n = params.normal;
  Vec2 p1;
  if (params.kind == SdfParams::Kind::LosPair) {
    const double l = params.lambda;
    p1 = l * g.robot_mean.head<2>() + (1.0 - l) * target_position(g.target_mean);
    out.gradient.head<2>() += l * n;
    out.gradient.segment<2>(4) += (1.0 - l) * n;
  } else {
    p1 = attach(params.frame1, params.local1, g, n, 1.0, out.gradient);
  }
  const Vec2 p2 = attach(params.frame2, params.local2, g, n, -1.0, out.gradient);
  out.value = n.dot(p1 - p2);
  return out;
}

double possdf_prob(const SdfParams& params, const StackedGaussian& g, Sense sense, double threshold) {
  const LinearizedSdf l = linearize_sdf(params, g);
  const double var = std::max(g.quadratic(l.gradient), 0.0);
  const double denom = std::max(std::sqrt(2.0 * var), kStdFloor);
  const double z = (l.value - threshold) / denom;
  return sense == Sense::Leq ? half_erfc(z) : half_erfc(-z);
}

ConvexBody fov_local_polygon(const FovParams& fov) { return ConvexBody::polygon(fov_local_vertices(fov)); }

SdfParams tf_params(const StackedGaussian& g, const ConvexBody& fov_local) {
  const AttachedBody target{ConvexBody::point(target_position(g.target_mean)), Frame::TargetPosition};
  const AttachedBody fov{fov_local.transformed(frame_pose(Frame::RobotPose, g)), Frame::RobotPose};
  return compute_sdf_params(target, fov, g).first;
}

SdfParams lo_params(const StackedGaussian& g, const ConvexBody& obstacle) {
  return compute_los_params({obstacle, Frame::Static}, g).first;
}

SdfParams ro_params(const StackedGaussian& g, const ConvexBody& obstacle) {
  const AttachedBody robot{ConvexBody::point(g.robot_mean.head<2>()), Frame::RobotPosition};
  return compute_sdf_params(robot, {obstacle, Frame::Static}, g).first;
}

double gamma_tf(const RobotBelief& rb, const TargetBelief& tb, const FovParams& fov, double relax) {
  const auto g = StackedGaussian::from(rb, tb);
  return tf_prob(tf_params(g, fov_local_polygon(fov)), g, relax);
}

double gamma_lo(const RobotBelief& rb, const TargetBelief& tb, const ConvexBody& obstacle, double relax) {
  const auto g = StackedGaussian::from(rb, tb);
  return lo_prob(lo_params(g, obstacle), g, relax);
}

double gamma_ro(const RobotBelief& rb, const ConvexBody& obstacle) {
  StackedGaussian g{rb.mean.vec(), rb.cov, SmallVec::Zero(2), SmallMat::Zero(2, 2)};
  return ro_prob(ro_params(g, obstacle), g);
}

double bpod(double gamma_tf, std::span<const double> gamma_lo) {
  double p = gamma_tf;
  for (double g : gamma_lo) p *= g;
  return p;
}

double bpod_for(const RobotBelief& rb, const TargetBelief& tb, std::span<const ConvexBody> obstacles,
                const FovParams& fov, double relax_tf, double relax_lo) {
  const auto g = StackedGaussian::from(rb, tb);
  double p = tf_prob(tf_params(g, fov_local_polygon(fov)), g, relax_tf);
  for (const auto& o : obstacles) p *= lo_prob(lo_params(g, o), g, relax_lo);
  return p;
}

namespace {

// Symmetric square root that tolerates semidefinite input.
template <typename M>
M psd_sqrt(const M& cov) {
  Eigen::SelfAdjointEigenSolver<M> es(cov);
  const auto l = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * l.asDiagonal() * es.eigenvectors().transpose();
}

McEstimate finish(long hits, int n) {
  const double p = static_cast<double>(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

}  // namespace

McEstimate mc_bpod_oracle(const RobotBelief& rb, const TargetBelief& tb, std::span<const ConvexBody> obstacles,
                          const FovParams& fov, int n_samples, std::uint64_t seed) {
  if (n_samples < 100) throw std::invalid_argument("mc_bpod_oracle needs at least 100 samples");
  const Mat4 lr = psd_sqrt(rb.cov);
  const SmallMat lt = psd_sqrt(tb.cov);
  const Vec4 mr = rb.mean.vec();
  const int dt = tb.dim();
  long hits = 0;
  for (int i = 0; i < n_samples; ++i) {
    CounterRng rng = make_stream(seed, Stream::MonteCarlo, static_cast<std::uint64_t>(i));
    Vec4 xr;
    for (int k = 0; k < 4; ++k) xr[k] = rng.normal();
    SmallVec xt(dt);
    for (int k = 0; k < dt; ++k) xt[k] = rng.normal();
    const Vec4 zr = mr + lr * xr;
    const SmallVec zt = tb.mean + lt * xt;
    if (exact_visibility(Pose2(zr[0], zr[1], zr[2]), target_position(zt), obstacles, fov)) ++hits;
  }
  return finish(hits, n_samples);
}

McEstimate mc_collision_oracle(const RobotBelief& rb, const ConvexBody& obstacle, int n_samples, std::uint64_t seed) {
  if (n_samples < 100) throw std::invalid_argument("mc_collision_oracle needs at least 100 samples");
  const Mat4 lr = psd_sqrt(rb.cov);
  const Vec4 mr = rb.mean.vec();
  long hits = 0;
  for (int i = 0; i < n_samples; ++i) {
    CounterRng rng = make_stream(seed, Stream::MonteCarlo, static_cast<std::uint64_t>(i));
    Vec4 xr;
    for (int k = 0; k < 4; ++k) xr[k] = rng.normal();
    const Vec4 zr = mr + lr * xr;
    if (obstacle.contains_strict(zr.head<2>(), 0.0)) ++hits;
  }
  return finish(hits, n_samples);
}

}  // namespace vistrack
