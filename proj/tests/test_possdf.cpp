#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "vistrack/errors.hpp"
#include "vistrack/possdf.hpp"

using namespace vistrack;
using std::numbers::pi;

namespace {

SmallVec vec2(double x, double y) {
  SmallVec v(2);
  v << x, y;
  return v;
}

RobotBelief robot_belief(double x, double y, double h, double var) {
  RobotBelief b;
  b.mean = RobotState(x, y, h, 0.0);
  b.cov = var * Mat4::Identity();
  return b;
}

TargetBelief target_belief(double x, double y, double var) { return {vec2(x, y), var * SmallMat::Identity(2, 2)}; }

ConvexBody square(const Vec2& c, double half) {
  return ConvexBody::polygon({c + Vec2(-half, -half), c + Vec2(half, -half), c + Vec2(half, half),
                              c + Vec2(-half, half)});
}

// Closest boundary point of a convex polygon.
Vec2 closest_boundary_point(const Vec2& p, const ConvexBody& poly) {
  double best = std::numeric_limits<double>::infinity();
  Vec2 out = Vec2::Zero();
  for (const auto& e : oracle::edges(poly)) {
    const Vec2 ab = e.b - e.a;
    const double t = std::clamp((p - e.a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const Vec2 q = e.a + t * ab;
    if ((p - q).norm() < best) {
      best = (p - q).norm();
      out = q;
    }
  }
  return out;
}

// Test-side Monte Carlo of line-of-sight clearance with an independent sampler.
double mc_los_clear(const RobotBelief& rb, const TargetBelief& tb, const ConvexBody& obstacle, int n,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd lr = oracle::psd_root(Eigen::MatrixXd(rb.cov));
  const Eigen::MatrixXd lt = oracle::psd_root(Eigen::MatrixXd(tb.cov));
  const Eigen::VectorXd mr = rb.mean.vec();
  const Eigen::VectorXd mt = tb.mean;
  int clear = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd r = oracle::sample(rng, mr, lr);
    const Eigen::VectorXd t = oracle::sample(rng, mt, lt);
    if (!oracle::segment_crosses_interior(r.head<2>(), t.head<2>(), obstacle)) ++clear;
  }
  return static_cast<double>(clear) / n;
}

double mc_visible(const RobotBelief& rb, const TargetBelief& tb, const std::vector<ConvexBody>& obstacles,
                  const FovParams& fov, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd lr = oracle::psd_root(Eigen::MatrixXd(rb.cov));
  const Eigen::MatrixXd lt = oracle::psd_root(Eigen::MatrixXd(tb.cov));
  const Eigen::VectorXd mr = rb.mean.vec();
  const Eigen::VectorXd mt = tb.mean;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd r = oracle::sample(rng, mr, lr);
    const Eigen::VectorXd t = oracle::sample(rng, mt, lt);
    if (oracle::visible(r.head<2>(), r[2], t.head<2>(), obstacles, fov.r1, fov.r2, fov.psi)) ++hits;
  }
  return static_cast<double>(hits) / n;
}

}  // namespace

TEST_SUITE("possdf") {
  TEST_CASE("linear gaussian probability examples") {
    const Eigen::Vector2d a(1, 0);
    const Eigen::Matrix2d eye = Eigen::Matrix2d::Identity();
    CHECK(std::abs(linear_gaussian_prob(a, 0.0, Eigen::Vector2d(0, 0), eye) - 0.5) <= 1e-15);
    CHECK(std::abs(linear_gaussian_prob(a, 0.0, Eigen::Vector2d(-1, 0), eye) - 0.841344746) <= 1e-9);
    CHECK(std::abs(linear_gaussian_prob(a, 0.0, Eigen::Vector2d(-1, 0), eye) - oracle::phi(1.0)) <= 1e-15);
    CHECK(linear_gaussian_prob(a, 0.0, Eigen::Vector2d(-1, 0), Eigen::Matrix2d::Zero()) == 1.0);
    CHECK(linear_gaussian_prob(a, 0.0, Eigen::Vector2d(1, 0), Eigen::Matrix2d::Zero()) == 0.0);
  }

  TEST_CASE("linear gaussian probability is monotone and scale invariant") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 200; ++i) {
      const Eigen::Vector3d a(u(rng), u(rng), u(rng));
      const Eigen::Vector3d m(u(rng), u(rng), u(rng));
      const Eigen::Matrix3d s = oracle::random_spd<Eigen::Matrix3d>(rng, 3, 0.01, 2.0);
      const double b = u(rng);
      const double p = linear_gaussian_prob(a, b, m, s);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      CHECK(linear_gaussian_prob(a, b + 0.1, m, s) >= p);
      const double k = 0.01 + std::abs(u(rng)) * 10;
      CHECK(std::abs(linear_gaussian_prob(k * a, k * b, m, s) - p) <= 1e-12);
    }
  }

  TEST_CASE("sdf parameters for a point and a static square") {
    RobotBelief rb = robot_belief(0, 0, 0.3, 0.0);
    const StackedGaussian g = StackedGaussian::from(rb, target_belief(20, 20, 0.0));
    const ConvexBody sq = square({3, 0}, 1.0);
    const auto [params, sd] = compute_sdf_params({ConvexBody::point({0, 0}), Frame::RobotPosition},
                                                 {sq, Frame::Static}, g);
    CHECK(std::abs(sd.signed_distance - 2.0) <= 1e-12);
    CHECK((params.normal - Vec2(-1, 0)).norm() <= 1e-12);
    CHECK((params.local2 - Vec2(2, 0)).norm() <= 1e-12);
    CHECK(params.local1.norm() <= 1e-12);
    CHECK(std::abs(params.normal.norm() - 1.0) <= 1e-12);
  }

  TEST_CASE("separative ratio examples") {
    const StackedGaussian g = StackedGaussian::from(robot_belief(0, 0, 0, 0.01), target_belief(10, 0, 0.01));
    const ConvexBody tri = ConvexBody::polygon({{4, 1}, {5, 3}, {3, 3}});
    const auto [p, sd] = compute_los_params({tri, Frame::Static}, g);
    CHECK(p.kind == SdfParams::Kind::LosPair);
    CHECK(std::abs(p.lambda - 0.6) <= 1e-12);
    CHECK(std::abs(sd.signed_distance - 1.0) <= 1e-12);

    const ConvexBody far_end = ConvexBody::polygon({{11, 0.5}, {13, 2}, {11, 2}});
    const auto [q, sd2] = compute_los_params({far_end, Frame::Static}, g);
    CHECK(q.lambda == 0.0);
    // p1 is the target position, so the robot block of the gradient vanishes.
    const LinearizedSdf l = linearize_sdf(q, g);
    CHECK(l.gradient.head<4>().norm() == 0.0);
    CHECK(std::abs(l.value - sd2.signed_distance) <= 1e-12);

    const StackedGaussian same = StackedGaussian::from(robot_belief(1, 1, 0, 0.01), target_belief(1, 1, 0.01));
    CHECK_THROWS_AS(compute_los_params({tri, Frame::Static}, same), GeometryError);
  }

  TEST_CASE("linearization reproduces the signed distance at the mean") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-1, 1);
    const FovParams fov;
    const ConvexBody local = fov_local_polygon(fov);
    for (int i = 0; i < 100; ++i) {
      const RobotBelief rb = robot_belief(5 * u(rng), 5 * u(rng), pi * u(rng), 0.1);
      const TargetBelief tb = target_belief(8 * u(rng), 8 * u(rng), 0.1);
      const StackedGaussian g = StackedGaussian::from(rb, tb);
      const SdfParams p = tf_params(g, local);
      const double sd = signed_distance(ConvexBody::point(tb.mean.head(2)),
                                        local.transformed(frame_pose(Frame::RobotPose, g)))
                            .signed_distance;
      CHECK(std::abs(linearize_sdf(p, g).value - sd) <= 1e-9);
    }
  }

  TEST_CASE("frozen gradient matches finite differences") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(-1, 1);
    const ConvexBody local = fov_local_polygon(FovParams{});
    const ConvexBody obstacle = square({3, 3}, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const StackedGaussian g = StackedGaussian::from(robot_belief(5 * u(rng), 5 * u(rng), pi * u(rng), 0.1),
                                                      target_belief(8 * u(rng), 8 * u(rng), 0.1));
      if ((g.robot_mean.head<2>() - g.target_mean).norm() < 0.5) continue;
      for (const SdfParams& p : {tf_params(g, local), lo_params(g, obstacle), ro_params(g, obstacle)}) {
        const StackedVec grad = linearize_sdf(p, g).gradient;
        for (int j = 0; j < g.dim(); ++j) {
          StackedGaussian lo = g, hi = g;
          const double h = 1e-6;
          if (j < 4) {
            lo.robot_mean[j] -= h;
            hi.robot_mean[j] += h;
          } else {
            lo.target_mean[j - 4] -= h;
            hi.target_mean[j - 4] += h;
          }
          const double fd = (linearize_sdf(p, hi).value - linearize_sdf(p, lo).value) / (2 * h);
          worst = std::max(worst, std::abs(fd - grad[j]));
        }
      }
    }
    CHECK(worst <= 1e-6);
  }

  TEST_CASE("point robot against a static polygon is exact") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-4, 4);
    int checked = 0;
    double worst = 0.0;
    while (checked < 200) {
      const ConvexBody poly = oracle::random_polygon(rng, {0, 0}, 2.0);
      RobotBelief rb;
      rb.mean = RobotState(u(rng), u(rng), u(rng), 1.0);
      rb.cov = oracle::random_spd<Mat4>(rng, 4, 0.01, 1.0);
      const Vec2 x = rb.mean.position;
      const Vec2 q = closest_boundary_point(x, poly);
      if ((x - q).norm() < 1e-6) continue;
      const bool inside = oracle::inside_polygon(x, poly);
      const Vec2 n = inside ? Vec2((q - x).normalized()) : Vec2((x - q).normalized());
      const double var = n.dot(rb.cov.topLeftCorner<2, 2>() * n);
      const double expect = oracle::phi((n.dot(q) - n.dot(x)) / std::sqrt(var));
      worst = std::max(worst, std::abs(gamma_ro(rb, poly) - expect));
      ++checked;
    }
    MESSAGE("max deviation from the half-plane closed form: " << worst);
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("deterministic limits") {
    const ConvexBody sq = square({3, 0}, 1.0);
    const StackedGaussian g = StackedGaussian::from(robot_belief(0, 0, 0, 0.0), target_belief(20, 20, 0.0));
    const SdfParams p = ro_params(g, sq);
    CHECK(possdf_prob(p, g, Sense::Leq, 0.0) == 0.0);
    CHECK(possdf_prob(p, g, Sense::Geq, 0.0) == 1.0);
  }

  TEST_CASE("field of view limits") {
    const FovParams fov;
    const RobotBelief rb = robot_belief(0, 0, 0, 1e-6);
    CHECK(gamma_tf(rb, target_belief(6, 0, 1e-6), fov, 0.0) >= 0.999);
    CHECK(gamma_tf(rb, target_belief(-20, 0, 1e-6), fov, 0.0) <= 0.001);
    // Inner chord sits at x = r1 in the sensor frame.
    const RobotBelief rbi = robot_belief(0, 0, 0, 0.01);
    CHECK(std::abs(gamma_tf(rbi, target_belief(fov.r1, 0, 0.01), fov, 0.0) - 0.5) <= 0.02);
  }

  TEST_CASE("occlusion limits") {
    const RobotBelief rb = robot_belief(0, 0, 0, 1e-6);
    const TargetBelief tb = target_belief(10, 0, 1e-6);
    CHECK(gamma_lo(rb, tb, square({5, 30}, 1.0), 0.0) >= 0.999);
    CHECK(gamma_lo(rb, tb, square({5, 0}, 1.0), 0.0) <= 0.001);
  }

  TEST_CASE("occlusion probability agrees with Monte Carlo near the margin") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    double total = 0.0;
    const int cases = 20;
    for (int i = 0; i < cases; ++i) {
      const RobotBelief rb = robot_belief(0, 0, 0, 0.02 + 0.02 * std::abs(u(rng)));
      const TargetBelief tb = target_belief(10 + u(rng), u(rng), 0.05 + 0.05 * std::abs(u(rng)));
      const ConvexBody obstacle = square({5 + u(rng), tb.mean[1] / 2 + 1.0 + 0.4 * u(rng)}, 0.8);
      const double est = gamma_lo(rb, tb, obstacle, 0.0);
      const double mc = mc_los_clear(rb, tb, obstacle, 100000, 1000 + i);
      total += std::abs(est - mc);
    }
    MESSAGE("mean abs error: " << total / cases);
    CHECK(total / cases <= 0.01);
  }

  TEST_CASE("collision probability is conservative") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 100; ++i) {
      const ConvexBody poly = oracle::random_polygon(rng, {0, 0}, 2.0);
      RobotBelief rb;
      rb.mean = RobotState(u(rng), u(rng), u(rng), 1.0);
      rb.cov = oracle::random_spd<Mat4>(rng, 4, 0.01, 1.0);
      const Eigen::MatrixXd root = oracle::psd_root(Eigen::MatrixXd(rb.cov));
      const Eigen::VectorXd mean = rb.mean.vec();
      const int n = 20000;
      int inside = 0;
      for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd s = oracle::sample(rng, mean, root);
        if (oracle::strictly_inside_polygon(s.head<2>(), poly)) ++inside;
      }
      const double p = static_cast<double>(inside) / n;
      const double se = std::sqrt(p * (1 - p) / n);
      CHECK(gamma_ro(rb, poly) >= p - 3 * se);
    }
    const ConvexBody sq = square({0, 0}, 1.0);
    CHECK(gamma_ro(robot_belief(0, 0, 0, 1e-6), sq) >= 0.999);
    CHECK(gamma_ro(robot_belief(20, 0, 0, 1e-2), sq) <= 1e-6);
  }

  TEST_CASE("bpod product") {
    CHECK(bpod(1.0, {}) == 1.0);
    const std::vector<double> one{0.8};
    CHECK(std::abs(bpod(0.9, one) - 0.72) <= 1e-15);
    const std::vector<double> with_zero{0.7, 0.0, 0.9};
    CHECK(bpod(0.9, with_zero) == 0.0);
    CHECK(bpod(0.0, one) == 0.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> g{u(rng), u(rng), u(rng)};
      const double t = u(rng);
      const double p = bpod(t, g);
      CHECK(p >= 0.0);
      CHECK(p <= std::min({t, g[0], g[1], g[2]}));
    }
  }

  TEST_CASE("monte carlo oracle") {
    const FovParams fov;
    const std::vector<ConvexBody> obstacles{square({5, 0}, 1.0)};
    const RobotBelief rb = robot_belief(0, 0, 0, 0.0);
    McEstimate vis = mc_bpod_oracle(rb, target_belief(5, 4, 0.0), obstacles, fov, 500, 1);
    CHECK(vis.estimate == 1.0);
    CHECK(vis.std_error == 0.0);
    McEstimate occ = mc_bpod_oracle(rb, target_belief(8, 0, 0.0), obstacles, fov, 500, 1);
    CHECK(occ.estimate == 0.0);

    const RobotBelief noisy = robot_belief(0, 0, 0, 0.05);
    const TargetBelief tb = target_belief(7, 1.2, 0.3);
    const McEstimate a = mc_bpod_oracle(noisy, tb, obstacles, fov, 5000, 42);
    const McEstimate b = mc_bpod_oracle(noisy, tb, obstacles, fov, 5000, 42);
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_error == b.std_error);
    CHECK_THROWS(mc_bpod_oracle(noisy, tb, obstacles, fov, 50, 42));
  }

  TEST_CASE("monte carlo oracle agrees with an independent sampler") {
    const FovParams fov;
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 8; ++i) {
      const std::vector<ConvexBody> obstacles{square({5 + u(rng), 1.5 * u(rng)}, 0.7),
                                              square({3 + u(rng), 4 + u(rng)}, 0.5)};
      const RobotBelief rb = robot_belief(0.3 * u(rng), 0.3 * u(rng), 0.4 * u(rng), 0.05);
      const TargetBelief tb = target_belief(8 + u(rng), 2 * u(rng), 0.3);
      const int n = 20000;
      const McEstimate lib = mc_bpod_oracle(rb, tb, obstacles, fov, n, 500 + i);
      const double ref = mc_visible(rb, tb, obstacles, fov, n, 900 + i);
      const double se = std::sqrt(std::max(ref * (1 - ref), 1e-4) / n);
      CHECK(std::abs(lib.estimate - ref) <= 4 * std::sqrt(lib.std_error * lib.std_error + se * se) + 1e-3);
    }
  }
}
