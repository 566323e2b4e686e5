#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "vistrack/errors.hpp"
#include "vistrack/models.hpp"

using namespace vistrack;
using std::numbers::pi;

namespace {

constexpr double kTwoPi = 2.0 * pi;

SmallVec vec(std::initializer_list<double> v) {
  SmallVec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// Angle-aware difference so finite differences survive the wrap seam.
double diff(double a, double b, bool angular) { return angular ? std::remainder(a - b, kTwoPi) : a - b; }

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("robot step examples") {
    RobotState z = robot_step({0, 0, 0, 1}, {0, 0}, 0.5);
    CHECK(near(z.position.x(), 0.5, 1e-12));
    CHECK(near(z.position.y(), 0.0, 1e-12));
    CHECK(near(z.speed, 1.0, 1e-12));

    z = robot_step({0, 0, 0, 0}, {0, 2}, 0.5);
    CHECK(z.position.norm() == 0.0);
    CHECK(near(z.speed, 1.0, 1e-12));

    z = robot_step({32, 7, 3 * pi / 4, 0}, {pi / 3, 2}, 0.5);
    CHECK(near(z.position.x(), 32, 1e-12));
    CHECK(near(z.position.y(), 7, 1e-12));
    CHECK(near(z.heading, 3 * pi / 4 + pi / 6, 1e-12));
    CHECK(near(z.speed, 1.0, 1e-12));
  }

  TEST_CASE("robot heading stays wrapped") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int i = 0; i < 500; ++i) {
      const RobotState z = robot_step({u(rng), u(rng), u(rng), u(rng)}, {u(rng), u(rng)}, 0.5);
      CHECK(z.heading > -pi);
      CHECK(z.heading <= pi);
    }
  }

  TEST_CASE("target step examples") {
    const TargetModel lin{TargetKind::LinearIntegrator};
    const TargetModel uni{TargetKind::Unicycle};
    SmallVec z = target_step(lin, vec({28, 9}), vec({1, 0}), 0.5);
    CHECK(near(z[0], 28.5, 1e-12));
    CHECK(near(z[1], 9, 1e-12));

    z = target_step(uni, vec({0, 0, 0}), vec({2, 0}), 0.5);
    CHECK(near(z[0], 1, 1e-12));
    CHECK(near(z[1], 0, 1e-12));
    CHECK(near(z[2], 0, 1e-12));

    z = target_step(uni, vec({0, 0, 0}), vec({0, pi}), 0.5);
    CHECK(near(z[0], 0, 1e-12));
    CHECK(near(z[2], pi / 2, 1e-12));
  }

  TEST_CASE("target dimension mismatch throws") {
    const TargetModel lin{TargetKind::LinearIntegrator};
    const TargetModel uni{TargetKind::Unicycle};
    CHECK_THROWS_AS(target_step(lin, vec({0, 0, 0}), vec({1, 0}), 0.5), std::invalid_argument);
    CHECK_THROWS_AS(target_step(uni, vec({0, 0}), vec({1, 0}), 0.5), std::invalid_argument);
    CHECK_THROWS_AS(target_step(uni, vec({0, 0, 0}), vec({1}), 0.5), std::invalid_argument);
  }

  TEST_CASE("linear target is exactly linear") {
    const TargetModel lin{TargetKind::LinearIntegrator};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int i = 0; i < 100; ++i) {
      const SmallVec z = vec({u(rng), u(rng)});
      const SmallVec v = vec({u(rng) / 10, u(rng) / 10});
      const SmallVec next = target_step(lin, z, v, 0.5);
      CHECK(((next - z) - 0.5 * v).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(target_jacobian(lin, z, v, 0.5).isIdentity(0.0));
    }
  }

  TEST_CASE("measurement examples") {
    const SensorModel rb{SensorKind::RangeBearing, SmallMat::Identity(2, 2)};
    const SensorModel cam{SensorKind::CameraPose, SmallMat::Identity(3, 3)};
    SmallVec y = measure(rb, vec({1, 0}), {0, 0, 0, 0});
    CHECK(near(y[0], 1, 1e-12));
    CHECK(near(y[1], 0, 1e-12));

    y = measure(rb, vec({3, 4}), {0, 0, 0, 0});
    CHECK(near(y[0], 5, 1e-12));
    CHECK(near(y[1], std::atan2(4.0, 3.0), 1e-12));
    CHECK(near(y[1], 0.927295218, 1e-9));

    y = measure(cam, vec({-1, 0, pi}), {0, 0, pi, 0});
    CHECK(y.size() == 3);
    CHECK(near(y[0], 1, 1e-12));
    CHECK(near(y[1], 0, 1e-12));
    CHECK(near(y[2], 0, 1e-12));
  }

  TEST_CASE("zero range is rejected") {
    const SensorModel rb{SensorKind::RangeBearing, SmallMat::Identity(2, 2)};
    CHECK_THROWS_AS(measure(rb, vec({2, 3}), {2, 3, 0, 0}), NumericalError);
    CHECK_THROWS_AS(measurement_jacobian(rb, vec({2, 3}), {2, 3, 0, 0}), NumericalError);
  }

  TEST_CASE("range-bearing is invariant under rigid motion") {
    const SensorModel rb{SensorKind::RangeBearing, SmallMat::Identity(2, 2)};
    const SensorModel cam{SensorKind::CameraPose, SmallMat::Identity(3, 3)};
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-20, 20);
    std::uniform_real_distribution<double> ang(-pi, pi);
    for (int i = 0; i < 200; ++i) {
      const RobotState zr(u(rng), u(rng), ang(rng), 1.0);
      const SmallVec zt = vec({u(rng), u(rng), ang(rng)});
      const double rot = ang(rng);
      const Vec2 shift(u(rng), u(rng));
      const Eigen::Rotation2Dd r(rot);
      const Vec2 rp = r * zr.position + shift;
      const Vec2 tp = r * Vec2(zt[0], zt[1]) + shift;
      const RobotState zr2(rp.x(), rp.y(), wrap_angle(zr.heading + rot), 1.0);
      const SmallVec zt2 = vec({tp.x(), tp.y(), wrap_angle(zt[2] + rot)});
      const SmallVec a = measure(cam, zt, zr);
      const SmallVec b = measure(cam, zt2, zr2);
      CHECK(near(a[0], b[0], 1e-9));
      CHECK(std::abs(std::remainder(a[1] - b[1], kTwoPi)) <= 1e-9);
      CHECK(std::abs(std::remainder(a[2] - b[2], kTwoPi)) <= 1e-9);
      const SmallVec c = measure(rb, zt.head(2), zr);
      const SmallVec d = measure(rb, zt2.head(2), zr2);
      CHECK(near(c[0], d[0], 1e-9));
      CHECK(std::abs(std::remainder(c[1] - d[1], kTwoPi)) <= 1e-9);
      CHECK(a[1] > -pi);
      CHECK(a[1] <= pi);
    }
  }

  TEST_CASE("robot jacobian example") {
    const Mat4 a = robot_jacobian({0, 0, 0, 1}, {0, 0}, 0.5);
    Mat4 expect = Mat4::Identity();
    expect(0, 2) = 0.0;  // -v sin(theta) dt
    expect(0, 3) = 0.5;  // cos(theta) dt
    expect(1, 2) = 0.5;  // v cos(theta) dt
    expect(1, 3) = 0.0;  // sin(theta) dt
    CHECK((a - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("jacobians match central differences") {
    constexpr double h = 1e-6;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-10, 10);
    std::uniform_real_distribution<double> ang(-pi, pi);
    const TargetModel uni{TargetKind::Unicycle};
    const SensorModel rb{SensorKind::RangeBearing, SmallMat::Identity(2, 2)};
    const SensorModel cam{SensorKind::CameraPose, SmallMat::Identity(3, 3)};
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const RobotState zr(u(rng), u(rng), ang(rng), 0.4 * u(rng));
      const RobotInput ur{0.1 * u(rng), 0.3 * u(rng)};
      const Mat4 ar = robot_jacobian(zr, ur, 0.5);
      for (int j = 0; j < 4; ++j) {
        Vec4 lo = zr.vec(), hi = zr.vec();
        lo[j] -= h;
        hi[j] += h;
        const Vec4 fl = robot_step(RobotState::from_vec(lo), ur, 0.5).vec();
        const Vec4 fh = robot_step(RobotState::from_vec(hi), ur, 0.5).vec();
        for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(diff(fh[i], fl[i], i == 2) / (2 * h) - ar(i, j)));
      }

      const SmallVec zt = vec({u(rng), u(rng), ang(rng)});
      const SmallVec ut = vec({0.3 * u(rng), 0.1 * u(rng)});
      const SmallMat at = target_jacobian(uni, zt, ut, 0.5);
      for (int j = 0; j < 3; ++j) {
        SmallVec lo = zt, hi = zt;
        lo[j] -= h;
        hi[j] += h;
        const SmallVec fl = target_step(uni, lo, ut, 0.5);
        const SmallVec fh = target_step(uni, hi, ut, 0.5);
        for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(diff(fh[i], fl[i], i == 2) / (2 * h) - at(i, j)));
      }

      if ((zt.head(2) - zr.position).norm() < 0.5) continue;
      for (const SensorModel* s : {&rb, &cam}) {
        const SmallVec x = s->kind == SensorKind::RangeBearing ? SmallVec(zt.head(2)) : zt;
        const SmallMat c = measurement_jacobian(*s, x, zr);
        REQUIRE(c.rows() == s->dim());
        REQUIRE(c.cols() == x.size());
        for (int j = 0; j < x.size(); ++j) {
          SmallVec lo = x, hi = x;
          lo[j] -= h;
          hi[j] += h;
          const SmallVec fl = measure(*s, lo, zr);
          const SmallVec fh = measure(*s, hi, zr);
          for (int i = 0; i < s->dim(); ++i) {
            worst = std::max(worst, std::abs(diff(fh[i], fl[i], SensorModel::is_angular(i)) / (2 * h) - c(i, j)));
          }
        }
      }
    }
    CHECK(worst <= 1e-5);
  }

  TEST_CASE("limit validation") {
    Limits l;
    CHECK_NOTHROW(l.validate());
    l.accel_min = 3.0;
    CHECK_THROWS(l.validate());
    l = Limits{};
    l.speed_max = 0.0;
    CHECK_THROWS(l.validate());
    l = Limits{};
    l.omega_min = l.omega_max;
    CHECK_THROWS(l.validate());
  }
}
