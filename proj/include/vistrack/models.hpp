#pragma once

#include <Eigen/Core>

#include <numbers>

#include "vistrack/geom2d.hpp"

namespace vistrack {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
// Target states and measurements have at most three components.
using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

struct RobotState {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
  double speed = 0.0;

  RobotState() = default;
  RobotState(double x, double y, double h, double v) : position(x, y), heading(h), speed(v) {}

  Vec4 vec() const { return {position.x(), position.y(), heading, speed}; }
  static RobotState from_vec(const Vec4& z) { return {z[0], z[1], z[2], z[3]}; }
  Pose2 pose() const { return {position, heading}; }
};

struct RobotInput {
  double omega = 0.0;
  double accel = 0.0;
};

struct Limits {
  double accel_min = -4.0;
  double accel_max = 2.0;
  double omega_min = -std::numbers::pi / 3.0;
  double omega_max = std::numbers::pi / 3.0;
  double speed_min = 0.0;  // negative values allow reversing
  double speed_max = 4.0;

  void validate() const;
};

enum class TargetKind { LinearIntegrator, Unicycle };

/// Linear integrator: state = position, input = velocity (known).
/// Unicycle: state = (position, heading), input = (speed, turn rate).
struct TargetModel {
  TargetKind kind = TargetKind::LinearIntegrator;

  int state_dim() const { return kind == TargetKind::LinearIntegrator ? 2 : 3; }
  int input_dim() const { return 2; }
  /// Index of the heading component, or -1.
  int heading_index() const { return kind == TargetKind::Unicycle ? 2 : -1; }
};

enum class SensorKind { RangeBearing, CameraPose };

/// Range-bearing returns (range, bearing); the camera model appends the
/// target orientation relative to the robot heading.
struct SensorModel {
  SensorKind kind = SensorKind::RangeBearing;
  SmallMat noise_cov = SmallMat::Identity(2, 2);

  int dim() const { return kind == SensorKind::RangeBearing ? 2 : 3; }
  /// Components >= 1 are angles and get wrapped.
  static bool is_angular(int i) { return i >= 1; }
};

struct NoiseCovs {
  Mat4 robot = Mat4::Zero();
  SmallMat target = SmallMat::Zero(2, 2);
};

/// Noiseless robot unicycle step; heading rewrapped.
RobotState robot_step(const RobotState& z, const RobotInput& u, double dt);
Mat4 robot_jacobian(const RobotState& z, const RobotInput& u, double dt);

/// Throws std::invalid_argument on state/input dimension mismatch.
SmallVec target_step(const TargetModel& model, const SmallVec& z, const SmallVec& u, double dt);
SmallMat target_jacobian(const TargetModel& model, const SmallVec& z, const SmallVec& u, double dt);

inline Vec2 target_position(const SmallVec& z) { return {z[0], z[1]}; }

/// Noiseless measurement. Throws NumericalError when the target sits on the robot.
SmallVec measure(const SensorModel& sensor, const SmallVec& zt, const RobotState& zr);
/// d(measure)/d(target state), rows = sensor dim, cols = target dim.
SmallMat measurement_jacobian(const SensorModel& sensor, const SmallVec& zt, const RobotState& zr);

}  // namespace vistrack
