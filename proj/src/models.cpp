#include "vistrack/models.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vistrack {

void Limits::validate() const {
  if (!(accel_min < accel_max)) throw std::invalid_argument("limits: accel_min must be < accel_max");
  if (!(omega_min < omega_max)) throw std::invalid_argument("limits: omega_min must be < omega_max");
  if (!(speed_max > 0.0)) throw std::invalid_argument("limits: speed_max must be positive");
  if (!(speed_min <= 0.0)) throw std::invalid_argument("limits: speed_min must be <= 0");
}

RobotState robot_step(const RobotState& z, const RobotInput& u, double dt) {
  RobotState out;
  out.position = z.position + dt * z.speed * Vec2(std::cos(z.heading), std::sin(z.heading));
  out.heading = wrap_angle(z.heading + u.omega * dt);
  out.speed = z.speed + u.accel * dt;
  return out;
}

Mat4 robot_jacobian(const RobotState& z, const RobotInput&, double dt) {
  const double c = std::cos(z.heading), s = std::sin(z.heading);
  Mat4 a = Mat4::Identity();
  a(0, 2) = -z.speed * s * dt;
  a(0, 3) = c * dt;
  a(1, 2) = z.speed * c * dt;
  a(1, 3) = s * dt;
  return a;
}

namespace {

void check_dims(const TargetModel& model, const SmallVec& z, const SmallVec& u) {
  if (z.size() != model.state_dim() || u.size() != model.input_dim()) {
    throw std::invalid_argument("target model expects state dim " + std::to_string(model.state_dim()) +
                                " and input dim 2, got " + std::to_string(z.size()) + " and " +
                                std::to_string(u.size()));
  }
}

}  // namespace

SmallVec target_step(const TargetModel& model, const SmallVec& z, const SmallVec& u, double dt) {
  check_dims(model, z, u);
  if (model.kind == TargetKind::LinearIntegrator) return z + u * dt;
  SmallVec out(3);
  out << z[0] + u[0] * std::cos(z[2]) * dt, z[1] + u[0] * std::sin(z[2]) * dt, wrap_angle(z[2] + u[1] * dt);
  return out;
}

SmallMat target_jacobian(const TargetModel& model, const SmallVec& z, const SmallVec& u, double dt) {
  check_dims(model, z, u);
  if (model.kind == TargetKind::LinearIntegrator) return SmallMat::Identity(2, 2);
  SmallMat a = SmallMat::Identity(3, 3);
  a(0, 2) = -u[0] * std::sin(z[2]) * dt;
  a(1, 2) = u[0] * std::cos(z[2]) * dt;
  return a;
}

namespace {

void check_sensor(const SensorModel& sensor, const SmallVec& zt) {
  if (zt.size() < 2 || zt.size() > 3) throw std::invalid_argument("target state must have 2 or 3 components");
  if (sensor.kind == SensorKind::CameraPose && zt.size() != 3) {
    throw std::invalid_argument("camera sensor needs a target state with heading");
  }
}

}  // namespace

SmallVec measure(const SensorModel& sensor, const SmallVec& zt, const RobotState& zr) {
  check_sensor(sensor, zt);
  const Vec2 d = target_position(zt) - zr.position;
  const double r = d.norm();
  if (r == 0.0) throw NumericalError("measure: zero range leaves the bearing undefined");
  SmallVec y(sensor.dim());
  y[0] = r;
  y[1] = wrap_angle(std::atan2(d.y(), d.x()) - zr.heading);
  if (sensor.kind == SensorKind::CameraPose) y[2] = wrap_angle(zt[2] - zr.heading);
  return y;
}

SmallMat measurement_jacobian(const SensorModel& sensor, const SmallVec& zt, const RobotState& zr) {
  check_sensor(sensor, zt);
  const Vec2 d = target_position(zt) - zr.position;
  const double r2 = d.squaredNorm();
  if (r2 == 0.0) throw NumericalError("measurement Jacobian is singular at zero range");
  const double r = std::sqrt(r2);
  SmallMat c = SmallMat::Zero(sensor.dim(), zt.size());
  c(0, 0) = d.x() / r;
  c(0, 1) = d.y() / r;
  c(1, 0) = -d.y() / r2;
  c(1, 1) = d.x() / r2;
  if (sensor.kind == SensorKind::CameraPose) c(2, 2) = 1.0;
  return c;
}

}  // namespace vistrack
