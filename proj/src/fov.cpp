#include <cmath>
#include <numbers>

#include "vistrack/geom2d.hpp"

namespace vistrack {

void FovParams::validate() const {
  if (!(r1 > 0.0 && r1 < r2)) throw GeometryError("fov requires 0 < r1 < r2");
  if (!(psi > 0.0 && psi < std::numbers::pi)) throw GeometryError("fov requires 0 < psi < pi");
  if (arc_segments < 2) throw GeometryError("fov requires arc_segments >= 2");
  // The tangent chord must meet the boundary rays inside the outer arc.
  if (r1 / std::cos(0.5 * psi) >= r2) throw GeometryError("fov inner chord reaches the outer arc");
}

std::vector<Vec2> fov_local_vertices(const FovParams& fov) {
  fov.validate();
  const double half = 0.5 * fov.psi;
  const double chord_r = fov.r1 / std::cos(half);
  std::vector<Vec2> v;
  v.reserve(static_cast<std::size_t>(fov.arc_segments) + 3);
  v.emplace_back(chord_r * std::cos(-half), chord_r * std::sin(-half));
  for (int i = 0; i <= fov.arc_segments; ++i) {
    const double ang = -half + fov.psi * static_cast<double>(i) / fov.arc_segments;
    v.emplace_back(fov.r2 * std::cos(ang), fov.r2 * std::sin(ang));
  }
  v.emplace_back(chord_r * std::cos(half), chord_r * std::sin(half));
  return v;
}

ConvexBody convexify_fov(const Pose2& pose, const FovParams& fov) {
  return ConvexBody::polygon(fov_local_vertices(fov)).transformed(pose);
}

std::array<HalfPlane, 2> fov_half_planes(const Pose2& robot, const FovParams& fov) {
  const double half = 0.5 * fov.psi;
  const Vec2 left(std::cos(robot.heading + half), std::sin(robot.heading + half));
  const Vec2 right(std::cos(robot.heading - half), std::sin(robot.heading - half));
  // Inside lies clockwise of the left ray and counter-clockwise of the right ray.
  const Vec2 a1 = perp(left);
  const Vec2 a2 = -perp(right);
  return {HalfPlane{a1, a1.dot(robot.position)}, HalfPlane{a2, a2.dot(robot.position)}};
}

bool in_fov_sector(const Pose2& robot, const Vec2& target, const FovParams& fov) {
  const double r = (target - robot.position).norm();
  if (r < fov.r1 || r > fov.r2) return false;
  for (const auto& h : fov_half_planes(robot, fov)) {
    if (h.a.dot(target) > h.b) return false;
  }
  return true;
}

bool exact_visibility(const Pose2& robot, const Vec2& target, std::span<const ConvexBody> obstacles,
                      const FovParams& fov) {
  if (!in_fov_sector(robot, target, fov)) return false;
  for (const auto& o : obstacles) {
    if (segment_hits_interior(robot.position, target, o)) return false;
  }
  return true;
}

}  // namespace vistrack
