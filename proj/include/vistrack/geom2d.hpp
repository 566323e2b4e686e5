#pragma once

#include <Eigen/Core>

#include <array>
#include <span>
#include <vector>

#include "vistrack/errors.hpp"

namespace vistrack {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }
inline Vec2 perp(const Vec2& a) { return {-a.y(), a.x()}; }
Mat2 rotation(double theta);

struct Pose2 {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;

  Pose2() = default;
  Pose2(Vec2 p, double h);
  Pose2(double x, double y, double h) : Pose2(Vec2(x, y), h) {}

  Vec2 to_world(const Vec2& local) const;
  Vec2 to_local(const Vec2& world) const;
};

/// Point, segment or strictly convex CCW polygon. All three answer the same
/// support query so GJK/EPA never special-cases a shape.
class ConvexBody {
 public:
  enum class Kind { Point, Segment, Polygon };

  static ConvexBody point(const Vec2& p);
  /// Throws GeometryError when a == b.
  static ConvexBody segment(const Vec2& a, const Vec2& b);
  /// Throws GeometryError unless the vertices are CCW and strictly convex.
  static ConvexBody polygon(std::vector<Vec2> vertices);

  Kind kind() const { return kind_; }
  std::span<const Vec2> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  const Vec2& vertex(std::size_t i) const { return vertices_[i]; }

  /// Index of the vertex maximizing dir . v (first one on ties).
  std::size_t support_index(const Vec2& dir) const;
  const Vec2& support(const Vec2& dir) const { return vertices_[support_index(dir)]; }

  ConvexBody translated(const Vec2& offset) const;
  ConvexBody transformed(const Pose2& pose) const;

  /// Strict interior test for polygons; always false for points and segments.
  bool contains_strict(const Vec2& p, double tol = 1e-12) const;
  Vec2 centroid() const;

 private:
  ConvexBody(Kind kind, std::vector<Vec2> vertices) : kind_(kind), vertices_(std::move(vertices)) {}

  Kind kind_;
  std::vector<Vec2> vertices_;
};

struct SdfResult {
  double signed_distance = 0.0;
  Vec2 p1 = Vec2::Zero();  // witness on body a
  Vec2 p2 = Vec2::Zero();  // witness on body b
  Vec2 normal = Vec2::UnitX();  // moving a along +normal increases the distance
};

namespace gjk {
inline constexpr double kTolerance = 1e-9;
inline constexpr int kMaxIterations = 64;
inline constexpr double kEpaTolerance = 1e-9;
inline constexpr int kEpaMaxIterations = 128;
}  // namespace gjk

/// Signed distance between two convex bodies with witness points. GJK handles
/// the separated case and EPA the overlapping one; touching bodies report 0.
SdfResult signed_distance(const ConvexBody& a, const ConvexBody& b);

/// Distance from a point to a segment; returns the closest point in `closest`.
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b, Vec2* closest = nullptr);

/// True iff the segment a-b passes through the strict interior of `poly`.
bool segment_hits_interior(const Vec2& a, const Vec2& b, const ConvexBody& poly);

// ---------------------------------------------------------------------------
// Field of view

struct FovParams {
  double r1 = 2.0;
  double r2 = 10.0;
  double psi = 2.0 * 3.14159265358979323846 / 3.0;  // total sensing angle
  int arc_segments = 6;

  /// Throws GeometryError when the sector or its convexification is degenerate.
  void validate() const;
};

/// FOV polygon in the sensor frame (origin at the robot, heading along +x).
std::vector<Vec2> fov_local_vertices(const FovParams& fov);

/// Annular sector with the triangle between the inner-arc tangent chord and
/// the robot cut away and the outer arc replaced by an inscribed polyline.
ConvexBody convexify_fov(const Pose2& pose, const FovParams& fov);

/// Membership in the true (nonconvex) annular sector.
bool in_fov_sector(const Pose2& robot, const Vec2& target, const FovParams& fov);

/// The two angular boundary half-planes a_i . x <= b_i of the sector.
struct HalfPlane {
  Vec2 a;
  double b;
};
std::array<HalfPlane, 2> fov_half_planes(const Pose2& robot, const FovParams& fov);

/// Detection oracle: in the sector and the line of sight hits no obstacle interior.
bool exact_visibility(const Pose2& robot, const Vec2& target, std::span<const ConvexBody> obstacles,
                      const FovParams& fov);

}  // namespace vistrack
