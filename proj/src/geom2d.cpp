#include "vistrack/geom2d.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace vistrack {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (a > -std::numbers::pi && a <= std::numbers::pi) return a;
  double r = std::fmod(a + std::numbers::pi, two_pi);
  if (r <= 0.0) r += two_pi;
  return r - std::numbers::pi;
}

Mat2 rotation(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

Pose2::Pose2(Vec2 p, double h) : position(std::move(p)), heading(wrap_angle(h)) {}

Vec2 Pose2::to_world(const Vec2& local) const { return rotation(heading) * local + position; }
Vec2 Pose2::to_local(const Vec2& world) const { return rotation(heading).transpose() * (world - position); }

// ---------------------------------------------------------------------------
// ConvexBody

ConvexBody ConvexBody::point(const Vec2& p) {
  if (!p.allFinite()) throw GeometryError("point has non-finite coordinates");
  return ConvexBody(Kind::Point, {p});
}

ConvexBody ConvexBody::segment(const Vec2& a, const Vec2& b) {
  if (!a.allFinite() || !b.allFinite()) throw GeometryError("segment has non-finite coordinates");
  if ((a - b).squaredNorm() == 0.0) throw GeometryError("segment endpoints coincide");
  return ConvexBody(Kind::Segment, {a, b});
}

ConvexBody ConvexBody::polygon(std::vector<Vec2> vertices) {
  const std::size_t n = vertices.size();
  if (n < 3) throw GeometryError("polygon needs at least 3 vertices");
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!vertices[i].allFinite()) throw GeometryError("polygon has non-finite coordinates");
    const Vec2 e0 = vertices[(i + 1) % n] - vertices[i];
    const Vec2 e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
    const double l0 = e0.norm(), l1 = e1.norm();
    if (l0 == 0.0 || l1 == 0.0) throw GeometryError("polygon has repeated adjacent vertices");
    const double c = cross(e0, e1);
    if (c <= 1e-12 * l0 * l1) throw GeometryError("polygon is not strictly convex and counter-clockwise");
    turning += std::atan2(c, e0.dot(e1));
  }
  if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6) throw GeometryError("polygon is self-intersecting");
  return ConvexBody(Kind::Polygon, std::move(vertices));
}

std::size_t ConvexBody::support_index(const Vec2& dir) const {
  std::size_t best = 0;
  double best_dot = vertices_[0].dot(dir);
  for (std::size_t i = 1; i < vertices_.size(); ++i) {
    const double d = vertices_[i].dot(dir);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

ConvexBody ConvexBody::translated(const Vec2& offset) const {
  ConvexBody out = *this;
  for (auto& v : out.vertices_) v += offset;
  return out;
}

ConvexBody ConvexBody::transformed(const Pose2& pose) const {
  ConvexBody out = *this;
  const Mat2 r = rotation(pose.heading);
  for (auto& v : out.vertices_) v = r * v + pose.position;
  return out;
}

bool ConvexBody::contains_strict(const Vec2& p, double tol) const {
  if (kind_ != Kind::Polygon) return false;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices_[i];
    const Vec2 e = vertices_[(i + 1) % n] - a;
    if (cross(e, p - a) <= tol * e.norm()) return false;
  }
  return true;
}

Vec2 ConvexBody::centroid() const {
  if (kind_ != Kind::Polygon) {
    Vec2 s = Vec2::Zero();
    for (const auto& v : vertices_) s += v;
    return s / static_cast<double>(vertices_.size());
  }
  double area = 0.0;
  Vec2 c = Vec2::Zero();
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = vertices_[i];
    const Vec2& q = vertices_[(i + 1) % n];
    const double w = cross(p, q);
    area += w;
    c += (p + q) * w;
  }
  return c / (3.0 * area);
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b, Vec2* closest) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 q = a + t * ab;
  if (closest) *closest = q;
  return (p - q).norm();
}

bool segment_hits_interior(const Vec2& a, const Vec2& b, const ConvexBody& poly) {
  if (poly.kind() != ConvexBody::Kind::Polygon) return false;
  // Cyrus-Beck clip against the closed polygon, then probe the clipped middle.
  const Vec2 d = b - a;
  double t0 = 0.0, t1 = 1.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& v = poly.vertex(i);
    const Vec2 e = poly.vertex((i + 1) % n) - v;
    // inside when cross(e, x - v) >= 0
    const double num = cross(e, a - v);
    const double den = cross(e, d);
    if (den == 0.0) {
      if (num < 0.0) return false;
      continue;
    }
    const double t = -num / den;
    if (den > 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
  }
  return poly.contains_strict(a + 0.5 * (t0 + t1) * d);
}

// ---------------------------------------------------------------------------
// GJK / EPA

namespace {

struct SupportPoint {
  Vec2 w;  // a - b
  Vec2 a;
  Vec2 b;
};

SupportPoint minkowski_support(const ConvexBody& a, const ConvexBody& b, const Vec2& dir) {
  const Vec2& pa = a.support(dir);
  const Vec2& pb = b.support(-dir);
  return {pa - pb, pa, pb};
}

struct Simplex {
  std::array<SupportPoint, 3> pts;
  std::array<double, 3> lambda{};
  int size = 0;

  Vec2 closest() const {
    Vec2 v = Vec2::Zero();
    for (int i = 0; i < size; ++i) v += lambda[i] * pts[i].w;
    return v;
  }
  Vec2 witness_a() const {
    Vec2 v = Vec2::Zero();
    for (int i = 0; i < size; ++i) v += lambda[i] * pts[i].a;
    return v;
  }
  Vec2 witness_b() const {
    Vec2 v = Vec2::Zero();
    for (int i = 0; i < size; ++i) v += lambda[i] * pts[i].b;
    return v;
  }
};

// Closest point of segment [p, q] to the origin as barycentric weight on q.
double segment_origin_param(const Vec2& p, const Vec2& q) {
  const Vec2 e = q - p;
  const double len2 = e.squaredNorm();
  if (len2 == 0.0) return 0.0;
  return std::clamp(-p.dot(e) / len2, 0.0, 1.0);
}

void reduce_segment(Simplex& s, int i, int j) {
  const double t = segment_origin_param(s.pts[i].w, s.pts[j].w);
  const SupportPoint pi = s.pts[i], pj = s.pts[j];
  if (t <= 0.0) {
    s.pts[0] = pi;
    s.lambda[0] = 1.0;
    s.size = 1;
  } else if (t >= 1.0) {
    s.pts[0] = pj;
    s.lambda[0] = 1.0;
    s.size = 1;
  } else {
    s.pts[0] = pi;
    s.pts[1] = pj;
    s.lambda[0] = 1.0 - t;
    s.lambda[1] = t;
    s.size = 2;
  }
}

// Returns true when the origin lies inside the triangle (overlap).
bool solve_simplex(Simplex& s) {
  if (s.size == 1) {
    s.lambda[0] = 1.0;
    return false;
  }
  if (s.size == 2) {
    reduce_segment(s, 0, 1);
    return false;
  }
  const Vec2 &a = s.pts[0].w, &b = s.pts[1].w, &c = s.pts[2].w;
  const double area = cross(b - a, c - a);
  if (area != 0.0) {
    const double la = cross(b, c) / area;
    const double lb = cross(c, a) / area;
    const double lc = cross(a, b) / area;
    if (la >= 0.0 && lb >= 0.0 && lc >= 0.0) {
      s.lambda = {la, lb, lc};
      return true;
    }
  }
  // Origin outside: keep the closest edge.
  int best_i = 0, best_j = 1;
  double best = std::numeric_limits<double>::infinity();
  constexpr std::array<std::array<int, 2>, 3> edges{{{0, 1}, {1, 2}, {2, 0}}};
  for (const auto& [i, j] : edges) {
    const double t = segment_origin_param(s.pts[i].w, s.pts[j].w);
    const double d = ((1.0 - t) * s.pts[i].w + t * s.pts[j].w).squaredNorm();
    if (d < best) {
      best = d;
      best_i = i;
      best_j = j;
    }
  }
  reduce_segment(s, best_i, best_j);
  return false;
}

// Andrew's monotone chain; drops collinear points, returns CCW hull.
std::vector<SupportPoint> convex_hull(std::vector<SupportPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const SupportPoint& l, const SupportPoint& r) {
    return l.w.x() < r.w.x() || (l.w.x() == r.w.x() && l.w.y() < r.w.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const SupportPoint& l, const SupportPoint& r) { return l.w == r.w; }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<SupportPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 1].w - hull[k - 2].w, p.w - hull[k - 2].w) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const auto& p = pts[i];
    while (k >= lower && cross(hull[k - 1].w - hull[k - 2].w, p.w - hull[k - 2].w) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

struct EpaResult {
  double depth;
  Vec2 normal;  // outward normal of the Minkowski difference at the closest face
  Vec2 a;
  Vec2 b;
};

EpaResult epa(const ConvexBody& A, const ConvexBody& B, const Simplex& start) {
  std::vector<SupportPoint> seed(start.pts.begin(), start.pts.begin() + start.size);
  for (const Vec2& d : {Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1), Vec2(0, -1), Vec2(1, 1), Vec2(-1, -1),
                        Vec2(1, -1), Vec2(-1, 1)}) {
    seed.push_back(minkowski_support(A, B, d));
  }
  std::vector<SupportPoint> poly = convex_hull(std::move(seed));

  if (poly.size() == 1) {
    // Both bodies collapse to the same point.
    return {0.0, Vec2::UnitX(), poly[0].a, poly[0].b};
  }
  if (poly.size() == 2) {
    // Degenerate difference (a segment through the origin): zero depth.
    const Vec2 e = poly[1].w - poly[0].w;
    const double t = segment_origin_param(poly[0].w, poly[1].w);
    Vec2 n = Vec2(e.y(), -e.x()).normalized();
    return {0.0, n, (1 - t) * poly[0].a + t * poly[1].a, (1 - t) * poly[0].b + t * poly[1].b};
  }

  EpaResult best{};
  for (int iter = 0; iter < gjk::kEpaMaxIterations; ++iter) {
    std::size_t edge = 0;
    double min_dist = std::numeric_limits<double>::infinity();
    Vec2 min_n = Vec2::UnitX();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& p = poly[i].w;
      const Vec2 e = poly[(i + 1) % poly.size()].w - p;
      const double len = e.norm();
      if (len == 0.0) continue;
      const Vec2 n(e.y() / len, -e.x() / len);
      const double dist = n.dot(p);
      if (dist < min_dist) {
        min_dist = dist;
        min_n = n;
        edge = i;
      }
    }
    const std::size_t next = (edge + 1) % poly.size();
    const double t = std::clamp(segment_origin_param(poly[edge].w, poly[next].w), 0.0, 1.0);
    // Foot of the origin on the edge line, clamped to the edge.
    best = {min_dist, min_n, (1 - t) * poly[edge].a + t * poly[next].a, (1 - t) * poly[edge].b + t * poly[next].b};
    const SupportPoint s = minkowski_support(A, B, min_n);
    if (min_n.dot(s.w) - min_dist <= gjk::kEpaTolerance) break;
    bool duplicate = false;
    for (const auto& q : poly) duplicate = duplicate || q.w == s.w;
    if (duplicate) break;
    poly.insert(poly.begin() + static_cast<std::ptrdiff_t>(next), s);
  }
  return best;
}

struct Face {
  Vec2 lo;  // endpoints ordered by tangent coordinate
  Vec2 hi;
  double tlo;
  double thi;
};

// Extreme feature of `body` along `dir` (vertex or parallel edge), as an
// interval in the tangent coordinate.
Face extreme_face(const ConvexBody& body, const Vec2& dir, const Vec2& tangent, double eps) {
  const double top = body.support(dir).dot(dir);
  Face f{Vec2::Zero(), Vec2::Zero(), std::numeric_limits<double>::infinity(),
         -std::numeric_limits<double>::infinity()};
  for (const Vec2& v : body.vertices()) {
    if (v.dot(dir) < top - eps) continue;
    const double t = v.dot(tangent);
    if (t < f.tlo) {
      f.tlo = t;
      f.lo = v;
    }
    if (t > f.thi) {
      f.thi = t;
      f.hi = v;
    }
  }
  return f;
}

Vec2 face_point(const Face& f, double t) {
  if (f.thi - f.tlo <= 0.0) return f.lo;
  const double s = std::clamp((t - f.tlo) / (f.thi - f.tlo), 0.0, 1.0);
  return f.lo + s * (f.hi - f.lo);
}

double extent(const ConvexBody& body) {
  double m = 0.0;
  for (const Vec2& v : body.vertices()) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

// Parallel features give a continuum of witness pairs; pick the midpoint of
// the overlap of the two extreme features.
void midpoint_witnesses(const ConvexBody& a, const ConvexBody& b, SdfResult& r) {
  const Vec2 t = perp(r.normal);
  const double eps = 1e-9 * std::max({1.0, extent(a), extent(b)});
  const Face fa = extreme_face(a, -r.normal, t, eps);
  const Face fb = extreme_face(b, r.normal, t, eps);
  const double lo = std::max(fa.tlo, fb.tlo);
  const double hi = std::min(fa.thi, fb.thi);
  if (lo > hi + eps) return;
  const double mid = 0.5 * (lo + hi);
  r.p1 = face_point(fa, mid);
  r.p2 = face_point(fb, mid);
}

}  // namespace

SdfResult signed_distance(const ConvexBody& a, const ConvexBody& b) {
  Simplex s;
  Vec2 dir = b.vertex(0) - a.vertex(0);
  if (dir.squaredNorm() == 0.0) dir = Vec2::UnitX();
  s.pts[0] = minkowski_support(a, b, -dir);
  s.lambda[0] = 1.0;
  s.size = 1;
  Vec2 v = s.pts[0].w;
  Vec2 last_dir = v;
  bool overlap = false;

  for (int iter = 0; iter < gjk::kMaxIterations; ++iter) {
    const double vnorm = v.norm();
    if (vnorm < gjk::kTolerance) {
      overlap = true;
      break;
    }
    last_dir = v;
    const SupportPoint w = minkowski_support(a, b, -v);
    // Upper bound |v| minus lower bound v.w/|v| on the distance.
    if (vnorm - v.dot(w.w) / vnorm <= gjk::kTolerance) break;
    bool duplicate = false;
    for (int i = 0; i < s.size; ++i) duplicate = duplicate || s.pts[i].w == w.w;
    if (duplicate) break;
    s.pts[s.size++] = w;
    if (solve_simplex(s)) {
      overlap = true;
      break;
    }
    v = s.closest();
  }

  SdfResult r;
  if (!overlap) {
    r.signed_distance = v.norm();
    r.p1 = s.witness_a();
    r.p2 = s.witness_b();
    r.normal = v / r.signed_distance;
    midpoint_witnesses(a, b, r);
    return r;
  }

  const EpaResult e = epa(a, b, s);
  r.normal = -e.normal;
  if (e.depth < gjk::kEpaTolerance) {
    r.signed_distance = 0.0;
    if (!r.normal.allFinite() || r.normal.squaredNorm() == 0.0) {
      r.normal = last_dir.squaredNorm() > 0.0 ? Vec2(last_dir.normalized()) : Vec2::UnitX();
    }
    r.p1 = e.a;
    r.p2 = e.a;
    midpoint_witnesses(a, b, r);
    r.p2 = r.p1;
    return r;
  }
  r.signed_distance = -e.depth;
  r.p1 = e.a;
  r.p2 = e.b;
  midpoint_witnesses(a, b, r);
  return r;
}

}  // namespace vistrack
