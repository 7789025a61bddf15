#include "occshape/sdf.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace occshape {

namespace {
constexpr double kSurfaceEps = 1e-12;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Region tests after Ericson, Real-Time Collision Detection 5.1.5.
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

MeshSdf::MeshSdf(const TriMesh& mesh) {
  require_watertight(mesh);
  tris_.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    tris_.push_back({mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]});
  }
  bounds_ = mesh.bounds();
  inverted_ = mesh.signed_volume() < 0.0;
}

double MeshSdf::winding_number(const Vec3& p) const {
  double total = 0.0;
  for (const auto& t : tris_) {
    const Vec3 a = t.a - p;
    const Vec3 b = t.b - p;
    const Vec3 c = t.c - p;
    const double la = a.norm();
    const double lb = b.norm();
    const double lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * std::numbers::pi);
}

double MeshSdf::unsigned_distance(const Vec3& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : tris_) {
    best = std::min(best, (closest_point_on_triangle(p, t.a, t.b, t.c) - p).squaredNorm());
  }
  return std::sqrt(best);
}

bool MeshSdf::inside(const Vec3& p) const {
  const Vec3 pad = Vec3::Constant(kSurfaceEps);
  if (!Aabb{bounds_.min - pad, bounds_.max + pad}.contains(p)) return inverted_;
  const double w = winding_number(p) + (inverted_ ? 1.0 : 0.0);
  if (std::abs(w - 0.5) < 0.25 && unsigned_distance(p) <= kSurfaceEps) return true;
  return w >= 0.5;
}

double MeshSdf::signed_distance(const Vec3& p) const {
  const double d = unsigned_distance(p);
  if (d <= kSurfaceEps) return 0.0;
  return inside(p) ? -d : d;
}

}  // namespace occshape
