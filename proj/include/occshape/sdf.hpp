#pragma once

#include <vector>

#include "occshape/mesh.hpp"

namespace occshape {

/// Exact signed distance to a closed triangle mesh. Magnitude is the distance to
/// the closest triangle; the sign comes from the generalized winding number, so
/// meshes with slightly inconsistent geometry still classify robustly. A mesh
/// whose total signed volume is negative is treated as bounding the unbounded
/// complement (winding offset by one), which makes face flipping invert the
/// inside/outside partition.
class MeshSdf {
 public:
  explicit MeshSdf(const TriMesh& mesh);

  double winding_number(const Vec3& p) const;
  double unsigned_distance(const Vec3& p) const;
  /// Negative inside, positive outside, zero on the surface.
  double signed_distance(const Vec3& p) const;
  /// True when signed_distance(p) <= 0.
  bool inside(const Vec3& p) const;

  bool inverted() const { return inverted_; }
  const Aabb& bounds() const { return bounds_; }

 private:
  struct Tri {
    Vec3 a, b, c;
  };
  std::vector<Tri> tris_;
  Aabb bounds_;
  bool inverted_ = false;
};

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace occshape
