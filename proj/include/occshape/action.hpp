#pragma once

#include <string>

#include "occshape/common.hpp"

namespace occshape {

/// Keeps rz in (-pi/2, pi/2]; a grasp line is undirected.
double normalize_rz(double rz);

/// One pinch: fingers centered on (x, y, z), grasp line at angle rz about z,
/// closing from width l to l_end.
struct GripperAction {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double rz = 0.0;
  double l = 0.0;
  double l_end = 0.0;

  Vec3 center() const { return {x, y, z}; }
  /// Unit vector from FingerA toward FingerB.
  Vec3 direction() const;
  /// FingerA (right finger, p_r) at the given opening width.
  Vec3 finger_a(double width) const;
  /// FingerB (left finger, p_l) at the given opening width.
  Vec3 finger_b(double width) const;

  /// Reconstructs the pose from two finger centers at opening width |p_l - p_r|.
  static GripperAction from_fingers(const Vec3& p_r, const Vec3& p_l, double l_end);

  std::string describe() const;
  friend bool operator==(const GripperAction&, const GripperAction&) = default;
};

/// Vertical capsule: a segment of length `length - 2 radius` centered on
/// `center`, dilated by `radius`. `length` is tip to tip.
struct Capsule {
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double radius = 0.0;
  double length = 0.0;

  double half_segment() const { return 0.5 * length - radius; }
  Vec3 segment_a() const { return center - half_segment() * axis; }
  Vec3 segment_b() const { return center + half_segment() * axis; }
  double axis_distance(const Vec3& p) const;
  bool contains_strict(const Vec3& p) const { return axis_distance(p) < radius; }
};

Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b);

}  // namespace occshape
