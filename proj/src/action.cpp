#include "occshape/action.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "occshape/io.hpp"

namespace occshape {

double normalize_rz(double rz) {
  constexpr double pi = std::numbers::pi;
  double r = std::fmod(rz, pi);
  if (r <= -pi / 2) r += pi;
  if (r > pi / 2) r -= pi;
  return r;
}

Vec3 GripperAction::direction() const { return {std::cos(rz), std::sin(rz), 0.0}; }
Vec3 GripperAction::finger_a(double width) const { return center() - 0.5 * width * direction(); }
Vec3 GripperAction::finger_b(double width) const { return center() + 0.5 * width * direction(); }

GripperAction GripperAction::from_fingers(const Vec3& p_r, const Vec3& p_l, double l_end) {
  if (p_r.z() != p_l.z()) throw InvalidArgument("finger centers must share one height");
  GripperAction a;
  a.x = 0.5 * (p_r.x() + p_l.x());
  a.y = 0.5 * (p_r.y() + p_l.y());
  a.z = p_r.z();
  const Vec2 d = (p_l - p_r).head<2>();
  a.l = d.norm();
  a.rz = normalize_rz(std::atan2(d.y(), d.x()));
  a.l_end = l_end;
  return a;
}

std::string GripperAction::describe() const {
  return "x=" + format_double(x) + " y=" + format_double(y) + " z=" + format_double(z) +
         " rz=" + format_double(rz) + " l=" + format_double(l) + " l_end=" + format_double(l_end);
}

Vec3 closest_point_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

double Capsule::axis_distance(const Vec3& p) const {
  return (p - closest_point_on_segment(p, segment_a(), segment_b())).norm();
}

}  // namespace occshape
