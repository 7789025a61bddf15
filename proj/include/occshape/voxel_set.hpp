#pragma once

#include <vector>

#include "occshape/common.hpp"

namespace occshape {

/// Ordered sparse point set with per-point color and class.
struct VoxelSet {
  std::vector<Vec3> points;
  std::vector<Rgb> colors;
  std::vector<SemanticClass> classes;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void push_back(const Vec3& p, Rgb c = {}, SemanticClass cls = SemanticClass::Plasticine) {
    points.push_back(p);
    colors.push_back(c);
    classes.push_back(cls);
  }
  void reserve(std::size_t n) {
    points.reserve(n);
    colors.reserve(n);
    classes.reserve(n);
  }
  Vec3 centroid() const;
  /// Builds a set from bare positions with the given class and default color.
  static VoxelSet from_points(std::vector<Vec3> pts, SemanticClass cls = SemanticClass::Plasticine);
};

}  // namespace occshape
