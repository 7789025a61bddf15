#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "occshape/common.hpp"

namespace occshape {

/// Squared Euclidean distance. Every nearest-neighbor path uses this exact
/// expression so indexed and brute-force searches agree bit for bit.
inline double sq_dist(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

struct Neighbor {
  std::size_t index = 0;
  double sq_distance = 0.0;
};

/// Static 3D kd-tree. Nearest queries return the minimum of
/// (squared distance, index) in lexicographic order, i.e. the same point a
/// linear scan with lowest-index tie-breaking would return.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  Neighbor nearest(const Vec3& q) const;
  /// Indices with squared distance <= r2, ascending.
  std::vector<std::size_t> within(const Vec3& q, double r2) const;

  std::size_t size() const { return pts_.size(); }

 private:
  struct Node {
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::size_t begin = 0, end = 0;
    int left = -1, right = -1;
  };
  int build(std::size_t begin, std::size_t end, int depth);
  void nearest_rec(int node, const Vec3& q, Neighbor& best) const;
  void within_rec(int node, const Vec3& q, double r2, std::vector<std::size_t>& out) const;

  std::vector<Vec3> pts_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Linear scan with the same tie rule as KdTree::nearest.
Neighbor nearest_naive(std::span<const Vec3> points, const Vec3& q);

/// Nearest point of `target` for every query; indexed above 256 points.
std::vector<Neighbor> nearest_all(std::span<const Vec3> queries, std::span<const Vec3> target);

inline constexpr std::size_t kNaiveSearchLimit = 256;

}  // namespace occshape
