#include "occshape/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace occshape {

namespace {
constexpr std::size_t kLeafSize = 8;

bool better(double d2, std::size_t idx, const Neighbor& best) {
  return d2 < best.sq_distance || (d2 == best.sq_distance && idx < best.index);
}
}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : pts_(points.begin(), points.end()) {
  if (pts_.empty()) throw InvalidArgument("kd-tree over an empty point set");
  order_.resize(pts_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * pts_.size() / kLeafSize + 1);
  build(0, pts_.size(), 0);
}

int KdTree::build(std::size_t begin, std::size_t end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, begin, end, -1, -1});
  if (end - begin <= kLeafSize) return id;
  Vec3 lo = pts_[order_[begin]], hi = lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(pts_[order_[i]]);
    hi = hi.cwiseMax(pts_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident
  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) { return pts_[a][axis] < pts_[b][axis]; });
  const double split = pts_[order_[mid]][axis];
  (void)depth;
  const int l = build(begin, mid, depth + 1);
  const int r = build(mid, end, depth + 1);
  Node& n = nodes_[id];
  n.axis = axis;
  n.split = split;
  n.left = l;
  n.right = r;
  return id;
}

// Left subtree holds coordinates <= split, right holds >= split.
void KdTree::nearest_rec(int id, const Vec3& q, Neighbor& best) const {
  const Node& n = nodes_[id];
  if (n.axis < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const std::size_t idx = order_[i];
      const double d2 = sq_dist(q, pts_[idx]);
      if (better(d2, idx, best)) best = {idx, d2};
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const int near = diff <= 0 ? n.left : n.right;
  const int far = diff <= 0 ? n.right : n.left;
  nearest_rec(near, q, best);
  // Plane distance is a lower bound; only a strictly larger bound is safe
  // to prune so equal-distance candidates with lower indices are still seen.
  if (diff * diff <= best.sq_distance) nearest_rec(far, q, best);
}

Neighbor KdTree::nearest(const Vec3& q) const {
  Neighbor best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
  nearest_rec(0, q, best);
  return best;
}

void KdTree::within_rec(int id, const Vec3& q, double r2, std::vector<std::size_t>& out) const {
  const Node& n = nodes_[id];
  if (n.axis < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i)
      if (sq_dist(q, pts_[order_[i]]) <= r2) out.push_back(order_[i]);
    return;
  }
  const double diff = q[n.axis] - n.split;
  if (diff <= 0 || diff * diff <= r2) within_rec(n.left, q, r2, out);
  if (diff >= 0 || diff * diff <= r2) within_rec(n.right, q, r2, out);
}

std::vector<std::size_t> KdTree::within(const Vec3& q, double r2) const {
  std::vector<std::size_t> out;
  within_rec(0, q, r2, out);
  std::sort(out.begin(), out.end());
  return out;
}

Neighbor nearest_naive(std::span<const Vec3> points, const Vec3& q) {
  if (points.empty()) throw InvalidArgument("nearest neighbor in an empty set");
  Neighbor best{0, sq_dist(q, points[0])};
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d2 = sq_dist(q, points[i]);
    if (d2 < best.sq_distance) best = {i, d2};
  }
  return best;
}

std::vector<Neighbor> nearest_all(std::span<const Vec3> queries, std::span<const Vec3> target) {
  std::vector<Neighbor> out(queries.size());
  if (std::max(queries.size(), target.size()) <= kNaiveSearchLimit) {
    for (std::size_t i = 0; i < queries.size(); ++i) out[i] = nearest_naive(target, queries[i]);
  } else {
    const KdTree tree(target);
    for (std::size_t i = 0; i < queries.size(); ++i) out[i] = tree.nearest(queries[i]);
  }
  return out;
}

}  // namespace occshape
