#include "occshape/state_graph.hpp"

#include <algorithm>

#include "occshape/kdtree.hpp"

namespace occshape {

std::string_view to_string(Relation r) {
  return r == Relation::Internal ? "internal" : "finger_to_object";
}

StateGraph build_graph(const VoxelSet& state, const VoxelSet& fingers, double r_nbr,
                       const std::vector<std::vector<Vec3>>& history) {
  if (state.empty()) throw InvalidArgument("state graph needs a non-empty state");
  if (!(r_nbr > 0.0)) throw InvalidArgument("neighbor radius must be positive");
  StateGraph g;
  g.object_count = state.size();
  g.vertices.reserve(state.size() + fingers.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto c = state.classes.empty() ? SemanticClass::Plasticine : state.classes[i];
    if (is_finger(c)) throw InvalidArgument("state point " + std::to_string(i) + " carries a finger class");
    g.vertices.push_back(state.points[i], state.colors.empty() ? Rgb{} : state.colors[i], c);
  }
  for (std::size_t i = 0; i < fingers.size(); ++i) {
    const auto c = fingers.classes.empty() ? SemanticClass::FingerA : fingers.classes[i];
    if (!is_finger(c)) throw InvalidArgument("finger point " + std::to_string(i) + " lacks a finger class");
    g.vertices.push_back(fingers.points[i], fingers.colors.empty() ? default_color(c) : fingers.colors[i], c);
  }

  const auto& pts = g.vertices.points;
  const std::size_t n = pts.size();
  const double r2 = r_nbr * r_nbr;
  auto finger = [&](std::size_t i) { return i >= g.object_count; };
  auto add = [&](std::size_t recv, std::size_t send) {
    if (recv == send || (finger(recv) && finger(send))) return;
    const Relation rel = finger(recv) != finger(send) ? Relation::FingerToObject : Relation::Internal;
    g.edges.push_back({static_cast<std::uint32_t>(recv), static_cast<std::uint32_t>(send), rel});
  };
  if (n <= kNaiveSearchLimit) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (sq_dist(pts[i], pts[j]) <= r2) add(i, j);
  } else {
    const KdTree tree(pts);
    for (std::size_t i = 0; i < n; ++i)
      for (auto j : tree.within(pts[i], r2)) add(i, j);
  }

  for (std::size_t f = 0; f < history.size() && f < kHistoryFrames; ++f) {
    if (history[f].size() != n)
      throw InvalidArgument("history frame " + std::to_string(f) + " has " + std::to_string(history[f].size()) +
                            " positions, expected " + std::to_string(n));
    g.history[f] = history[f];
  }
  const std::size_t given = std::min(history.size(), kHistoryFrames);
  for (std::size_t f = given; f < kHistoryFrames; ++f) g.history[f] = given == 0 ? pts : g.history[given - 1];
  return g;
}

}  // namespace occshape
