#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "occshape/voxel_set.hpp"

namespace occshape {

inline constexpr double kDefaultNeighborRadius = 0.009;
inline constexpr std::size_t kHistoryFrames = 3;

enum class Relation : std::uint8_t { Internal = 0, FingerToObject = 1 };
std::string_view to_string(Relation r);

struct Edge {
  std::uint32_t receiver = 0;
  std::uint32_t sender = 0;
  Relation relation = Relation::Internal;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct StateGraph {
  VoxelSet vertices;         // object points first, then finger points
  std::size_t object_count = 0;
  std::vector<Edge> edges;   // receiver-major, then sender
  /// Previous vertex positions, most recent first.
  std::array<std::vector<Vec3>, kHistoryFrames> history;
};

/// Radius graph over state + finger points. Finger-finger pairs get no edge.
/// `history` lists earlier frames most recent first; missing frames repeat
/// the oldest supplied frame, or the current positions if none are given.
StateGraph build_graph(const VoxelSet& state, const VoxelSet& fingers,
                       double r_nbr = kDefaultNeighborRadius,
                       const std::vector<std::vector<Vec3>>& history = {});

}  // namespace occshape
