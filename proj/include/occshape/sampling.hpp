#pragma once

#include <cstddef>
#include <vector>

#include "occshape/occupancy.hpp"
#include "occshape/voxel_set.hpp"

namespace occshape {

inline constexpr std::size_t kDefaultSampleCount = 300;

struct SeedRule {
  enum class Kind { NearestCentroid, FixedIndex };
  Kind kind = Kind::NearestCentroid;
  std::size_t index = 0;  // candidate index for FixedIndex

  static SeedRule nearest_centroid() { return {}; }
  static SeedRule fixed(std::size_t i) { return {Kind::FixedIndex, i}; }
};

struct FpsResult {
  VoxelSet set;
  std::vector<std::size_t> indices;  // into the candidate list, selection order
  /// Distance of each selected point to the previously chosen set; the seed gets +inf.
  std::vector<double> selection_distance;
};

/// Greedy farthest point sampling over an explicit candidate list. Ties in the
/// max-min distance go to the lowest candidate index.
FpsResult farthest_point_sampling(const VoxelSet& candidates, std::size_t k, SeedRule seed = {});

/// Voxel centers of the given class in linear voxel order.
VoxelSet occupied_centers(const OccupancyGrid& grid, SemanticClass cls);

VoxelSet fps_downsample(const OccupancyGrid& grid, std::size_t k = kDefaultSampleCount,
                        SemanticClass class_filter = SemanticClass::Plasticine, SeedRule seed = {});
VoxelSet fps_downsample(const VoxelSet& set, std::size_t k = kDefaultSampleCount,
                        SemanticClass class_filter = SemanticClass::Plasticine, SeedRule seed = {});

}  // namespace occshape
