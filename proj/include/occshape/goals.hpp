#pragma once

#include <string>
#include <vector>

#include "occshape/dynamics.hpp"
#include "occshape/occupancy.hpp"
#include "occshape/voxel_set.hpp"

namespace occshape {

enum class GoalSource { Letter, Dump, Stamp };

struct GoalSpec {
  GoalSource source = GoalSource::Letter;
  char letter = 'X';
  std::string dump_path;
  /// Letter extrusion height; the default matches the 19-layer block.
  double height = 0.038;
  /// Side of the letter's square box relative to the block footprint. Zero
  /// picks the scale whose extruded volume equals the block volume.
  double letter_scale = 0.0;
  /// Layered stamp: bottom layer over the full block footprint, top layer
  /// over a centered square covering `top_fraction` of its side.
  double h1 = 0.02;
  double h2 = 0.01;
  double top_fraction = 0.5;
};

struct Goal {
  OccupancyGrid grid;
  VoxelSet dense;    // every goal voxel center
  VoxelSet sampled;  // FPS samples for planning
};

/// Letters of the built-in 5 x 7 font.
const std::string& supported_letters();
/// Rows top to bottom; '#' marks a filled cell.
std::vector<std::string> glyph(char letter);

Goal gen_goal(const GoalSpec& spec, const Workspace& ws = {}, std::size_t k = 300);

/// Occupied voxel count per z layer.
std::vector<std::size_t> layer_counts(const OccupancyGrid& grid);

}  // namespace occshape
