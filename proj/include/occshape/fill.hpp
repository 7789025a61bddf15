#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occshape/mesh.hpp"
#include "occshape/occupancy.hpp"

namespace occshape {

struct FillConfig {
  /// Voxel pitch of the fill lattice and the point its corners are aligned to.
  double voxel_size = 0.002;
  Vec3 alignment = Vec3::Zero();
  /// Voxels whose center lies within r_fill of a sample join the surface band,
  /// as does every voxel that contains a sample.
  double r_fill = 0.002;
  /// Dilations (then as many erosions) with the 3x3x3 cube.
  int close_iters = 2;
};

/// Dense binary solid on a padded lattice around the input samples.
struct FilledSolid {
  Index3 dims{0, 0, 0};
  Vec3 origin = Vec3::Zero();  // min corner of voxel (0, 0, 0)
  double voxel_size = 0.0;
  std::vector<std::uint8_t> band;   // surface band before closing
  std::vector<std::uint8_t> solid;  // after closing and interior fill
  /// The exterior flood reached every voxel outside the closed band, so no
  /// enclosed interior was added; `solid` is the closed band alone.
  bool surface_only = false;

  std::size_t linear(const Index3& i) const {
    return static_cast<std::size_t>(i[0]) +
           static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(i[1]) +
                                                static_cast<std::size_t>(dims[1]) * i[2]);
  }
  bool in_range(const Index3& i) const {
    for (int a = 0; a < 3; ++a)
      if (i[a] < 0 || i[a] >= dims[a]) return false;
    return true;
  }
  bool at(const Index3& i) const { return in_range(i) && solid[linear(i)] != 0; }
  Vec3 center(const Index3& i) const {
    return origin + voxel_size * Vec3(i[0] + 0.5, i[1] + 0.5, i[2] + 0.5);
  }
  /// Lattice index of the voxel containing p (may be out of range).
  Index3 locate(const Vec3& p) const;
  std::size_t count() const;
  /// Centers of all solid voxels in linear order.
  std::vector<Vec3> solid_centers() const;
};

/// Band, morphological closing, then exterior flood fill from the lattice
/// shell; everything not reached from outside is solid.
FilledSolid fill_watertight(std::span<const Vec3> points, const FillConfig& cfg);

/// Adds voxels until no two solid voxels meet along an edge alone, so the
/// extracted boundary has every edge shared by exactly two faces.
/// Returns the number of voxels added.
std::size_t repair_edge_contacts(FilledSolid& solid);

struct SurfaceOptions {
  /// Move each boundary vertex onto its nearest sample when one lies within
  /// `snap_limit`; pulls the blocky boundary onto the sampled surface.
  bool snap = true;
  double snap_limit = 0.006;
};

/// Outward-oriented boundary faces of the solid, two triangles per exposed
/// voxel face, corners shared. Vertex colors come from the nearest sample.
/// The solid is edge-repaired first.
TriMesh extract_surface(FilledSolid solid, std::span<const Vec3> samples = {},
                        std::span<const Rgb> colors = {}, const SurfaceOptions& opt = {});

}  // namespace occshape
