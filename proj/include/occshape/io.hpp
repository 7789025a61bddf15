#pragma once

#include <string>
#include <vector>

#include "occshape/mesh.hpp"
#include "occshape/voxel_set.hpp"

namespace occshape {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// CSV with header `x,y,z,r,g,b`; coordinates in meters.
std::string format_csv(const VoxelSet& set);
void write_csv(const VoxelSet& set, const std::string& path);
/// Accepts rows of x,y,z or x,y,z,r,g,b, with or without a header line.
VoxelSet parse_csv(const std::string& text);
VoxelSet read_csv(const std::string& path);

/// ASCII PLY holding vertices with optional red/green/blue and optional faces.
struct PlyData {
  std::vector<Vec3> vertices;
  std::vector<Rgb> colors;  // empty when the file has no color properties
  std::vector<std::array<std::uint32_t, 3>> faces;
};

std::string format_ply(const PlyData& ply);
PlyData parse_ply(const std::string& text);
void write_ply(const PlyData& ply, const std::string& path);
PlyData read_ply(const std::string& path);

TriMesh mesh_from_ply(const PlyData& ply);
PlyData ply_from_mesh(const TriMesh& mesh);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace occshape
