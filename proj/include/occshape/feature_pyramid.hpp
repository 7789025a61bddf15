#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "occshape/occupancy.hpp"

namespace occshape {

/// Dense lattice of feature vectors, voxel-major in x-fastest order with the
/// components of one voxel contiguous.
struct FeatureLattice {
  std::array<std::uint32_t, 3> dims{0, 0, 0};
  std::uint32_t feature_dim = 0;
  std::vector<float> data;

  std::size_t cell_count() const { return std::size_t(dims[0]) * dims[1] * dims[2]; }
  std::size_t offset(const Index3& c) const {
    return (std::size_t(c[0]) + dims[0] * (std::size_t(c[1]) + dims[1] * std::size_t(c[2]))) * feature_dim;
  }
  std::span<const float> at(const Index3& c) const { return {data.data() + offset(c), feature_dim}; }
  std::span<float> at(const Index3& c) { return {data.data() + offset(c), feature_dim}; }
  bool in_range(const Index3& c) const {
    for (int a = 0; a < 3; ++a)
      if (c[a] < 0 || c[a] >= static_cast<int>(dims[a])) return false;
    return true;
  }
  friend bool operator==(const FeatureLattice&, const FeatureLattice&) = default;
};

inline constexpr std::array<int, 4> kLevelStrides = {1, 2, 4, 8};
inline constexpr int kBevStride = 2;

/// F1..F4 at strides 1, 2, 4, 8 over the base grid plus a bird's-eye-view
/// lattice at stride 2 in x and y (stored with H = 1).
struct FeaturePyramid {
  std::array<FeatureLattice, 4> levels;
  FeatureLattice bev;

  friend bool operator==(const FeaturePyramid&, const FeaturePyramid&) = default;
};

std::array<std::uint32_t, 3> level_dims(const GridSpec& base, int stride);
std::array<std::uint32_t, 3> bev_dims(const GridSpec& base);

/// Throws InvalidArgument when level dimensions do not match the base grid.
void validate_pyramid(const FeaturePyramid& pyr, const GridSpec& base);

using FeatureFn = std::function<float(int level, const Index3& cell, std::uint32_t component)>;
/// Level 4 denotes the BEV lattice (cell z is 0).
FeaturePyramid make_pyramid(const GridSpec& base, const std::array<std::uint32_t, 5>& feature_dims,
                            const FeatureFn& fn);

struct StridedFeatures {
  std::array<Index3, 3> cells;  // F4, F3, F2 cells
  std::array<std::span<const float>, 3> features;
};

/// Level cell = floor(index / stride) for F4, F3, F2.
StridedFeatures strided_lookup(const FeaturePyramid& pyr, const GridSpec& base, const Index3& voxel);

struct BevSample {
  std::vector<double> feature;
  bool clamped = false;  // query fell outside the hull of BEV cell centers
};

/// Bilinear interpolation over the four enclosing BEV cell centers.
BevSample bev_lookup(const FeatureLattice& bev, const GridSpec& base, const Vec2& xy);

struct StateGraph;

/// Rows f = [f4, f3, f2, f_bev] per graph vertex.
Eigen::MatrixXd aggregate_node_features(const FeaturePyramid& pyr, const GridSpec& base,
                                        const StateGraph& graph);

/// FPY1 serialization of an arbitrary lattice list.
std::vector<std::uint8_t> encode_lattices(std::span<const FeatureLattice> lattices);
std::vector<FeatureLattice> decode_lattices(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_pyramid(const FeaturePyramid& pyr);
/// Expects five entries with the BEV last.
FeaturePyramid decode_pyramid(std::span<const std::uint8_t> bytes);
void write_pyramid(const FeaturePyramid& pyr, const std::string& path);
FeaturePyramid read_pyramid(const std::string& path);

}  // namespace occshape
