#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "occshape/common.hpp"
#include "occshape/mesh.hpp"

namespace occshape {

using Index3 = std::array<int, 3>;

inline constexpr float kDefaultOccupancyThreshold = 0.5f;

/// Voxel lattice geometry. Sizes and origin are stored in single precision,
/// matching the dump format, so a grid survives a write/read cycle unchanged.
struct GridSpec {
  std::array<std::uint32_t, 3> dims{0, 0, 0};
  Eigen::Vector3f voxel_size = Eigen::Vector3f::Zero();
  Eigen::Vector3f origin = Eigen::Vector3f::Zero();  // min corner

  /// 100 x 100 x 40 at 2 mm covering [-0.1, 0.1]^2 x [-0.01, 0.07] m.
  static GridSpec workspace();

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  bool in_range(const Index3& idx) const {
    for (int a = 0; a < 3; ++a)
      if (idx[a] < 0 || idx[a] >= static_cast<int>(dims[a])) return false;
    return true;
  }
  /// x-fastest linear order.
  std::size_t linear(const Index3& idx) const {
    return static_cast<std::size_t>(idx[0]) +
           dims[0] * (static_cast<std::size_t>(idx[1]) + dims[1] * static_cast<std::size_t>(idx[2]));
  }
  Index3 unravel(std::size_t lin) const {
    const auto l = static_cast<std::size_t>(dims[0]);
    const auto w = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(lin % l), static_cast<int>((lin / l) % w), static_cast<int>(lin / (l * w))};
  }
  Vec3 size() const { return voxel_size.cast<double>(); }
  Vec3 min_corner() const { return origin.cast<double>(); }
  Vec3 max_corner() const;
  Aabb bounds() const { return {min_corner(), max_corner()}; }
  /// origin + (idx + 1/2) * voxel_size
  Vec3 center(const Index3& idx) const;
  Vec3 center(std::size_t lin) const { return center(unravel(lin)); }
  /// Voxel containing p (floor of the lattice coordinate); nullopt outside.
  std::optional<Index3> locate(const Vec3& p) const;
  Index3 locate_unchecked(const Vec3& p) const;

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.dims == b.dims && a.voxel_size == b.voxel_size && a.origin == b.origin;
  }
};

class OccupancyGridBuilder;

/// Dense voxel lattice of occupancy probability, semantic class and color.
/// Immutable once built; all transforming operations return a new grid.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;

  const GridSpec& spec() const { return spec_; }
  std::size_t size() const { return cls_.size(); }

  float prob(std::size_t i) const { return prob_[i]; }
  SemanticClass cls(std::size_t i) const { return cls_[i]; }
  Rgb color(std::size_t i) const { return color_[i]; }
  std::span<const float> probs() const { return prob_; }
  std::span<const SemanticClass> classes() const { return cls_; }
  std::span<const Rgb> colors() const { return color_; }

  bool occupied(std::size_t i) const { return cls_[i] != SemanticClass::Empty; }
  std::size_t count(SemanticClass c) const;
  std::size_t occupied_count() const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  friend class OccupancyGridBuilder;
  GridSpec spec_;
  std::vector<float> prob_;
  std::vector<SemanticClass> cls_;
  std::vector<Rgb> color_;
};

class OccupancyGridBuilder {
 public:
  /// All voxels Empty with probability 0 and black color.
  explicit OccupancyGridBuilder(const GridSpec& spec);
  explicit OccupancyGridBuilder(OccupancyGrid grid);

  const GridSpec& spec() const { return grid_.spec_; }
  SemanticClass cls(std::size_t i) const { return grid_.cls_[i]; }
  float prob(std::size_t i) const { return grid_.prob_[i]; }
  Rgb color(std::size_t i) const { return grid_.color_[i]; }

  /// Unconditional write; prob must lie in [0, 1].
  void set(std::size_t i, SemanticClass c, float prob, Rgb color);
  void set_color(std::size_t i, Rgb color) { grid_.color_[i] = color; }
  void clear(std::size_t i);
  /// Precedence-respecting label write (probability 1). Returns true if written.
  bool label(std::size_t i, SemanticClass c);

  OccupancyGrid build() &&;
  const OccupancyGrid& view() const { return grid_; }

 private:
  OccupancyGrid grid_;
};

/// Voxels whose centers satisfy SDF <= 0 become occupied with `label`; all
/// others stay Empty. The grid must cover the mesh bounding box.
OccupancyGrid voxelize_mesh(const TriMesh& mesh, const GridSpec& spec, SemanticClass label);

/// Applies a mesh label to an existing grid under label precedence. Voxels
/// outside the grid are ignored. Returns the number of voxels written.
std::size_t label_mesh(OccupancyGridBuilder& grid, const TriMesh& mesh, SemanticClass label);

/// Operating plane as a one-voxel thin shell of footprint size.x by size.y,
/// thickness size.z, whose top face sits at top_z.
struct PlaneSpec {
  Vec2 center = Vec2::Zero();
  Vec3 size{1.0, 1.0, 0.002};
  double top_z = 0.0;
};

/// Throws ConfigError unless size.z equals the grid's voxel height.
OccupancyGrid label_plane(const OccupancyGrid& grid, const PlaneSpec& plane);

struct ColorAssignment {
  OccupancyGrid grid;
  std::size_t colored = 0;
  /// Voxels where no axis ray hit the mesh; they carry the class default color.
  std::vector<std::size_t> flagged;
};

/// Colors each occupied voxel (optionally of one class only) with the mean of
/// the mesh colors found by casting the voxel center along +-x, +-y, +-z onto
/// the mesh. Missing hits are excluded from the mean.
ColorAssignment assign_colors(const OccupancyGrid& grid, const TriMesh& mesh,
                              std::optional<SemanticClass> only = std::nullopt);

/// Empties voxels whose center lies outside roi and voxels below theta.
OccupancyGrid threshold_and_crop(const OccupancyGrid& grid, float theta, const Aabb& roi);

/// Half-open voxel index range whose centers lie inside roi.
std::pair<Index3, Index3> roi_index_range(const GridSpec& spec, const Aabb& roi);

/// [-0.1, 0.1] m in x and y, [-0.01, 0.07] m in z.
Aabb prediction_range();

}  // namespace occshape
