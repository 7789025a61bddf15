#include "occshape/sampling.hpp"

#include <cmath>
#include <limits>

#include "occshape/kdtree.hpp"

namespace occshape {

FpsResult farthest_point_sampling(const VoxelSet& candidates, std::size_t k, SeedRule seed) {
  const std::size_t n = candidates.size();
  if (k < 1) throw InvalidArgument("sample count must be at least 1");
  if (n < k) {
    throw InvalidArgument("farthest point sampling needs " + std::to_string(k) +
                          " candidates but only " + std::to_string(n) + " are available");
  }
  std::size_t first = 0;
  if (seed.kind == SeedRule::Kind::FixedIndex) {
    if (seed.index >= n) throw InvalidArgument("seed index out of range");
    first = seed.index;
  } else {
    const Vec3 c = candidates.centroid();
    first = nearest_naive(candidates.points, c).index;
  }

  FpsResult out;
  out.indices.reserve(k);
  out.selection_distance.reserve(k);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::size_t current = first;
  double current_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t step = 0; step < k; ++step) {
    out.indices.push_back(current);
    out.selection_distance.push_back(std::sqrt(current_d2));
    const Vec3& p = candidates.points[current];
    std::size_t next = 0;
    double next_d2 = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d2 = sq_dist(p, candidates.points[i]);
      if (d2 < min_d2[i]) min_d2[i] = d2;
      if (min_d2[i] > next_d2) {
        next_d2 = min_d2[i];
        next = i;
      }
    }
    current = next;
    current_d2 = next_d2;
  }
  out.set.reserve(k);
  for (auto i : out.indices) {
    out.set.push_back(candidates.points[i], candidates.colors.empty() ? Rgb{} : candidates.colors[i],
                      candidates.classes.empty() ? SemanticClass::Plasticine : candidates.classes[i]);
  }
  return out;
}

VoxelSet occupied_centers(const OccupancyGrid& grid, SemanticClass cls) {
  VoxelSet s;
  const GridSpec& spec = grid.spec();
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.cls(i) == cls) s.push_back(spec.center(i), grid.color(i), cls);
  return s;
}

VoxelSet fps_downsample(const OccupancyGrid& grid, std::size_t k, SemanticClass class_filter,
                        SeedRule seed) {
  return farthest_point_sampling(occupied_centers(grid, class_filter), k, seed).set;
}

VoxelSet fps_downsample(const VoxelSet& set, std::size_t k, SemanticClass class_filter, SeedRule seed) {
  VoxelSet filtered;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto c = set.classes.empty() ? SemanticClass::Plasticine : set.classes[i];
    if (c == class_filter)
      filtered.push_back(set.points[i], set.colors.empty() ? Rgb{} : set.colors[i], c);
  }
  return farthest_point_sampling(filtered, k, seed).set;
}

}  // namespace occshape
