#include "occshape/goals.hpp"

#include <cctype>
#include <algorithm>
#include <cmath>
#include <map>

#include "occshape/dump.hpp"
#include "occshape/sampling.hpp"

namespace occshape {

namespace {

const std::map<char, std::vector<std::string>>& font() {
  static const std::map<char, std::vector<std::string>> f = {
      {'A', {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
      {'H', {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
      {'I', {"#", "#", "#", "#", "#", "#", "#"}},
      {'K', {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
      {'L', {"#....", "#....", "#....", "#....", "#....", "#....", "#####"}},
      {'M', {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
      {'T', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
      {'U', {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
      {'V', {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
      {'X', {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
      {'Y', {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
  };
  return f;
}

constexpr int kFootprint = 24;  // block side in voxels
constexpr int kBlockLayers = 19;
constexpr int kFontColumns = 5;
constexpr int kFontRows = 7;

struct Footprint {
  int i0, j0, k0;
};

Footprint block_footprint(const Workspace& ws) {
  const GridSpec& g = ws.grid;
  return {static_cast<int>(g.dims[0]) / 2 - kFootprint / 2, static_cast<int>(g.dims[1]) / 2 - kFootprint / 2,
          g.locate_unchecked({0.0, 0.0, ws.plane_height + 0.5 * ws.voxel()})[2]};
}

int layers_for(double height, const Workspace& ws) {
  const int n = static_cast<int>(std::lround(height / double(ws.grid.voxel_size.z())));
  if (n < 1) throw InvalidArgument("goal extrusion height must cover at least one voxel layer");
  return n;
}

void fill_column(OccupancyGridBuilder& b, const Index3& base, int layers) {
  const Rgb color = default_color(SemanticClass::Plasticine);
  for (int k = 0; k < layers; ++k) {
    const Index3 idx{base[0], base[1], base[2] + k};
    if (!b.spec().in_range(idx)) throw InvalidArgument("goal does not fit in the workspace grid");
    const auto lin = b.spec().linear(idx);
    b.label(lin, SemanticClass::Plasticine);
    b.set_color(lin, color);
  }
}

}  // namespace

const std::string& supported_letters() {
  static const std::string s = [] {
    std::string out;
    for (const auto& [c, _] : font()) out += c;
    return out;
  }();
  return s;
}

std::vector<std::string> glyph(char letter) {
  const auto it = font().find(static_cast<char>(std::toupper(static_cast<unsigned char>(letter))));
  if (it == font().end()) {
    throw InvalidArgument(std::string("unknown letter '") + letter + "'; supported: " + supported_letters());
  }
  return it->second;
}

Goal gen_goal(const GoalSpec& spec, const Workspace& ws, std::size_t k) {
  Goal g;
  if (spec.source == GoalSource::Dump) {
    g.grid = read_dump(spec.dump_path);
  } else {
    OccupancyGridBuilder b(ws.grid);
    const Footprint fp = block_footprint(ws);
    if (spec.source == GoalSource::Letter) {
      const auto rows = glyph(spec.letter);
      const int gw = static_cast<int>(rows[0].size());
      const int layers = layers_for(spec.height, ws);
      double scale = spec.letter_scale;
      if (scale == 0.0) {
        int cells = 0;
        for (const auto& r : rows) cells += static_cast<int>(std::count(r.begin(), r.end(), '#'));
        const double cell_area = (double(kFootprint) / kFontColumns) * (double(kFootprint) / kFontRows);
        scale = std::sqrt(double(kFootprint * kFootprint) * kBlockLayers / (cells * cell_area * layers));
      }
      if (!(scale > 0)) throw InvalidArgument("letter scale must be positive");
      const double side = kFootprint * scale;
      const double pitch_x = side / kFontColumns;
      const double pitch_y = side / kFontRows;
      const int n = static_cast<int>(std::ceil(side - 1e-9));
      const int i0 = fp.i0 + kFootprint / 2 - n / 2;
      const int j0 = fp.j0 + kFootprint / 2 - n / 2;
      // Box center in voxel units relative to i0/j0.
      const double mid = 0.5 * n;
      for (int j = 0; j < n; ++j) {
        const double yj = side / 2 - (j + 0.5 - mid);
        if (yj < 0 || yj >= side) continue;
        const int row = static_cast<int>(std::floor(yj / pitch_y));
        for (int i = 0; i < n; ++i) {
          const double x = i + 0.5 - mid + 0.5 * gw * pitch_x;
          if (x < 0) continue;
          const int col = static_cast<int>(std::floor(x / pitch_x));
          if (col >= gw || rows[row][col] != '#') continue;
          fill_column(b, {i0 + i, j0 + j, fp.k0}, layers);
        }
      }
    } else {
      if (!(spec.h1 > 0 && spec.h2 > 0)) throw InvalidArgument("stamp layer heights must be positive");
      if (!(spec.top_fraction > 0 && spec.top_fraction <= 1))
        throw InvalidArgument("stamp top fraction must lie in (0, 1]");
      const int n1 = layers_for(spec.h1, ws);
      const int n2 = layers_for(spec.h2, ws);
      const int top = std::max(1, static_cast<int>(std::lround(kFootprint * spec.top_fraction)));
      const int off = (kFootprint - top) / 2;
      for (int j = 0; j < kFootprint; ++j)
        for (int i = 0; i < kFootprint; ++i) {
          fill_column(b, {fp.i0 + i, fp.j0 + j, fp.k0}, n1);
          if (i >= off && i < off + top && j >= off && j < off + top)
            fill_column(b, {fp.i0 + i, fp.j0 + j, fp.k0 + n1}, n2);
        }
    }
    g.grid = std::move(b).build();
  }
  g.dense = occupied_centers(g.grid, SemanticClass::Plasticine);
  if (g.dense.empty()) throw InvalidArgument("goal contains no plasticine voxels");
  g.sampled = fps_downsample(g.dense, std::min(k, g.dense.size()));
  return g;
}

std::vector<std::size_t> layer_counts(const OccupancyGrid& grid) {
  const GridSpec& s = grid.spec();
  std::vector<std::size_t> out(s.dims[2], 0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.occupied(i)) ++out[s.unravel(i)[2]];
  return out;
}

}  // namespace occshape
