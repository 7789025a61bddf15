#include "occshape/fill.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "occshape/kdtree.hpp"

namespace occshape {

Index3 FilledSolid::locate(const Vec3& p) const {
  Index3 out;
  for (int a = 0; a < 3; ++a) out[a] = static_cast<int>(std::floor((p[a] - origin[a]) / voxel_size));
  return out;
}

std::size_t FilledSolid::count() const {
  return static_cast<std::size_t>(std::count(solid.begin(), solid.end(), std::uint8_t{1}));
}

std::vector<Vec3> FilledSolid::solid_centers() const {
  std::vector<Vec3> out;
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i)
        if (solid[linear({i, j, k})]) out.push_back(center({i, j, k}));
  return out;
}

namespace {

// One pass of a 3-wide max (dilate) or min (erode) filter along every axis.
void cube_filter(std::vector<std::uint8_t>& v, const Index3& d, bool dilate) {
  std::vector<std::uint8_t> tmp(v.size());
  const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(d[0]),
                                          static_cast<std::size_t>(d[0]) * d[1]};
  for (int a = 0; a < 3; ++a) {
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i) {
          const Index3 idx{i, j, k};
          const std::size_t lin = i + stride[1] * j + stride[2] * k;
          std::uint8_t r = v[lin];
          for (int s : {-1, 1}) {
            const int n = idx[a] + s;
            const std::uint8_t nb = (n < 0 || n >= d[a]) ? 0 : v[lin + s * static_cast<std::ptrdiff_t>(stride[a])];
            r = dilate ? std::max(r, nb) : std::min(r, nb);
          }
          tmp[lin] = r;
        }
    v.swap(tmp);
  }
}

}  // namespace

FilledSolid fill_watertight(std::span<const Vec3> points, const FillConfig& cfg) {
  if (points.empty()) throw InvalidArgument("fill needs at least one point");
  if (!(cfg.voxel_size > 0)) throw InvalidArgument("fill voxel size must be positive");
  if (!(cfg.r_fill >= 0)) throw InvalidArgument("fill radius must be nonnegative");
  if (cfg.close_iters < 0) throw InvalidArgument("closing iterations must be nonnegative");

  const double s = cfg.voxel_size;
  Vec3 lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const int reach = static_cast<int>(std::ceil(cfg.r_fill / s));
  const int pad = reach + cfg.close_iters + 2;
  FilledSolid out;
  out.voxel_size = s;
  for (int a = 0; a < 3; ++a) {
    const int i_lo = static_cast<int>(std::floor((lo[a] - cfg.alignment[a]) / s)) - pad;
    const int i_hi = static_cast<int>(std::floor((hi[a] - cfg.alignment[a]) / s)) + pad;
    out.origin[a] = cfg.alignment[a] + i_lo * s;
    out.dims[a] = i_hi - i_lo + 1;
  }
  const std::size_t n = static_cast<std::size_t>(out.dims[0]) * out.dims[1] * out.dims[2];
  out.band.assign(n, 0);

  const double r2 = cfg.r_fill * cfg.r_fill;
  for (const auto& p : points) {
    const Index3 c = out.locate(p);
    out.band[out.linear(c)] = 1;
    for (int dz = -reach; dz <= reach; ++dz)
      for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
          const Index3 q{c[0] + dx, c[1] + dy, c[2] + dz};
          if ((out.center(q) - p).squaredNorm() <= r2) out.band[out.linear(q)] = 1;
        }
  }

  std::vector<std::uint8_t> closed = out.band;
  for (int i = 0; i < cfg.close_iters; ++i) cube_filter(closed, out.dims, true);
  for (int i = 0; i < cfg.close_iters; ++i) cube_filter(closed, out.dims, false);

  // Flood the exterior through non-solid voxels (6-connected) from the shell.
  std::vector<std::uint8_t> outside(n, 0);
  std::deque<Index3> queue;
  auto seed = [&](const Index3& q) {
    const std::size_t l = out.linear(q);
    if (!closed[l] && !outside[l]) {
      outside[l] = 1;
      queue.push_back(q);
    }
  };
  for (int k = 0; k < out.dims[2]; ++k)
    for (int j = 0; j < out.dims[1]; ++j)
      for (int i = 0; i < out.dims[0]; ++i)
        if (i == 0 || j == 0 || k == 0 || i == out.dims[0] - 1 || j == out.dims[1] - 1 || k == out.dims[2] - 1)
          seed({i, j, k});
  static constexpr int kSteps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!queue.empty()) {
    const Index3 q = queue.front();
    queue.pop_front();
    for (const auto& st : kSteps) {
      const Index3 nb{q[0] + st[0], q[1] + st[1], q[2] + st[2]};
      if (out.in_range(nb)) seed(nb);
    }
  }
  out.solid.resize(n);
  std::size_t closed_count = 0, solid_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.solid[i] = outside[i] ? 0 : 1;
    closed_count += closed[i];
    solid_count += out.solid[i];
  }
  out.surface_only = solid_count == closed_count;
  return out;
}

std::size_t repair_edge_contacts(FilledSolid& s) {
  std::size_t added = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int a = 0; a < 3; ++a) {
      const int u = (a + 1) % 3, v = (a + 2) % 3;
      for (int k = 0; k < s.dims[2]; ++k)
        for (int j = 0; j < s.dims[1]; ++j)
          for (int i = 0; i < s.dims[0]; ++i) {
            Index3 p00{i, j, k};
            if (p00[u] + 1 >= s.dims[u] || p00[v] + 1 >= s.dims[v]) continue;
            Index3 p10 = p00, p01 = p00, p11 = p00;
            p10[u] += 1;
            p01[v] += 1;
            p11[u] += 1;
            p11[v] += 1;
            const bool s00 = s.at(p00), s10 = s.at(p10), s01 = s.at(p01), s11 = s.at(p11);
            if (s00 && s11 && !s10 && !s01) {
              s.solid[s.linear(p10)] = 1;
            } else if (s10 && s01 && !s00 && !s11) {
              s.solid[s.linear(p00)] = 1;
            } else {
              continue;
            }
            ++added;
            changed = true;
          }
    }
  }
  return added;
}

TriMesh extract_surface(FilledSolid s, std::span<const Vec3> samples, std::span<const Rgb> colors,
                        const SurfaceOptions& opt) {
  if (!colors.empty() && colors.size() != samples.size())
    throw InvalidArgument("sample colors must match the samples");
  repair_edge_contacts(s);
  TriMesh mesh;
  const Index3 cd{s.dims[0] + 1, s.dims[1] + 1, s.dims[2] + 1};
  std::vector<std::int64_t> corner_id(static_cast<std::size_t>(cd[0]) * cd[1] * cd[2], -1);
  auto vertex = [&](const Index3& c) {
    const std::size_t l = c[0] + static_cast<std::size_t>(cd[0]) * (c[1] + static_cast<std::size_t>(cd[1]) * c[2]);
    if (corner_id[l] < 0) {
      corner_id[l] = static_cast<std::int64_t>(mesh.vertices.size());
      mesh.vertices.push_back(s.origin + s.voxel_size * Vec3(c[0], c[1], c[2]));
    }
    return static_cast<std::uint32_t>(corner_id[l]);
  };
  for (int k = 0; k < s.dims[2]; ++k)
    for (int j = 0; j < s.dims[1]; ++j)
      for (int i = 0; i < s.dims[0]; ++i) {
        if (!s.at({i, j, k})) continue;
        for (int a = 0; a < 3; ++a)
          for (int sign : {-1, 1}) {
            Index3 nb{i, j, k};
            nb[a] += sign;
            if (s.at(nb)) continue;
            const int u = (a + 1) % 3, v = (a + 2) % 3;
            std::array<Index3, 4> q;
            for (int c = 0; c < 4; ++c) {
              Index3 p{i, j, k};
              if (sign > 0) p[a] += 1;
              // (0,0) (1,0) (1,1) (0,1) in (u, v); counter-clockwise about +a.
              p[u] += (c == 1 || c == 2) ? 1 : 0;
              p[v] += (c >= 2) ? 1 : 0;
              q[c] = p;
            }
            if (sign < 0) std::swap(q[1], q[3]);
            const std::array<std::uint32_t, 4> id{vertex(q[0]), vertex(q[1]), vertex(q[2]), vertex(q[3])};
            mesh.faces.push_back({id[0], id[1], id[2]});
            mesh.faces.push_back({id[0], id[2], id[3]});
          }
      }
  if (!samples.empty()) {
    const KdTree tree(samples);
    const double limit2 = opt.snap_limit * opt.snap_limit;
    if (!colors.empty()) mesh.colors.resize(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const Neighbor nb = tree.nearest(mesh.vertices[i]);
      if (!colors.empty()) mesh.colors[i] = colors[nb.index];
      if (opt.snap && nb.sq_distance <= limit2) mesh.vertices[i] = samples[nb.index];
    }
  }
  return mesh;
}

}  // namespace occshape
