#include "occshape/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "occshape/sdf.hpp"

namespace occshape {

GridSpec GridSpec::workspace() {
  GridSpec s;
  s.dims = {100, 100, 40};
  s.voxel_size = Eigen::Vector3f::Constant(0.002f);
  s.origin = Eigen::Vector3f(-0.1f, -0.1f, -0.01f);
  return s;
}

Vec3 GridSpec::max_corner() const {
  Vec3 m;
  for (int a = 0; a < 3; ++a) m[a] = double(origin[a]) + double(dims[a]) * double(voxel_size[a]);
  return m;
}

Vec3 GridSpec::center(const Index3& idx) const {
  Vec3 c;
  for (int a = 0; a < 3; ++a) c[a] = double(origin[a]) + (idx[a] + 0.5) * double(voxel_size[a]);
  return c;
}

Index3 GridSpec::locate_unchecked(const Vec3& p) const {
  Index3 idx;
  for (int a = 0; a < 3; ++a) {
    idx[a] = static_cast<int>(std::floor((p[a] - double(origin[a])) / double(voxel_size[a])));
  }
  return idx;
}

std::optional<Index3> GridSpec::locate(const Vec3& p) const {
  const Index3 idx = locate_unchecked(p);
  if (!in_range(idx)) return std::nullopt;
  return idx;
}

std::size_t OccupancyGrid::count(SemanticClass c) const {
  return static_cast<std::size_t>(std::count(cls_.begin(), cls_.end(), c));
}

std::size_t OccupancyGrid::occupied_count() const { return size() - count(SemanticClass::Empty); }

OccupancyGridBuilder::OccupancyGridBuilder(const GridSpec& spec) {
  for (int a = 0; a < 3; ++a) {
    if (spec.dims[a] == 0) throw InvalidArgument("grid dims must be positive");
    if (!(spec.voxel_size[a] > 0.0f)) throw InvalidArgument("voxel size must be positive");
  }
  grid_.spec_ = spec;
  const auto n = spec.voxel_count();
  grid_.prob_.assign(n, 0.0f);
  grid_.cls_.assign(n, SemanticClass::Empty);
  grid_.color_.assign(n, Rgb{});
}

OccupancyGridBuilder::OccupancyGridBuilder(OccupancyGrid grid) : grid_(std::move(grid)) {}

void OccupancyGridBuilder::set(std::size_t i, SemanticClass c, float prob, Rgb color) {
  if (!(prob >= 0.0f && prob <= 1.0f)) throw InvalidArgument("occupancy probability outside [0, 1]");
  grid_.cls_[i] = c;
  grid_.prob_[i] = prob;
  grid_.color_[i] = color;
}

void OccupancyGridBuilder::clear(std::size_t i) {
  grid_.cls_[i] = SemanticClass::Empty;
  grid_.prob_[i] = 0.0f;
  grid_.color_[i] = Rgb{};
}

bool OccupancyGridBuilder::label(std::size_t i, SemanticClass c) {
  if (label_precedence(c) < label_precedence(grid_.cls_[i])) return false;
  if (c == SemanticClass::Empty) {
    clear(i);
    return true;
  }
  grid_.cls_[i] = c;
  grid_.prob_[i] = 1.0f;
  return true;
}

OccupancyGrid OccupancyGridBuilder::build() && { return std::move(grid_); }

namespace {

// Inclusive index bounds of voxels whose centers may fall inside box.
std::pair<Index3, Index3> center_bounds(const GridSpec& spec, const Aabb& box) {
  Index3 lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    const double o = spec.origin[a];
    const double s = spec.voxel_size[a];
    lo[a] = std::max(0, static_cast<int>(std::floor((box.min[a] - o) / s - 0.5)));
    hi[a] = std::min(static_cast<int>(spec.dims[a]) - 1,
                     static_cast<int>(std::ceil((box.max[a] - o) / s - 0.5)));
  }
  return {lo, hi};
}

template <typename Fn>
void for_each_in(const Index3& lo, const Index3& hi, Fn&& fn) {
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) fn(Index3{i, j, k});
}

bool covers(const GridSpec& spec, const Aabb& box) {
  const Aabb g = spec.bounds();
  const Vec3 tol = spec.size() * 1e-6;
  return (box.min.array() >= (g.min - tol).array()).all() &&
         (box.max.array() <= (g.max + tol).array()).all();
}

}  // namespace

std::size_t label_mesh(OccupancyGridBuilder& grid, const TriMesh& mesh, SemanticClass label) {
  const MeshSdf sdf(mesh);
  const GridSpec& spec = grid.spec();
  std::size_t written = 0;
  auto visit = [&](const Index3& idx) {
    if (sdf.inside(spec.center(idx)) && grid.label(spec.linear(idx), label)) ++written;
  };
  if (sdf.inverted()) {
    for_each_in({0, 0, 0},
                {int(spec.dims[0]) - 1, int(spec.dims[1]) - 1, int(spec.dims[2]) - 1}, visit);
  } else {
    const auto [lo, hi] = center_bounds(spec, sdf.bounds());
    for_each_in(lo, hi, visit);
  }
  return written;
}

OccupancyGrid voxelize_mesh(const TriMesh& mesh, const GridSpec& spec, SemanticClass label) {
  if (!covers(spec, mesh.bounds())) throw InvalidArgument("grid does not cover the mesh bounding box");
  OccupancyGridBuilder grid(spec);
  label_mesh(grid, mesh, label);
  return std::move(grid).build();
}

OccupancyGrid label_plane(const OccupancyGrid& grid, const PlaneSpec& plane) {
  const GridSpec& spec = grid.spec();
  const double sz = spec.voxel_size.z();
  if (std::abs(plane.size.z() - sz) > 1e-6 * sz) {
    throw ConfigError("plane thickness " + std::to_string(plane.size.z()) +
                      " m must equal the voxel height " + std::to_string(sz) + " m");
  }
  const Aabb box{{plane.center.x() - plane.size.x() / 2, plane.center.y() - plane.size.y() / 2,
                  plane.top_z - sz},
                 {plane.center.x() + plane.size.x() / 2, plane.center.y() + plane.size.y() / 2,
                  plane.top_z}};
  OccupancyGridBuilder out(grid);
  const auto [lo, hi] = center_bounds(spec, box);
  for_each_in(lo, hi, [&](const Index3& idx) {
    const Vec3 c = spec.center(idx);
    // Half-open in z so exactly one layer qualifies.
    if (c.x() < box.min.x() || c.x() > box.max.x() || c.y() < box.min.y() || c.y() > box.max.y())
      return;
    if (c.z() <= box.min.z() || c.z() > box.max.z()) return;
    const auto lin = spec.linear(idx);
    if (out.label(lin, SemanticClass::Plane)) out.set_color(lin, default_color(SemanticClass::Plane));
  });
  return std::move(out).build();
}

namespace {

// Casts axis-parallel rays against a mesh using per-axis 2D buckets.
class AxisRayCaster {
 public:
  explicit AxisRayCaster(const TriMesh& mesh) : mesh_(mesh) {
    const Aabb box = mesh.bounds();
    double mean_edge = 0.0;
    for (const auto& f : mesh.faces) mean_edge += (mesh.vertices[f[0]] - mesh.vertices[f[1]]).norm();
    mean_edge = mesh.faces.empty() ? 1.0 : std::max(mean_edge / mesh.faces.size(), 1e-9);
    for (int axis = 0; axis < 3; ++axis) {
      Buckets& bk = buckets_[axis];
      bk.u = (axis + 1) % 3;
      bk.v = (axis + 2) % 3;
      bk.lo = Vec2(box.min[bk.u], box.min[bk.v]);
      bk.cell = 2.0 * mean_edge;
      bk.nu = std::max(1, static_cast<int>(std::ceil((box.max[bk.u] - box.min[bk.u]) / bk.cell)) + 1);
      bk.nv = std::max(1, static_cast<int>(std::ceil((box.max[bk.v] - box.min[bk.v]) / bk.cell)) + 1);
      bk.cells.assign(static_cast<std::size_t>(bk.nu) * bk.nv, {});
      for (std::uint32_t fi = 0; fi < mesh.faces.size(); ++fi) {
        const auto& f = mesh.faces[fi];
        double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
        for (auto vi : f) {
          umin = std::min(umin, mesh.vertices[vi][bk.u]);
          umax = std::max(umax, mesh.vertices[vi][bk.u]);
          vmin = std::min(vmin, mesh.vertices[vi][bk.v]);
          vmax = std::max(vmax, mesh.vertices[vi][bk.v]);
        }
        const int iu0 = bk.clamp_u((umin - bk.lo.x()) / bk.cell - 1e-9);
        const int iu1 = bk.clamp_u((umax - bk.lo.x()) / bk.cell + 1e-9);
        const int iv0 = bk.clamp_v((vmin - bk.lo.y()) / bk.cell - 1e-9);
        const int iv1 = bk.clamp_v((vmax - bk.lo.y()) / bk.cell + 1e-9);
        for (int iv = iv0; iv <= iv1; ++iv)
          for (int iu = iu0; iu <= iu1; ++iu) bk.cells[iu + bk.nu * iv].push_back(fi);
      }
    }
  }

  // Nearest hit along +axis (dir > 0) or -axis (dir < 0); interpolated color.
  std::optional<Eigen::Vector3d> cast(const Vec3& p, int axis, int dir) const {
    const Buckets& bk = buckets_[axis];
    const double pu = p[bk.u];
    const double pv = p[bk.v];
    const double fu = (pu - bk.lo.x()) / bk.cell;
    const double fv = (pv - bk.lo.y()) / bk.cell;
    if (fu < -1e-9 || fv < -1e-9 || fu > bk.nu || fv > bk.nv) return std::nullopt;
    const auto& cell = bk.cells[bk.clamp_u(fu) + bk.nu * bk.clamp_v(fv)];
    double best_t = std::numeric_limits<double>::infinity();
    Eigen::Vector3d best_color = Eigen::Vector3d::Zero();
    for (auto fi : cell) {
      const auto& f = mesh_.faces[fi];
      const Vec3& a = mesh_.vertices[f[0]];
      const Vec3& b = mesh_.vertices[f[1]];
      const Vec3& c = mesh_.vertices[f[2]];
      const double x1 = a[bk.u], y1 = a[bk.v];
      const double x2 = b[bk.u], y2 = b[bk.v];
      const double x3 = c[bk.u], y3 = c[bk.v];
      const double det = (y2 - y3) * (x1 - x3) + (x3 - x2) * (y1 - y3);
      if (std::abs(det) < 1e-300) continue;  // triangle parallel to the ray
      const double l1 = ((y2 - y3) * (pu - x3) + (x3 - x2) * (pv - y3)) / det;
      const double l2 = ((y3 - y1) * (pu - x3) + (x1 - x3) * (pv - y3)) / det;
      const double l3 = 1.0 - l1 - l2;
      constexpr double tol = -1e-12;
      if (l1 < tol || l2 < tol || l3 < tol) continue;
      const double hit = l1 * a[axis] + l2 * b[axis] + l3 * c[axis];
      const double t = (hit - p[axis]) * dir;
      if (t < 0.0 || t >= best_t) continue;
      best_t = t;
      auto col = [&](std::uint32_t vi) {
        const Rgb rgb = mesh_.vertex_color(vi);
        return Eigen::Vector3d(rgb.r, rgb.g, rgb.b);
      };
      best_color = l1 * col(f[0]) + l2 * col(f[1]) + l3 * col(f[2]);
    }
    if (!std::isfinite(best_t)) return std::nullopt;
    return best_color;
  }

 private:
  struct Buckets {
    int u = 0, v = 0;
    Vec2 lo = Vec2::Zero();
    double cell = 1.0;
    int nu = 1, nv = 1;
    std::vector<std::vector<std::uint32_t>> cells;
    int clamp_u(double f) const { return std::clamp(static_cast<int>(std::floor(f)), 0, nu - 1); }
    int clamp_v(double f) const { return std::clamp(static_cast<int>(std::floor(f)), 0, nv - 1); }
  };
  const TriMesh& mesh_;
  std::array<Buckets, 3> buckets_;
};

}  // namespace

ColorAssignment assign_colors(const OccupancyGrid& grid, const TriMesh& mesh,
                              std::optional<SemanticClass> only) {
  const AxisRayCaster caster(mesh);
  const GridSpec& spec = grid.spec();
  OccupancyGridBuilder out(grid);
  ColorAssignment result;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const SemanticClass c = grid.cls(i);
    if (c == SemanticClass::Empty || (only && c != *only)) continue;
    const Vec3 p = spec.center(i);
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    int hits = 0;
    for (int axis = 0; axis < 3; ++axis) {
      for (int dir : {1, -1}) {
        if (auto col = caster.cast(p, axis, dir)) {
          sum += *col;
          ++hits;
        }
      }
    }
    if (hits == 0) {
      out.set_color(i, default_color(c));
      result.flagged.push_back(i);
      continue;
    }
    const Eigen::Vector3d mean = sum / hits;
    auto channel = [](double v) {
      return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    };
    out.set_color(i, Rgb{channel(mean.x()), channel(mean.y()), channel(mean.z())});
    ++result.colored;
  }
  result.grid = std::move(out).build();
  return result;
}

std::pair<Index3, Index3> roi_index_range(const GridSpec& spec, const Aabb& roi) {
  Index3 lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    const double o = spec.origin[a];
    const double s = spec.voxel_size[a];
    // Smallest i with center >= min, largest with center <= max, with a
    // relative tolerance so single-precision origins do not drop a layer.
    const double eps = 1e-6;
    lo[a] = std::max(0, static_cast<int>(std::ceil((roi.min[a] - o) / s - 0.5 - eps)));
    hi[a] = std::min(static_cast<int>(spec.dims[a]),
                     static_cast<int>(std::floor((roi.max[a] - o) / s - 0.5 + eps)) + 1);
    hi[a] = std::max(hi[a], lo[a]);
  }
  return {lo, hi};
}

OccupancyGrid threshold_and_crop(const OccupancyGrid& grid, float theta, const Aabb& roi) {
  if (roi.degenerate()) throw InvalidArgument("region of interest has zero extent");
  const GridSpec& spec = grid.spec();
  const Aabb g = spec.bounds();
  const Vec3 tol = spec.size() * 0.5;
  if ((roi.min.array() < (g.min - tol).array()).any() || (roi.max.array() > (g.max + tol).array()).any()) {
    throw InvalidArgument("region of interest exceeds the grid bounds");
  }
  const auto [lo, hi] = roi_index_range(spec, roi);
  OccupancyGridBuilder out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Index3 idx = spec.unravel(i);
    bool inside = true;
    for (int a = 0; a < 3; ++a) inside = inside && idx[a] >= lo[a] && idx[a] < hi[a];
    if (!inside) {
      out.clear(i);
    } else if (grid.prob(i) < theta && grid.cls(i) != SemanticClass::Empty) {
      out.set(i, SemanticClass::Empty, grid.prob(i), Rgb{});
    }
  }
  return std::move(out).build();
}

Aabb prediction_range() { return {{-0.1, -0.1, -0.01}, {0.1, 0.1, 0.07}}; }

}  // namespace occshape
