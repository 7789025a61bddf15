#include "occshape/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "json.hpp"

#include "occshape/io.hpp"

namespace occshape {

Scene make_block_scene(const Workspace& ws) {
  Scene s;
  s.plane_height = ws.plane_height;
  s.voxel_size = ws.voxel();
  const GridSpec& g = ws.grid;
  const int nx = 24, ny = 24, nz = 19;
  const int i0 = static_cast<int>(g.dims[0]) / 2 - nx / 2;
  const int j0 = static_cast<int>(g.dims[1]) / 2 - ny / 2;
  const int k0 = g.locate_unchecked({0.0, 0.0, ws.plane_height + 0.5 * s.voxel_size})[2];
  s.plasticine.reserve(std::size_t(nx) * ny * nz);
  const Rgb color = default_color(SemanticClass::Plasticine);
  for (int k = k0; k < k0 + nz; ++k)
    for (int j = j0; j < j0 + ny; ++j)
      for (int i = i0; i < i0 + nx; ++i) s.plasticine.push_back(g.center(Index3{i, j, k}), color);
  const double park = 0.4 * ws.max_width();
  for (int f = 0; f < 2; ++f) {
    Capsule& c = s.fingers[f];
    c.radius = ws.finger.radius;
    c.length = ws.finger.length;
    c.center = Vec3(f == 0 ? -park : park, 0.0, ws.z_min());
  }
  return s;
}

std::optional<std::string> check_action(const GripperAction& a, const Workspace& ws) {
  for (double v : {a.x, a.y, a.z, a.rz, a.l, a.l_end})
    if (!std::isfinite(v)) return "non-finite action component";
  if (a.l_end <= ws.min_width())
    return "closing width " + format_double(a.l_end) + " m would overlap the fingers (limit " +
           format_double(ws.min_width()) + " m)";
  if (a.l < a.l_end) return "opening width is smaller than the closing width";
  if (a.l > ws.max_width()) return "opening width exceeds the workspace";
  const Aabb b = ws.grid.bounds();
  if (a.x < b.min.x() || a.x > b.max.x() || a.y < b.min.y() || a.y > b.max.y())
    return "grasp center outside the workspace footprint";
  if (a.z < ws.z_min() - 1e-12 || a.z > ws.z_max() + 1e-12)
    return "finger height " + format_double(a.z) + " m outside [" + format_double(ws.z_min()) + ", " +
           format_double(ws.z_max()) + "]";
  return std::nullopt;
}

QuasiStaticPinchModel::QuasiStaticPinchModel(Workspace ws, PinchParams params)
    : ws_(std::move(ws)), params_(params) {
  if (params_.substeps < 1) throw InvalidArgument("pinch needs at least one substep");
  if (params_.d_min < 0) throw InvalidArgument("d_min must be nonnegative");
  if (!(params_.overlap_tolerance >= 0 && params_.overlap_tolerance < 1))
    throw InvalidArgument("overlap tolerance must lie in [0, 1)");
}

namespace {

constexpr double kSurfaceMargin = 1e-12;

struct Sweep {
  Vec2 open;       // finger xy at the opening width
  Vec2 prev;       // finger xy at the previous substep
  Vec2 current;    // finger xy at this substep
  Vec2 closing;    // unit closing direction
  double z = 0.0;  // finger center height
};

class Pincher {
 public:
  Pincher(std::vector<Vec3>& pts, double radius, double half_segment, double d_min, double plane,
          double overlap_tolerance, const Aabb& domain)
      : pts_(pts), radius_(radius), half_(half_segment), d_min_(d_min), plane_(plane),
        tolerance_(overlap_tolerance) {
    // Cells of size d_min over the domain plus a margin; positions outside
    // are clamped onto the border cells, which keeps the 27-cell search exact.
    lo_ = domain.min - Vec3::Constant(2 * d_min);
    for (int a = 0; a < 3; ++a)
      n_[a] = std::max(1, static_cast<int>(std::ceil((domain.max[a] - domain.min[a]) / d_min)) + 4);
    head_.assign(std::size_t(n_[0]) * n_[1] * n_[2], kNone);
    next_.assign(pts.size(), kNone);
    prev_.assign(pts.size(), kNone);
    cell_of_.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) insert(static_cast<std::uint32_t>(i), cell(pts[i]));
  }

  // A point inside the stadium swept since the previous substep is moved
  // horizontally and radially onto the current finger surface; true if moved.
  bool project(Vec3& p, const Sweep& s) const {
    double rho = 0.0;
    if (!inside(p, s.z, s.prev, s.current, rho)) return false;
    place(p, s.current, s.closing, rho);
    return true;
  }

  // Keeps a point out of the whole path swept so far by pushing it away from
  // the nearest point of the path axis.
  void clear_path(Vec3& p, const Sweep& s) const {
    double rho = 0.0;
    if (!inside(p, s.z, s.open, s.current, rho)) return;
    const Vec2 seg = s.current - s.open;
    const double len2 = seg.squaredNorm();
    const double t = len2 > 0 ? std::clamp((p.head<2>() - s.open).dot(seg) / len2, 0.0, 1.0) : 1.0;
    place(p, s.open + t * seg, s.closing, rho);
  }

  bool inside(const Vec3& p, double z, const Vec2& from, const Vec2& to, double& rho) const {
    const double dz = std::max(0.0, std::abs(p.z() - z) - half_);
    if (dz >= radius_) return false;
    rho = std::sqrt(radius_ * radius_ - dz * dz);
    const Vec2 xy = p.head<2>();
    const Vec2 seg = to - from;
    const double len2 = seg.squaredNorm();
    const double t = len2 > 0 ? std::clamp((xy - from).dot(seg) / len2, 0.0, 1.0) : 1.0;
    return (xy - (from + t * seg)).norm() < rho;
  }

  static void place(Vec3& p, const Vec2& center, const Vec2& closing, double rho) {
    const Vec2 off = p.head<2>() - center;
    const double d = off.norm();
    const Vec2 out = d > 0 ? Vec2(center + off * ((rho + kSurfaceMargin) / d))
                           : Vec2(center + closing * (rho + kSurfaceMargin));
    p.x() = out.x();
    p.y() = out.y();
  }

  bool project_both(std::size_t i, const Sweep& a, const Sweep& b) {
    Vec3 p = pts_[i];
    const bool moved_a = project(p, a);
    const bool moved_b = project(p, b);
    if (!moved_a && !moved_b) return false;
    move_to(i, p);
    return true;
  }

  // Jacobi overlap relaxation seeded by `dirty`, corrections averaged over
  // each particle's active pairs. Returns sweeps run.
  std::size_t relax(std::vector<std::uint32_t> dirty, std::vector<char>& moved, std::size_t max_sweeps) {
    const double limit = d_min_ * (1.0 - tolerance_);
    const double limit2 = limit * limit;
    std::vector<Vec3> delta(pts_.size(), Vec3::Zero());
    std::vector<std::uint32_t> touched(pts_.size(), 0);  // active constraints per particle
    std::vector<char> is_dirty(pts_.size(), 0);
    std::size_t sweeps = 0;
    std::vector<std::uint32_t> changed, near;
    while (!dirty.empty() && sweeps < max_sweeps) {
      std::sort(dirty.begin(), dirty.end());
      for (auto i : dirty) is_dirty[i] = 1;
      changed.clear();
      for (auto i : dirty) {
        const Vec3 pi = pts_[i];
        // Index order keeps the accumulation independent of cell layout.
        near.clear();
        for_neighbors(pi, [&](std::uint32_t j) {
          if (j == i || (is_dirty[j] && j < i)) return;
          if ((pts_[j] - pi).squaredNorm() < limit2) near.push_back(j);
        });
        std::sort(near.begin(), near.end());
        for (auto j : near) {
          const Vec3 d = pts_[j] - pi;
          const double d2 = d.squaredNorm();
          const std::uint32_t lo = std::min(i, j), hi = std::max(i, j);
          Vec3 n;  // unit vector from lo to hi
          double dist = 0.0;
          if (d2 == 0.0) {
            n = -Vec3::UnitZ();
          } else {
            dist = std::sqrt(d2);
            n = (pts_[hi] - pts_[lo]) / dist;
          }
          const double c = 0.5 * (d_min_ - dist);
          delta[lo] -= c * n;
          delta[hi] += c * n;
          for (auto k : {lo, hi})
            if (touched[k]++ == 0) changed.push_back(k);
        }
      }
      for (auto i : dirty) is_dirty[i] = 0;
      if (changed.empty()) break;
      ++sweeps;
      for (auto k : changed) {
        move_to(k, pts_[k] + delta[k] / double(touched[k]));
        delta[k].setZero();
        touched[k] = 0;
        moved[k] = 1;
      }
      dirty.swap(changed);
    }
    return sweeps;
  }

  void enforce(std::size_t i, const Sweep& a, const Sweep& b) {
    Vec3 p = pts_[i];
    p.z() = std::max(p.z(), plane_ + 0.5 * d_min_);
    clear_path(p, a);
    clear_path(p, b);
    move_to(i, p);
  }

 private:
  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

  std::array<int, 3> coords(const Vec3& p) const {
    std::array<int, 3> c;
    for (int a = 0; a < 3; ++a) {
      const double f = std::floor((p[a] - lo_[a]) / d_min_);
      c[a] = static_cast<int>(std::clamp(f, 0.0, double(n_[a] - 1)));
    }
    return c;
  }
  std::uint32_t cell(const Vec3& p) const {
    const auto c = coords(p);
    return static_cast<std::uint32_t>(c[0] + n_[0] * (c[1] + n_[1] * c[2]));
  }
  void insert(std::uint32_t i, std::uint32_t c) {
    cell_of_[i] = c;
    prev_[i] = kNone;
    next_[i] = head_[c];
    if (head_[c] != kNone) prev_[head_[c]] = i;
    head_[c] = i;
  }
  void remove(std::uint32_t i) {
    const std::uint32_t c = cell_of_[i];
    if (prev_[i] != kNone) next_[prev_[i]] = next_[i];
    else head_[c] = next_[i];
    if (next_[i] != kNone) prev_[next_[i]] = prev_[i];
  }
  void move_to(std::size_t i, const Vec3& p) {
    pts_[i] = p;
    const std::uint32_t c = cell(p);
    if (c == cell_of_[i]) return;
    remove(static_cast<std::uint32_t>(i));
    insert(static_cast<std::uint32_t>(i), c);
  }
  template <typename Fn>
  void for_neighbors(const Vec3& p, Fn&& fn) const {
    const auto c = coords(p);
    for (int z = std::max(0, c[2] - 1); z <= std::min(n_[2] - 1, c[2] + 1); ++z)
      for (int y = std::max(0, c[1] - 1); y <= std::min(n_[1] - 1, c[1] + 1); ++y)
        for (int x = std::max(0, c[0] - 1); x <= std::min(n_[0] - 1, c[0] + 1); ++x)
          for (auto j = head_[x + n_[0] * (y + n_[1] * z)]; j != kNone; j = next_[j]) fn(j);
  }

  std::vector<Vec3>& pts_;
  double radius_, half_, d_min_, plane_, tolerance_;
  Vec3 lo_;
  std::array<int, 3> n_{};
  std::vector<std::uint32_t> head_, next_, prev_, cell_of_;
};

}  // namespace

Scene QuasiStaticPinchModel::step(const Scene& scene, const GripperAction& action,
                                  const SubstepObserver& observer) const {
  if (auto why = check_action(action, ws_)) throw ActionRejected("action rejected: " + *why);
  Scene out = scene;
  const double d_min = params_.d_min > 0 ? params_.d_min : scene.voxel_size;
  if (!(d_min > 0)) throw InvalidArgument("particle spacing must be positive");
  const double radius = ws_.finger.radius;
  const double half = 0.5 * ws_.finger.length - radius;
  auto& pts = out.plasticine.points;
  Pincher pincher(pts, radius, half, d_min, scene.plane_height, params_.overlap_tolerance, ws_.grid.bounds());

  const Vec2 dir = action.direction().head<2>();
  const Vec2 open_a = action.finger_a(action.l).head<2>(), open_b = action.finger_b(action.l).head<2>();
  Sweep a{open_a, open_a, open_a, dir, action.z};
  Sweep b{open_b, open_b, open_b, -dir, action.z};
  const std::size_t n_sub = params_.substeps;
  for (std::size_t s = 0; s <= n_sub; ++s) {
    const double w = s == n_sub ? action.l_end
                                : action.l + (action.l_end - action.l) * double(s) / double(n_sub);
    a.prev = a.current;
    b.prev = b.current;
    a.current = action.finger_a(w).head<2>();
    b.current = action.finger_b(w).head<2>();
    std::vector<std::uint32_t> dirty;
    std::vector<char> moved(pts.size(), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pincher.project_both(i, a, b)) {
        dirty.push_back(static_cast<std::uint32_t>(i));
        moved[i] = 1;
      }
    }
    std::size_t sweeps = 0;
    std::size_t moved_count = dirty.size();
    if (!dirty.empty()) {
      sweeps = pincher.relax(std::move(dirty), moved, params_.relax_sweeps);
      moved_count = 0;
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (moved[i]) {
          pincher.enforce(i, a, b);
          ++moved_count;
        }
    }
    if (observer) {
      SubstepRecord rec;
      rec.substep = s;
      rec.width = w;
      rec.finger_a = action.finger_a(w);
      rec.finger_b = action.finger_b(w);
      rec.action = action;
      rec.particles = pts.size();
      rec.moved = moved_count;
      rec.relax_sweeps = sweeps;
      observer(rec);
    }
  }
  out.fingers[0].center = action.finger_a(action.l_end);
  out.fingers[1].center = action.finger_b(action.l_end);
  for (auto& f : out.fingers) {
    f.radius = radius;
    f.length = ws_.finger.length;
    f.axis = Vec3::UnitZ();
  }
  return out;
}

RolloutResult rollout(const DynamicsModel& model, const Scene& scene,
                      const std::vector<GripperAction>& actions, const SubstepObserver& observer) {
  RolloutResult r;
  r.states.push_back(scene);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    try {
      r.states.push_back(model.step(r.states.back(), actions[i], observer));
    } catch (const Error& e) {
      r.error_index = i;
      r.error = e.what();
      break;
    }
  }
  return r;
}

void write_substep_jsonl(std::ostream& out, const SubstepRecord& rec, std::optional<std::size_t> pinch) {
  auto vec = [](const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
  nlohmann::json j;
  if (pinch) j["pinch"] = *pinch;
  j["substep"] = rec.substep;
  j["width"] = rec.width;
  j["finger_a"] = vec(rec.finger_a);
  j["finger_b"] = vec(rec.finger_b);
  j["action"] = {{"x", rec.action.x}, {"y", rec.action.y}, {"z", rec.action.z},
                 {"rz", rec.action.rz}, {"l", rec.action.l}, {"l_end", rec.action.l_end}};
  j["particles"] = rec.particles;
  j["moved"] = rec.moved;
  j["relax_sweeps"] = rec.relax_sweeps;
  out << j.dump() << '\n';
}

ConstraintReport check_constraints(const Scene& scene) {
  ConstraintReport r;
  for (const auto& p : scene.plasticine.points) {
    if (p.z() < scene.plane_height) ++r.below_plane;
    if (scene.fingers[0].contains_strict(p) || scene.fingers[1].contains_strict(p)) ++r.inside_capsule;
  }
  return r;
}

OccupancyGrid rasterize(const Scene& scene, const GridSpec& spec, bool fingers) {
  OccupancyGridBuilder b(spec);
  const Rgb color = default_color(SemanticClass::Plasticine);
  for (const auto& p : scene.plasticine.points) {
    if (auto idx = spec.locate(p)) {
      const auto lin = spec.linear(*idx);
      if (b.label(lin, SemanticClass::Plasticine)) b.set_color(lin, color);
    }
  }
  if (fingers) {
    for (int f = 0; f < 2; ++f) {
      const Capsule& c = scene.fingers[f];
      const SemanticClass cls = f == 0 ? SemanticClass::FingerA : SemanticClass::FingerB;
      const Vec3 r = Vec3::Constant(c.radius) + c.axis.cwiseAbs() * c.half_segment();
      const auto lo = spec.locate_unchecked(c.center - r);
      const auto hi = spec.locate_unchecked(c.center + r);
      for (int k = std::max(lo[2], 0); k <= std::min(hi[2], int(spec.dims[2]) - 1); ++k)
        for (int j = std::max(lo[1], 0); j <= std::min(hi[1], int(spec.dims[1]) - 1); ++j)
          for (int i = std::max(lo[0], 0); i <= std::min(hi[0], int(spec.dims[0]) - 1); ++i) {
            const Index3 idx{i, j, k};
            if (c.axis_distance(spec.center(idx)) <= c.radius) {
              const auto lin = spec.linear(idx);
              if (b.label(lin, cls)) b.set_color(lin, default_color(cls));
            }
          }
    }
  }
  return std::move(b).build();
}

}  // namespace occshape
