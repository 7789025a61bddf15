#include "occshape/pipeline.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <deque>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "occshape/io.hpp"
#include "occshape/kdtree.hpp"

namespace occshape {

void PointCloud::append(const PointCloud& o) {
  points.insert(points.end(), o.points.begin(), o.points.end());
  colors.insert(colors.end(), o.colors.begin(), o.colors.end());
}

CameraPose look_at(int id, const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 f = (target - eye).normalized();
  Vec3 r = f.cross(up);
  if (r.norm() < 1e-9) r = f.cross(Vec3::UnitX());
  r.normalize();
  const Vec3 d = f.cross(r);  // camera y points down in the image
  CameraPose p;
  p.id = id;
  p.camera_to_world.block<3, 1>(0, 0) = r;
  p.camera_to_world.block<3, 1>(0, 1) = d;
  p.camera_to_world.block<3, 1>(0, 2) = f;
  p.camera_to_world.block<3, 1>(0, 3) = eye;
  return p;
}

std::vector<CameraPose> default_cameras() {
  std::vector<CameraPose> cams;
  const Vec3 target(0.0, 0.0, 0.015);
  for (int i = 0; i < 4; ++i) {
    const double az = std::numbers::pi / 4 + i * std::numbers::pi / 2;
    cams.push_back(look_at(i, Vec3(0.25 * std::cos(az), 0.25 * std::sin(az), 0.25), target));
  }
  cams.push_back(look_at(4, Vec3(0.2, 0.0, -0.25), target));
  cams.push_back(look_at(5, Vec3(-0.2, 0.0, -0.25), target));
  return cams;
}

namespace {

constexpr double kPi = std::numbers::pi;

// Squared distance between segments [p0, p1] and [q0, q1].
double segment_sq_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= 1e-30 && e <= 1e-30) return r.squaredNorm();
  if (a <= 1e-30) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 1e-30) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2), denom = a * e - b * b;
      s = denom > 1e-30 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p0 + s * d1) - (q0 + t * d2)).squaredNorm();
}

void sample_capsule(const Capsule& c, SemanticClass cls, double spacing, std::vector<SurfaceSample>& out) {
  const Rgb color = default_color(cls);
  const double R = c.radius, h = c.half_segment();
  const int around = std::max(8, static_cast<int>(std::ceil(2 * kPi * R / spacing)));
  const int rows = std::max(1, static_cast<int>(std::ceil(2 * h / spacing)));
  auto ring = [&](double z_local, double rho, double nz, int count) {
    for (int i = 0; i < count; ++i) {
      const double a = 2 * kPi * (i + 0.5) / count;
      const Vec3 radial(std::cos(a), std::sin(a), 0.0);
      const Vec3 n = (rho / R) * radial + nz * Vec3::UnitZ();
      out.push_back({c.center + Vec3(0, 0, z_local) + rho * radial, n.normalized(), color, cls});
    }
  };
  for (int r = 0; r <= rows; ++r) ring(-h + 2 * h * r / rows, R, 0.0, around);
  const int lat = std::max(2, static_cast<int>(std::ceil(0.5 * kPi * R / spacing)));
  for (int sgn : {-1, 1}) {
    for (int i = 1; i <= lat; ++i) {
      const double phi = 0.5 * kPi * i / lat;  // polar angle from the cap rim
      const double rho = R * std::cos(phi), dz = R * std::sin(phi);
      if (i == lat) {
        out.push_back({c.center + Vec3(0, 0, sgn * (h + R)), Vec3(0, 0, sgn), color, cls});
      } else {
        const int count = std::max(4, static_cast<int>(std::ceil(2 * kPi * rho / spacing)));
        ring(sgn * (h + dz), rho, sgn * dz / R, count);
      }
    }
  }
}

}  // namespace

std::vector<SurfaceSample> scene_surface_samples(const Scene& scene, const GridSpec& spec,
                                                 const SynthOptions& opt) {
  if (opt.face_samples < 1) throw InvalidArgument("face_samples must be at least 1");
  if (!(opt.spacing > 0)) throw InvalidArgument("sample spacing must be positive");
  std::vector<SurfaceSample> out;
  const OccupancyGrid g = rasterize(scene, spec);
  const Vec3 size = spec.size();
  const int n = opt.face_samples;
  for (std::size_t lin = 0; lin < g.size(); ++lin) {
    if (g.cls(lin) != SemanticClass::Plasticine) continue;
    const Index3 idx = spec.unravel(lin);
    const Vec3 c = spec.center(idx);
    for (int a = 0; a < 3; ++a)
      for (int sign : {-1, 1}) {
        Index3 nb = idx;
        nb[a] += sign;
        if (spec.in_range(nb) && g.cls(spec.linear(nb)) == SemanticClass::Plasticine) continue;
        const int u = (a + 1) % 3, v = (a + 2) % 3;
        Vec3 normal = Vec3::Zero();
        normal[a] = sign;
        for (int iu = 0; iu < n; ++iu)
          for (int iv = 0; iv < n; ++iv) {
            Vec3 p = c;
            p[a] += 0.5 * sign * size[a];
            p[u] += ((iu + 0.5) / n - 0.5) * size[u];
            p[v] += ((iv + 0.5) / n - 0.5) * size[v];
            out.push_back({p, normal, g.color(lin), SemanticClass::Plasticine});
          }
      }
  }
  sample_capsule(scene.fingers[0], SemanticClass::FingerA, opt.spacing, out);
  sample_capsule(scene.fingers[1], SemanticClass::FingerB, opt.spacing, out);
  if (opt.sample_plane) {
    const double step = std::max(opt.spacing, double(spec.voxel_size.x()));
    const int m = static_cast<int>(std::floor(2 * opt.plane_half_extent / step));
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        out.push_back({Vec3(-opt.plane_half_extent + (i + 0.5) * step, -opt.plane_half_extent + (j + 0.5) * step,
                            scene.plane_height),
                       Vec3::UnitZ(), default_color(SemanticClass::Plane), SemanticClass::Plane});
  }
  return out;
}

bool occluded_by_fingers(const Vec3& p, const Vec3& camera, const std::array<Capsule, 2>& fingers, int own) {
  for (int f = 0; f < 2; ++f) {
    if (f == own) continue;
    const Capsule& c = fingers[f];
    const double r = c.radius * (1.0 - 1e-9);
    if (segment_sq_distance(p, camera, c.segment_a(), c.segment_b()) < r * r) return true;
  }
  return false;
}

Capture synth_capture(const Scene& scene, const std::vector<CameraPose>& cameras, bool occlusion,
                      const GridSpec& spec, const SynthOptions& opt) {
  if (cameras.empty()) throw InvalidArgument("capture needs at least one camera");
  const auto samples = scene_surface_samples(scene, spec, opt);
  Capture cap;
  cap.fingers = scene.fingers;
  for (const auto& cam : cameras) {
    CameraCloud cc;
    cc.pose = cam;
    const Vec3 eye = cam.position();
    for (const auto& s : samples) {
      if (occlusion) {
        if (s.normal.dot(eye - s.point) <= 0.0) continue;
        const int own = s.cls == SemanticClass::FingerA ? 0 : s.cls == SemanticClass::FingerB ? 1 : -1;
        if (occluded_by_fingers(s.point, eye, scene.fingers, own)) continue;
      }
      cc.cloud.push_back(s.point, s.color);
    }
    cap.clouds.push_back(std::move(cc));
  }
  return cap;
}

std::string format_poses(const std::vector<CameraPose>& poses) {
  std::string out;
  for (const auto& p : poses) {
    out += std::to_string(p.id);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) out += " " + format_double(p.camera_to_world(r, c));
    out += "\n";
  }
  return out;
}

std::vector<CameraPose> parse_poses(const std::string& text) {
  std::vector<CameraPose> out;
  std::istringstream in(text);
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t here = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream ls(line);
    CameraPose p;
    if (!(ls >> p.id)) throw ParseError("pose line must start with a camera id", here);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        if (!(ls >> p.camera_to_world(r, c))) throw ParseError("pose line needs 16 matrix entries", here);
    std::string extra;
    if (ls >> extra) throw ParseError("unexpected trailing field '" + extra + "' in pose line", here);
    out.push_back(p);
  }
  return out;
}

namespace {

std::string camera_file(int id) { return "camera_" + std::to_string(id) + ".ply"; }

}  // namespace

void write_capture(const Capture& capture, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<CameraPose> poses;
  for (const auto& cc : capture.clouds) {
    poses.push_back(cc.pose);
    const Eigen::Matrix3d R = cc.pose.camera_to_world.block<3, 3>(0, 0);
    const Vec3 t = cc.pose.position();
    PlyData ply;
    for (std::size_t i = 0; i < cc.cloud.size(); ++i) {
      ply.vertices.push_back(R.transpose() * (cc.cloud.points[i] - t));
      ply.colors.push_back(cc.cloud.colors[i]);
    }
    write_ply(ply, (std::filesystem::path(dir) / camera_file(cc.pose.id)).string());
  }
  write_text_file((std::filesystem::path(dir) / "poses.txt").string(), format_poses(poses));
  if (capture.fingers) {
    std::string f = "# center_x center_y center_z radius length (vertical capsules)\n";
    for (const auto& c : *capture.fingers)
      f += format_double(c.center.x()) + " " + format_double(c.center.y()) + " " + format_double(c.center.z()) +
           " " + format_double(c.radius) + " " + format_double(c.length) + "\n";
    write_text_file((std::filesystem::path(dir) / "fingers.txt").string(), f);
  }
}

Capture read_capture(const std::string& dir) {
  Capture cap;
  const auto poses = parse_poses(read_text_file((std::filesystem::path(dir) / "poses.txt").string()));
  for (const auto& pose : poses) {
    const PlyData ply = read_ply((std::filesystem::path(dir) / camera_file(pose.id)).string());
    CameraCloud cc;
    cc.pose = pose;
    const Eigen::Matrix3d R = pose.camera_to_world.block<3, 3>(0, 0);
    const Vec3 t = pose.position();
    for (std::size_t i = 0; i < ply.vertices.size(); ++i)
      cc.cloud.push_back(R * ply.vertices[i] + t, ply.colors.empty() ? Rgb{} : ply.colors[i]);
    cap.clouds.push_back(std::move(cc));
  }
  const auto fpath = std::filesystem::path(dir) / "fingers.txt";
  if (std::filesystem::exists(fpath)) {
    std::istringstream in(read_text_file(fpath.string()));
    std::array<Capsule, 2> caps;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (n >= 2) throw ParseError("fingers file lists more than two capsules", 0);
      std::istringstream ls(line);
      Capsule& c = caps[n++];
      if (!(ls >> c.center.x() >> c.center.y() >> c.center.z() >> c.radius >> c.length))
        throw ParseError("fingers line needs five numbers", 0);
    }
    if (n != 2) throw ParseError("fingers file must list two capsules", 0);
    cap.fingers = caps;
  }
  return cap;
}

Aabb PlatformSpec::bounds() const {
  return {Vec3(-0.5 * size.x(), -0.5 * size.y(), plane_height),
          Vec3(0.5 * size.x(), 0.5 * size.y(), plane_height + size.z())};
}

namespace {

PointCloud box_filter(const PointCloud& in, const Aabb& box) {
  PointCloud out;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (box.contains(in.points[i])) out.push_back(in.points[i], in.colors[i]);
  return out;
}

}  // namespace

PointCloud mask_platform(const Capture& capture, const PlatformSpec& spec) {
  if ((spec.size.array() <= 0.0).any()) throw InvalidArgument("platform extents must be positive");
  PointCloud out;
  const Aabb box = spec.bounds();
  for (const auto& cc : capture.clouds) out.append(box_filter(cc.cloud, box));
  return out;
}

PointCloud crop_roi(const PointCloud& cloud, const Aabb& roi) {
  if (roi.degenerate()) throw InvalidArgument("region of interest has zero extent");
  return box_filter(cloud, roi);
}

ColorSegments color_segment(const PointCloud& cloud, const ColorTable& table, int tolerance) {
  if (tolerance < 0) throw InvalidArgument("color tolerance must be nonnegative");
  ColorSegments out;
  auto channel_gap = [](Rgb a, Rgb b) {
    return std::max({std::abs(int(a.r) - int(b.r)), std::abs(int(a.g) - int(b.g)), std::abs(int(a.b) - int(b.b))});
  };
  auto sq = [](Rgb a, Rgb b) {
    const int dr = int(a.r) - int(b.r), dg = int(a.g) - int(b.g), db = int(a.b) - int(b.b);
    return dr * dr + dg * dg + db * db;
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Rgb c = cloud.colors[i];
    const bool obj = channel_gap(c, table.plasticine) <= tolerance;
    const bool grip = channel_gap(c, table.gripper) <= tolerance;
    PointCloud* dst = &out.rejected;
    if (obj && grip) {
      dst = sq(c, table.plasticine) <= sq(c, table.gripper) ? &out.object : &out.gripper;
    } else if (obj) {
      dst = &out.object;
    } else if (grip) {
      dst = &out.gripper;
    }
    dst->push_back(cloud.points[i], c);
  }
  if (out.object.empty()) throw Error("no point matches the plasticine color");
  return out;
}

DbscanResult dbscan(std::span<const Vec3> points, double eps, std::size_t min_pts) {
  if (!(eps > 0)) throw InvalidArgument("DBSCAN radius must be positive");
  if (min_pts < 1) throw InvalidArgument("DBSCAN min_pts must be at least 1");
  const std::size_t n = points.size();
  DbscanResult res;
  res.labels.assign(n, -1);
  if (n == 0) return res;
  const KdTree tree(points);
  const double eps2 = eps * eps;
  std::vector<std::vector<std::size_t>> nbrs(n);
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    nbrs[i] = tree.within(points[i], eps2);
    core[i] = nbrs[i].size() >= min_pts;
  }
  // Components of the core graph, numbered by lowest member index.
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || res.labels[i] >= 0) continue;
    const int id = res.clusters++;
    std::deque<std::size_t> queue{i};
    res.labels[i] = id;
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      for (auto j : nbrs[q])
        if (core[j] && res.labels[j] < 0) {
          res.labels[j] = id;
          queue.push_back(j);
        }
    }
  }
  auto lex_less = [](const Vec3& a, const Vec3& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (auto j : nbrs[i]) {
      if (!core[j]) continue;
      const double d = sq_dist(points[i], points[j]);
      if (!best || d < best_d || (d == best_d && lex_less(points[j], points[*best]))) {
        best = j;
        best_d = d;
      }
    }
    if (best) res.labels[i] = res.labels[*best];
  }
  return res;
}

Primitives dbscan_primitives(const PointCloud& gripper, double eps, std::size_t min_pts) {
  if (gripper.empty()) throw InvalidArgument("no gripper points to cluster");
  Primitives out;
  out.clustering = dbscan(gripper.points, eps, min_pts);
  const int k = out.clustering.clusters;
  if (k < 2) throw Error("fingers not separable: found " + std::to_string(k) + " cluster(s)");
  std::vector<std::size_t> sizes(k, 0);
  for (int l : out.clustering.labels)
    if (l >= 0) ++sizes[l];
  std::vector<int> ids(k);
  for (int i = 0; i < k; ++i) ids[i] = i;
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) { return sizes[a] > sizes[b]; });
  std::array<PointCloud, 2> two;
  for (std::size_t i = 0; i < gripper.size(); ++i) {
    const int l = out.clustering.labels[i];
    if (l == ids[0]) two[0].push_back(gripper.points[i], gripper.colors[i]);
    if (l == ids[1]) two[1].push_back(gripper.points[i], gripper.colors[i]);
  }
  auto centroid = [](const PointCloud& c) {
    Vec3 s = Vec3::Zero();
    for (const auto& p : c.points) s += p;
    return Vec3(s / double(c.size()));
  };
  const Vec3 c0 = centroid(two[0]), c1 = centroid(two[1]);
  const bool swap = c1.x() < c0.x() || (c1.x() == c0.x() && c1.y() < c0.y());
  out.clouds[0] = std::move(two[swap ? 1 : 0]);
  out.clouds[1] = std::move(two[swap ? 0 : 1]);
  return out;
}

Refined refine_with_capsules(const PointCloud& object, const std::array<PointCloud, 2>& primitives,
                             const std::array<Capsule, 2>& capsules, double dilation) {
  if (!(dilation >= 0)) throw InvalidArgument("dilation must be nonnegative");
  Refined out;
  out.primitives = primitives;
  for (std::size_t i = 0; i < object.size(); ++i) {
    const Vec3& p = object.points[i];
    int target = -1;
    double best = 0.0;
    for (int f = 0; f < 2; ++f) {
      const double gap = capsules[f].axis_distance(p) - capsules[f].radius;
      if (gap <= dilation && (target < 0 || gap < best)) {
        target = f;
        best = gap;
      }
    }
    if (target < 0) {
      out.object.push_back(p, object.colors[i]);
    } else {
      out.primitives[target].push_back(p, object.colors[i]);
      out.removed.push_back(p, object.colors[i]);
      ++out.moved;
    }
  }
  return out;
}

namespace {

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

double cloud_axis_gap(const PointCloud& c, const Capsule& cap) {
  Vec3 s = Vec3::Zero();
  for (const auto& p : c.points) s += p;
  return cap.axis_distance(s / double(c.size()));
}

}  // namespace

GroundTruth generate_ground_truth(const Capture& capture, const GroundTruthConfig& cfg) {
  GroundTruth gt;
  const Vec3 vs = cfg.grid.size();
  if (std::abs(vs.x() - vs.y()) > 1e-9 || std::abs(vs.x() - vs.z()) > 1e-9)
    throw StageError("configure", "fill needs cubic voxels");
  std::size_t total = 0;
  for (const auto& cc : capture.clouds) total += cc.cloud.size();
  gt.report.push_back({"capture", total});

  const PointCloud raw = stage("mask_platform", [&] {
    PointCloud c = mask_platform(capture, cfg.platform);
    if (c.empty()) throw Error("no points inside the platform bounds");
    return c;
  });
  gt.report.push_back({"mask_platform", raw.size()});
  const PointCloud roi = stage("crop_roi", [&] {
    PointCloud c = crop_roi(raw, cfg.roi);
    if (c.empty()) throw Error("no points inside the region of interest");
    return c;
  });
  gt.report.push_back({"crop_roi", roi.size()});
  const ColorSegments seg = stage("color_segment", [&] { return color_segment(roi, cfg.colors, cfg.color_tolerance); });
  gt.report.push_back({"color_segment.object", seg.object.size()});
  gt.report.push_back({"color_segment.gripper", seg.gripper.size()});
  gt.report.push_back({"color_segment.rejected", seg.rejected.size()});
  Primitives prim = stage("dbscan_primitives", [&] {
    try {
      return dbscan_primitives(seg.gripper, cfg.dbscan_eps, cfg.dbscan_min_pts);
    } catch (const Error&) {
      // Closed fingers can sit nearer than eps; the gap is at least two voxels.
      return dbscan_primitives(seg.gripper, 0.5 * cfg.dbscan_eps, cfg.dbscan_min_pts);
    }
  });
  gt.report.push_back({"dbscan_primitives.first", prim.clouds[0].size()});
  gt.report.push_back({"dbscan_primitives.second", prim.clouds[1].size()});

  const Refined ref = stage("refine_with_capsules", [&] {
    if (!capture.fingers) throw Error("capture carries no finger poses");
    const auto& caps = *capture.fingers;
    // Pair clusters with capsules so cluster order does not decide labels.
    const double straight = cloud_axis_gap(prim.clouds[0], caps[0]) + cloud_axis_gap(prim.clouds[1], caps[1]);
    const double crossed = cloud_axis_gap(prim.clouds[0], caps[1]) + cloud_axis_gap(prim.clouds[1], caps[0]);
    if (crossed < straight) std::swap(prim.clouds[0], prim.clouds[1]);
    return refine_with_capsules(seg.object, prim.clouds, caps, cfg.dilation);
  });
  gt.report.push_back({"refine_with_capsules.moved", ref.moved});

  // Where refinement took contact points away, the finger surface closes the
  // object shell: wall samples within the object's height range and within
  // reach of it in plan view. Finger labels outrank the object on overlap.
  PointCloud object = ref.object;
  if (!ref.removed.empty()) {
    std::vector<Vec3> plan;
    double z_lo = std::numeric_limits<double>::infinity(), z_hi = -z_lo;
    for (const auto* c : {&ref.object, &ref.removed})
      for (const auto& p : c->points) {
        plan.emplace_back(p.x(), p.y(), 0.0);
        z_lo = std::min(z_lo, p.z());
        z_hi = std::max(z_hi, p.z());
      }
    const KdTree near(plan);
    const double reach = cfg.wall_reach;
    std::vector<SurfaceSample> wall;
    for (const auto& c : *capture.fingers) sample_capsule(c, SemanticClass::FingerA, vs.x() / 3.0, wall);
    const Rgb color = cfg.colors.plasticine;
    for (const auto& w : wall) {
      if (w.point.z() < z_lo || w.point.z() > z_hi) continue;
      if (near.nearest(Vec3(w.point.x(), w.point.y(), 0.0)).sq_distance <= reach * reach) object.push_back(w.point, color);
    }
  }
  gt.report.push_back({"refine_with_capsules.object", object.size()});

  const std::array<std::pair<const PointCloud*, SemanticClass>, 3> objects{{
      {&object, SemanticClass::Plasticine},
      {&ref.primitives[0], SemanticClass::FingerA},
      {&ref.primitives[1], SemanticClass::FingerB},
  }};
  FillConfig fc;
  fc.voxel_size = vs.x();
  fc.alignment = cfg.grid.min_corner();
  fc.r_fill = cfg.r_fill;
  fc.close_iters = cfg.close_iters;
  std::array<TriMesh, 3> meshes;
  stage("fill_watertight", [&] {
    for (std::size_t o = 0; o < objects.size(); ++o) {
      const auto& [cloud, cls] = objects[o];
      if (cloud->empty()) throw Error(std::string(to_string(cls)) + " has no points left");
      FillConfig local = fc;
      FilledSolid solid = fill_watertight(cloud->points, local);
      while (cls == SemanticClass::Plasticine && solid.surface_only &&
             local.close_iters < fc.close_iters + cfg.max_extra_close) {
        ++local.close_iters;
        solid = fill_watertight(cloud->points, local);
      }
      if (solid.surface_only) gt.surface_only.emplace_back(to_string(cls));
      gt.report.push_back({"fill_watertight." + std::string(to_string(cls)), solid.count()});
      meshes[o] = extract_surface(solid, cloud->points, cloud->colors);
    }
    return 0;
  });

  gt.grid = stage("label", [&] {
    PlaneSpec plane;
    plane.size = Vec3(cfg.platform.size.x(), cfg.platform.size.y(), vs.z());
    plane.top_z = cfg.platform.plane_height;
    OccupancyGridBuilder b(label_plane(OccupancyGridBuilder(cfg.grid).view(), plane));
    for (std::size_t o = 0; o < objects.size(); ++o) label_mesh(b, meshes[o], objects[o].second);
    OccupancyGrid g = std::move(b).build();
    for (std::size_t o = 0; o < objects.size(); ++o) {
      ColorAssignment ca = assign_colors(g, meshes[o], objects[o].second);
      gt.uncolored += ca.flagged.size();
      g = std::move(ca.grid);
    }
    return threshold_and_crop(g, cfg.theta, cfg.roi);
  });
  for (auto c : {SemanticClass::Plane, SemanticClass::Plasticine, SemanticClass::FingerA, SemanticClass::FingerB})
    gt.report.push_back({"label." + std::string(to_string(c)), gt.grid.count(c)});
  return gt;
}

std::string format_report(const GroundTruth& gt) {
  std::string out = "# stage count\n";
  for (const auto& s : gt.report) out += s.stage + " " + std::to_string(s.count) + "\n";
  for (const auto& s : gt.surface_only) out += "surface_only " + s + "\n";
  out += "uncolored_voxels " + std::to_string(gt.uncolored) + "\n";
  return out;
}

OccupancyGrid voxelize_scene(const Scene& scene, const GroundTruthConfig& cfg) {
  PlaneSpec plane;
  plane.size = Vec3(cfg.platform.size.x(), cfg.platform.size.y(), cfg.grid.size().z());
  plane.top_z = cfg.platform.plane_height;
  return threshold_and_crop(label_plane(rasterize(scene, cfg.grid, true), plane), cfg.theta, cfg.roi);
}

double class_agreement(const OccupancyGrid& a, const OccupancyGrid& b) {
  if (!(a.spec() == b.spec())) throw InvalidArgument("grids differ in geometry");
  std::size_t both = 0, same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a.occupied(i) && !b.occupied(i)) continue;
    ++both;
    same += a.cls(i) == b.cls(i);
  }
  return both == 0 ? 1.0 : double(same) / double(both);
}

double class_iou(const OccupancyGrid& a, const OccupancyGrid& b, SemanticClass c) {
  if (!(a.spec() == b.spec())) throw InvalidArgument("grids differ in geometry");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.cls(i) == c, y = b.cls(i) == c;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

}  // namespace occshape
