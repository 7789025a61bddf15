#include <algorithm>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "occshape/kdtree.hpp"
#include "occshape/pipeline.hpp"
#include "support/oracles.hpp"

using namespace occshape;

namespace {

PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double lo, double hi, Rgb color = {}) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.push_back(oracle::random_point(rng, lo, hi), color);
  return c;
}

Capture single_camera(const PointCloud& c) {
  Capture cap;
  cap.clouds.push_back({CameraPose{}, c});
  return cap;
}

// Reference DBSCAN: core test by linear scan, clusters as connected core
// components, border points joining the nearest core (lexicographic tie).
std::vector<std::set<std::size_t>> dbscan_naive(const std::vector<Vec3>& p, double eps, std::size_t min_pts,
                                                std::set<std::size_t>& noise) {
  const std::size_t n = p.size();
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) c += (p[i] - p[j]).norm() <= eps;
    core[i] = c >= min_pts;
  }
  std::vector<int> comp(n, -1);
  int k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || comp[i] >= 0) continue;
    std::vector<std::size_t> stack{i};
    comp[i] = k;
    while (!stack.empty()) {
      const std::size_t q = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < n; ++j)
        if (core[j] && comp[j] < 0 && (p[q] - p[j]).norm() <= eps) {
          comp[j] = k;
          stack.push_back(j);
        }
    }
    ++k;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    std::size_t bj = n;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (p[i] - p[j]).norm();
      if (!core[j] || d > eps) continue;
      const bool tie = d == best && std::lexicographical_compare(p[j].data(), p[j].data() + 3, p[bj].data(),
                                                                 p[bj].data() + 3);
      if (d < best || tie) {
        best = d;
        bj = j;
      }
    }
    if (bj < n) comp[i] = comp[bj];
  }
  std::vector<std::set<std::size_t>> out(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (comp[i] < 0) noise.insert(i);
    else out[comp[i]].insert(i);
  }
  return out;
}

std::set<std::set<std::size_t>> partition(const DbscanResult& r, std::set<std::size_t>& noise) {
  std::map<int, std::set<std::size_t>> m;
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    if (r.labels[i] < 0) noise.insert(i);
    else m[r.labels[i]].insert(i);
  }
  std::set<std::set<std::size_t>> out;
  for (auto& [_, s] : m) out.insert(s);
  return out;
}

}  // namespace

TEST_CASE("platform mask and ROI crop keep exactly the points inside the boxes") {
  std::mt19937_64 rng(81);
  PlatformSpec spec;
  spec.size = {0.3, 0.2, 0.1};
  const PointCloud a = random_cloud(rng, 500, -0.3, 0.3), b = random_cloud(rng, 300, -0.3, 0.3);
  Capture cap;
  cap.clouds.push_back({CameraPose{}, a});
  cap.clouds.push_back({CameraPose{}, b});
  const PointCloud m = mask_platform(cap, spec);
  std::size_t expect = 0;
  for (const auto* c : {&a, &b})
    for (const auto& p : c->points)
      expect += std::abs(p.x()) <= 0.15 && std::abs(p.y()) <= 0.1 && p.z() >= 0.0 && p.z() <= 0.1;
  CHECK(m.size() == expect);
  for (const auto& p : m.points) CHECK(spec.bounds().contains(p));

  const Aabb roi{{-0.05, -0.05, 0.0}, {0.05, 0.05, 0.05}};
  const PointCloud r = crop_roi(m, roi);
  std::size_t in = 0;
  for (const auto& p : m.points) in += roi.contains(p);
  CHECK(r.size() == in);
  CHECK_THROWS_AS(crop_roi(m, Aabb{{0, 0, 0}, {0, 1, 1}}), InvalidArgument);
  spec.size.x() = 0;
  CHECK_THROWS_AS(mask_platform(cap, spec), InvalidArgument);
}

TEST_CASE("color segmentation") {
  const ColorTable t;
  PointCloud c;
  const Rgb p = t.plasticine, g = t.gripper;
  c.push_back({0, 0, 0}, p);
  c.push_back({1, 0, 0}, Rgb{std::uint8_t(p.r), std::uint8_t(std::min(255, p.g + 30)), p.b});  // at the tolerance
  c.push_back({2, 0, 0}, Rgb{std::uint8_t(p.r), std::uint8_t(std::min(255, p.g + 31)), p.b});
  c.push_back({3, 0, 0}, g);
  c.push_back({4, 0, 0}, Rgb{255, 255, 255});
  const ColorSegments s = color_segment(c, t, 30);
  CHECK(s.object.size() == 2);
  CHECK(s.gripper.size() == 1);
  CHECK(s.rejected.size() == 2);
  CHECK(s.object.size() + s.gripper.size() + s.rejected.size() == c.size());

  // Both references within tolerance: nearer wins, equal distance goes to the object.
  ColorTable close{Rgb{100, 100, 100}, Rgb{110, 100, 100}};
  PointCloud d;
  d.push_back({0, 0, 0}, Rgb{105, 100, 100});
  d.push_back({0, 0, 0}, Rgb{108, 100, 100});
  const ColorSegments e = color_segment(d, close, 30);
  CHECK(e.object.size() == 1);
  CHECK(e.gripper.size() == 1);

  PointCloud none;
  none.push_back({0, 0, 0}, g);
  CHECK_THROWS(color_segment(none, t, 30));
}

TEST_CASE("DBSCAN matches the naive reference and ignores point order") {
  std::mt19937_64 rng(82);
  for (int t = 0; t < 20; ++t) {
    std::vector<Vec3> pts;
    for (int c = 0; c < 3; ++c) {
      const Vec3 cen = oracle::random_point(rng, -1, 1);
      for (int i = 0; i < 25; ++i) pts.push_back(cen + 0.08 * oracle::random_point(rng, -1, 1));
    }
    for (int i = 0; i < 10; ++i) pts.push_back(oracle::random_point(rng, -1.5, 1.5));
    const double eps = 0.06;
    const std::size_t min_pts = 4;

    // Compare cores and core components; border assignment is checked by rule below.
    const DbscanResult r = dbscan(pts, eps, min_pts);
    std::set<std::size_t> noise_ref, noise;
    const auto ref = dbscan_naive(pts, eps, min_pts, noise_ref);
    const auto got = partition(r, noise);
    CHECK(noise == noise_ref);
    CHECK(got.size() == ref.size());
    CHECK(r.clusters == static_cast<int>(ref.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (r.labels[i] < 0) continue;
      // Every labeled point shares its label with its nearest core within eps.
      std::size_t cores = 0;
      std::size_t best = i;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < pts.size(); ++j) {
        std::size_t c = 0;
        for (const auto& q : pts) c += (pts[j] - q).norm() <= eps;
        if (c < min_pts) continue;
        ++cores;
        const double d = (pts[i] - pts[j]).norm();
        if (d <= eps && d < bd) bd = d, best = j;
      }
      CHECK(cores > 0);
      CHECK(r.labels[best] == r.labels[i]);
    }

    // Permuted input yields the same partition.
    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Vec3> shuffled;
    for (auto i : perm) shuffled.push_back(pts[i]);
    const DbscanResult rs = dbscan(shuffled, eps, min_pts);
    std::set<std::size_t> ns;
    std::set<std::set<std::size_t>> back;
    for (const auto& s : partition(rs, ns)) {
      std::set<std::size_t> orig;
      for (auto i : s) orig.insert(perm[i]);
      back.insert(orig);
    }
    CHECK(back == got);
  }
  CHECK_THROWS_AS(dbscan(std::vector<Vec3>{}, 0.0, 3), InvalidArgument);
}

TEST_CASE("two finger primitives ordered by centroid") {
  std::mt19937_64 rng(83);
  PointCloud g;
  for (int i = 0; i < 60; ++i) g.push_back(Vec3(0.03, 0, 0.02) + 0.0008 * oracle::random_point(rng, -1, 1), {});
  for (int i = 0; i < 80; ++i) g.push_back(Vec3(-0.03, 0, 0.02) + 0.0008 * oracle::random_point(rng, -1, 1), {});
  for (int i = 0; i < 10; ++i) g.push_back(Vec3(0, 0.05, 0.02) + 0.0008 * oracle::random_point(rng, -1, 1), {});
  const Primitives p = dbscan_primitives(g, 0.003, 4);
  CHECK(p.clouds[0].size() == 80);
  CHECK(p.clouds[1].size() == 60);
  CHECK(p.clouds[0].points[0].x() < 0);

  PointCloud one;
  for (int i = 0; i < 30; ++i) one.push_back(0.0008 * oracle::random_point(rng, -1, 1), {});
  CHECK_THROWS(dbscan_primitives(one, 0.003, 4));
}

TEST_CASE("capsule refinement moves exactly the points within reach") {
  std::mt19937_64 rng(84);
  std::array<Capsule, 2> caps;
  caps[0] = Capsule{Vec3(-0.02, 0, 0.03), Vec3::UnitZ(), 0.008, 0.048};
  caps[1] = Capsule{Vec3(0.02, 0, 0.03), Vec3::UnitZ(), 0.008, 0.048};
  const PointCloud obj = random_cloud(rng, 2000, -0.04, 0.06);
  const double dil = 0.002;
  const Refined r = refine_with_capsules(obj, {}, caps, dil);
  std::size_t expect = 0;
  for (const auto& p : obj.points) {
    const Vec3 a = caps[0].segment_a(), b = caps[0].segment_b();
    const double d0 = (p - closest_point_on_segment(p, a, b)).norm() - 0.008;
    const double d1 = (p - closest_point_on_segment(p, caps[1].segment_a(), caps[1].segment_b())).norm() - 0.008;
    expect += std::min(d0, d1) <= dil;
  }
  CHECK(r.moved == expect);
  CHECK(r.object.size() + r.moved == obj.size());
  CHECK(r.primitives[0].size() + r.primitives[1].size() == r.moved);
  for (const auto& p : r.primitives[1].points) CHECK(caps[1].axis_distance(p) <= caps[0].axis_distance(p));
}

TEST_CASE("finger occlusion ray test") {
  std::array<Capsule, 2> caps;
  caps[0] = Capsule{Vec3(0.0, 0, 0.03), Vec3::UnitZ(), 0.008, 0.048};
  caps[1] = Capsule{Vec3(0.5, 0.5, 0.03), Vec3::UnitZ(), 0.008, 0.048};
  const Vec3 cam(0.3, 0, 0.03);
  CHECK(occluded_by_fingers(Vec3(-0.1, 0, 0.03), cam, caps));
  CHECK_FALSE(occluded_by_fingers(Vec3(-0.1, 0.05, 0.03), cam, caps));
  CHECK_FALSE(occluded_by_fingers(Vec3(0.1, 0, 0.03), cam, caps));
  // A sample on the finger surface is not hidden by its own finger.
  CHECK_FALSE(occluded_by_fingers(Vec3(0.008, 0, 0.03), cam, caps, 0));
  // Above the top tip the ray clears the capsule.
  CHECK_FALSE(occluded_by_fingers(Vec3(-0.1, 0, 0.07), Vec3(0.3, 0, 0.07), caps));
}

TEST_CASE("capture files and pose text round trip") {
  const Scene s = make_block_scene();
  const Capture c = synth_capture(s, default_cameras(), true);
  REQUIRE(c.clouds.size() == 6);
  const auto dir = std::filesystem::temp_directory_path() / "occshape_capture_test";
  std::filesystem::remove_all(dir);
  write_capture(c, dir.string());
  const Capture back = read_capture(dir.string());
  REQUIRE(back.clouds.size() == c.clouds.size());
  for (std::size_t i = 0; i < c.clouds.size(); ++i) {
    REQUIRE(back.clouds[i].cloud.size() == c.clouds[i].cloud.size());
    CHECK((back.clouds[i].pose.camera_to_world - c.clouds[i].pose.camera_to_world).norm() <= 1e-12);
    double err = 0;
    for (std::size_t j = 0; j < c.clouds[i].cloud.size(); ++j) {
      err = std::max(err, (back.clouds[i].cloud.points[j] - c.clouds[i].cloud.points[j]).norm());
      CHECK(back.clouds[i].cloud.colors[j] == c.clouds[i].cloud.colors[j]);
    }
    CHECK(err <= 1e-9);
  }
  const auto poses = parse_poses(format_poses({c.clouds[0].pose, c.clouds[3].pose}));
  CHECK(poses.size() == 2);
  CHECK(poses[1].id == c.clouds[3].pose.id);
  CHECK_THROWS(parse_poses("0 1 2 3\n"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("occlusion-free capture reproduces the scene") {
  const Scene s = make_block_scene();
  const Capture c = synth_capture(s, default_cameras(), false);
  const GroundTruth gt = generate_ground_truth(c);
  const OccupancyGrid direct = voxelize_scene(s);
  CHECK(class_agreement(gt.grid, direct) >= 0.97);
  CHECK(class_iou(gt.grid, direct, SemanticClass::Plasticine) >= 0.9);
  CHECK(format_report(gt).find("mask_platform") != std::string::npos);
}

TEST_CASE("empty capture fails in the platform stage") {
  Capture c = single_camera(PointCloud{});
  try {
    generate_ground_truth(c);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "mask_platform");
  }
  // Fingers missing from the capture metadata fail refinement.
  Capture nofingers = synth_capture(make_block_scene(), default_cameras(), false);
  nofingers.fingers.reset();
  try {
    generate_ground_truth(nofingers);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "refine_with_capsules");
  }
}

TEST_CASE("agreement and IoU definitions") {
  OccupancyGridBuilder a(GridSpec::workspace()), b(GridSpec::workspace());
  a.set(0, SemanticClass::Plasticine, 1.0f, {});
  a.set(1, SemanticClass::Plasticine, 1.0f, {});
  b.set(1, SemanticClass::Plasticine, 1.0f, {});
  b.set(2, SemanticClass::FingerA, 1.0f, {});
  const OccupancyGrid ga = std::move(a).build(), gb = std::move(b).build();
  CHECK(class_agreement(ga, gb) == doctest::Approx(1.0 / 3.0));
  CHECK(class_iou(ga, gb, SemanticClass::Plasticine) == doctest::Approx(0.5));
  CHECK(class_agreement(ga, ga) == 1.0);
}

TEST_CASE("deep pinch with occlusion still yields a solid object") {
  const Workspace ws;
  const Scene block = make_block_scene(ws);
  // Closed to under three voxels of finger gap: the two finger clouds lie within eps.
  GripperAction a{0.0, 0.0, ws.z_min(), 0.3, 0.09, 2 * ws.finger.radius + 0.0055};
  const Scene s = QuasiStaticPinchModel(ws).step(block, a);
  const GroundTruth gt = generate_ground_truth(synth_capture(s, default_cameras(), true, ws.grid));
  CHECK(std::find(gt.surface_only.begin(), gt.surface_only.end(), "plasticine") == gt.surface_only.end());
  CHECK(class_iou(gt.grid, voxelize_scene(s), SemanticClass::Plasticine) >= 0.9);
  CHECK(gt.grid.count(SemanticClass::FingerA) > 0);
  CHECK(gt.grid.count(SemanticClass::FingerB) > 0);
}
