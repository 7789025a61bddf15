// Acceptance criteria A1-A10: one PASS/FAIL line each. Pass criterion names
// on the command line to run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "occshape/dump.hpp"
#include "occshape/dynamics.hpp"
#include "occshape/experiment.hpp"
#include "occshape/feature_pyramid.hpp"
#include "occshape/metrics.hpp"
#include "occshape/pipeline.hpp"
#include "occshape/sampling.hpp"
#include "occshape/state_graph.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

using namespace occshape;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

VoxelSet transformed(const VoxelSet& s, const Eigen::Matrix3d& r, const Vec3& t) {
  VoxelSet out;
  for (const auto& p : s.points) out.push_back(r * p + t);
  return out;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized().toRotationMatrix();
}

std::size_t containment_violations(const Scene& s, const GripperAction& a, const Workspace& ws) {
  std::size_t n = 0;
  const double half = 0.5 * ws.finger.length - ws.finger.radius;
  for (const Vec3& p : s.plasticine.points) {
    if (p.z() < s.plane_height) ++n;
    for (const Vec3& c : {a.finger_a(a.l_end), a.finger_b(a.l_end)}) {
      const Vec3 q(c.x(), c.y(), std::clamp(p.z(), c.z() - half, c.z() + half));
      if ((p - q).norm() < ws.finger.radius) ++n;
    }
  }
  return n;
}

EpisodeSettings settings_for(const std::string& goal_lines, std::size_t pinches, std::uint64_t seed) {
  return episode_settings(Config::parse(goal_lines + "pinches = " + std::to_string(pinches) +
                                        "\nseed = " + std::to_string(seed) + "\n"));
}

EpisodeResult run(const EpisodeSettings& s) {
  const Workspace ws;
  const Goal goal = gen_goal(s.goal, ws, s.planner.k);
  const QuasiStaticPinchModel model(ws, s.pinch);
  return plan_episode(model, make_block_scene(ws), goal.dense, s.planner.pinches, s.planner);
}

std::string letter_goal(std::size_t i) { return std::string("goal = letter\nletter = ") + "XTK"[i % 3] + "\n"; }

// ---------------------------------------------------------------------------

Outcome a1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double emd_err = 0, cd_err = 0, dcd_err = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 8;
    const VoxelSet a = oracle::random_set(rng, n), b = oracle::random_set(rng, n);
    emd_err = std::max(emd_err, std::abs(emd(a, b) - oracle::emd_brute(a.points, b.points)));
  }
  std::uniform_real_distribution<double> alpha(1.0, 1000.0), lambda(0.05, 1.0);
  for (int t = 0; t < 200; ++t) {
    const VoxelSet a = oracle::random_set(rng, 1 + rng() % 50, -0.05, 0.05);
    const VoxelSet b = oracle::random_set(rng, 1 + rng() % 50, -0.05, 0.05);
    cd_err = std::max(cd_err, std::abs(chamfer(a, b) - oracle::chamfer_naive(a.points, b.points)));
    const DcdParams p{alpha(rng), lambda(rng)};
    dcd_err = std::max(dcd_err, std::abs(dcd(a, b, p) - oracle::dcd_naive(a.points, b.points, p.alpha, p.lambda)));
  }
  const double dt = seconds_since(t0);
  const bool ok = emd_err <= 1e-9 && cd_err <= 1e-9 && dcd_err <= 1e-9 && dt < 30.0;
  return {ok, fmt("max |err| emd %.2e cd %.2e dcd %.2e (tol 1e-9), %.1f s (limit 30 s)", emd_err, cd_err, dcd_err, dt)};
}

Outcome a2() {
  std::mt19937_64 rng(1002);
  std::size_t bad = 0;
  double sym = 0, rigid = 0, dcd_max = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 5 + rng() % 40;
    const VoxelSet a = oracle::random_set(rng, n, -0.03, 0.03), b = oracle::random_set(rng, n, -0.03, 0.03);
    const double e = emd(a, b), c = chamfer(a, b), d = dcd(a, b);
    sym = std::max({sym, std::abs(e - emd(b, a)), std::abs(c - chamfer(b, a)), std::abs(d - dcd(b, a))});
    if (!(e > 0) || !(c > 0)) ++bad;                                  // distinct sets
    if (emd(a, a) != 0.0 || chamfer(a, a) != 0.0 || dcd(a, a) != 0.0) ++bad;  // identical sets
    const VoxelSet b2 = oracle::random_set(rng, 1 + rng() % 60, -0.03, 0.03);
    for (const DcdParams& p : {DcdParams::training(), DcdParams::evaluation()}) {
      const double v = dcd(a, b2, p);
      dcd_max = std::max(dcd_max, v);
      if (!(v >= 0.0 && v < 1.0)) ++bad;
    }
    const Eigen::Matrix3d r = random_rotation(rng);
    const Vec3 tr = oracle::random_point(rng, -0.1, 0.1);
    const VoxelSet ra = transformed(a, r, tr), rb = transformed(b, r, tr);
    rigid = std::max({rigid, std::abs(emd(ra, rb) - e), std::abs(chamfer(ra, rb) - c)});
  }
  const bool ok = bad == 0 && sym <= 1e-9 && rigid <= 1e-9;
  return {ok, fmt("axiom violations %zu, asymmetry %.2e, rigid-motion drift %.2e (tol 1e-9), max dcd %.4f", bad, sym,
                  rigid, dcd_max)};
}

Outcome a3() {
  const auto t0 = Clock::now();
  std::vector<double> red;
  int improved = 0;
  std::string per;
  for (std::size_t s = 0; s < 10; ++s) {
    const EpisodeResult ep = run(settings_for(letter_goal(s), 5, s));
    const double first = ep.loss_curve.front(), last = ep.loss_curve.back();
    improved += last < first;
    red.push_back((first - last) / first);
    per += fmt(" %c:%.1f%%", "XTK"[s % 3], 100 * red.back());
  }
  const double med = median(red), dt = seconds_since(t0);
  const bool ok = improved >= 9 && med >= 0.30 && dt < 600.0;
  return {ok, fmt("improved %d/10 (need 9), median reduction %.1f%% (need 30%%), %.0f s (limit 600 s);", improved,
                  100 * med, dt) + per};
}

Outcome a4() {
  const auto t0 = Clock::now();
  double sum_shape = 0, sum_random = 0;
  int wins = 0;
  for (std::size_t s = 0; s < 10; ++s) {
    EpisodeSettings es = settings_for(letter_goal(s), 1, 100 + s);
    const double shape = run(es).loss_curve.at(1);
    es.planner.init_mode = InitMode::Random;
    const double random = run(es).loss_curve.at(1);
    sum_shape += shape;
    sum_random += random;
    wins += shape < random;
  }
  const double dt = seconds_since(t0);
  const bool ok = sum_shape <= sum_random && wins >= 7 && dt < 300.0;
  return {ok, fmt("mean loss after pinch 1: shape %.5f, random %.5f; wins %d/10 (need 7), %.0f s (limit 300 s)",
                  sum_shape / 10, sum_random / 10, wins, dt)};
}

Outcome a5() {
  const Workspace ws;
  const QuasiStaticPinchModel model(ws);
  std::vector<Scene> scenes{make_block_scene(ws)};
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const GripperAction a = random_init(scenes[0].plasticine, InitConfig::for_workspace(ws), ws, seed);
    scenes.push_back(model.step(scenes[0], a));
  }
  double min_agree = 1, min_iou = 1, max_dt = 0;
  for (const Scene& s : scenes) {
    const OccupancyGrid direct = voxelize_scene(s);
    auto t0 = Clock::now();
    const GroundTruth clean = generate_ground_truth(synth_capture(s, default_cameras(), false, ws.grid));
    max_dt = std::max(max_dt, seconds_since(t0));
    min_agree = std::min(min_agree, class_agreement(clean.grid, direct));
    t0 = Clock::now();
    const GroundTruth occl = generate_ground_truth(synth_capture(s, default_cameras(), true, ws.grid));
    max_dt = std::max(max_dt, seconds_since(t0));
    min_iou = std::min(min_iou, class_iou(occl.grid, direct, SemanticClass::Plasticine));
  }
  const bool ok = min_agree >= 0.97 && min_iou >= 0.9 && max_dt < 120.0;
  return {ok, fmt("%zu scenes: min class agreement %.4f (need 0.97), min occluded plasticine IoU %.4f (need 0.9), "
                  "slowest scene %.1f s (limit 120 s)",
                  scenes.size(), min_agree, min_iou, max_dt)};
}

Outcome a6() {
  const Workspace ws;
  const QuasiStaticPinchModel model(ws);
  const Scene s = make_block_scene(ws);
  std::mt19937_64 rng(1006);
  std::size_t count_bad = 0, violations = 0;
  double idem = 0, mirror = 0;
  for (int t = 0; t < 100; ++t) {
    const GripperAction a = scenes::random_pinch(rng, ws);
    const Scene once = model.step(s, a);
    count_bad += once.plasticine.size() != s.plasticine.size();
    const ConstraintReport r = check_constraints(once);
    violations += containment_violations(once, a, ws) + r.inside_capsule + r.below_plane;
    const Scene twice = model.step(once, a);
    for (std::size_t i = 0; i < once.plasticine.size(); ++i)
      idem = std::max(idem, (once.plasticine.points[i] - twice.plasticine.points[i]).norm());
    const Vec3 c = a.center(), n = a.direction();
    Scene m = s;
    for (auto& p : m.plasticine.points) p = scenes::mirror(p, c, n);
    const Scene out_m = model.step(m, a);
    for (std::size_t i = 0; i < once.plasticine.size(); ++i)
      mirror = std::max(mirror, (scenes::mirror(once.plasticine.points[i], c, n) - out_m.plasticine.points[i]).norm());
  }
  const bool ok = count_bad == 0 && violations == 0 && idem <= 1e-9 && mirror <= 1e-9;
  return {ok, fmt("100 pinches: count changes %zu, containment violations %zu, idempotence %.2e, mirror %.2e (tol 1e-9)",
                  count_bad, violations, idem, mirror)};
}

Outcome a7() {
  std::mt19937_64 rng(1007);
  int approx_bad = 0, det_bad = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 4 + rng() % 9, k = 1 + rng() % 3;
    const VoxelSet s = oracle::random_set(rng, n);
    const FpsResult r = farthest_point_sampling(s, k);
    if (oracle::cover_radius(s.points, r.indices) > 2.0 * oracle::optimal_k_center(s.points, k) + 1e-12) ++approx_bad;
    const auto ref = oracle::fps_naive(s.points, k, oracle::centroid_seed(s.points));
    if (farthest_point_sampling(s, k).indices != r.indices || r.indices != ref) ++det_bad;
  }
  const VoxelSet big = oracle::random_set(rng, 2000);
  if (farthest_point_sampling(big, 300).indices != farthest_point_sampling(big, 300).indices) ++det_bad;
  return {approx_bad == 0 && det_bad == 0,
          fmt("50 trials: 2-approximation failures %d, determinism/oracle mismatches %d", approx_bad, det_bad)};
}

Outcome a8() {
  GridSpec base;
  base.dims = {16, 12, 9};
  base.voxel_size = Eigen::Vector3f::Constant(0.002f);
  base.origin = {-0.016f, -0.012f, 0.0f};
  std::mt19937_64 rng(1008);

  // Affine BEV field in cell-index coordinates.
  const FeaturePyramid aff = make_pyramid(base, {1, 1, 1, 1, 2}, [](int level, const Index3& c, std::uint32_t k) {
    if (level != 4) return 0.0f;
    return k == 0 ? 0.5f * c[0] + 0.25f * c[1] + 1.0f : -0.75f * c[0] + 2.0f * c[1];
  });
  const double cell = 2.0 * double(base.voxel_size[0]);
  std::uniform_real_distribution<double> ux(double(base.origin[0]) + 0.5 * cell,
                                            double(base.origin[0]) + (aff.bev.dims[0] - 0.5) * cell);
  std::uniform_real_distribution<double> uy(double(base.origin[1]) + 0.5 * cell,
                                            double(base.origin[1]) + (aff.bev.dims[1] - 0.5) * cell);
  double bil = 0;
  for (int t = 0; t < 1000; ++t) {
    const Vec2 xy(ux(rng), uy(rng));
    const BevSample s = bev_lookup(aff.bev, base, xy);
    const double u = (xy.x() - double(base.origin[0])) / cell - 0.5, v = (xy.y() - double(base.origin[1])) / cell - 0.5;
    bil = std::max({bil, std::abs(s.feature[0] - (0.5 * u + 0.25 * v + 1.0)), std::abs(s.feature[1] - (-0.75 * u + 2.0 * v))});
  }

  const FeaturePyramid idx =
      make_pyramid(base, {3, 3, 3, 3, 1}, [](int, const Index3& c, std::uint32_t k) { return float(c[k < 3 ? k : 0]); });
  int stride_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const Index3 v{int(rng() % 16), int(rng() % 12), int(rng() % 9)};
    const StridedFeatures s = strided_lookup(idx, base, v);
    const int strides[3] = {8, 4, 2};
    for (int l = 0; l < 3; ++l)
      for (int a = 0; a < 3; ++a) stride_bad += s.cells[l][a] != v[a] / strides[l] || s.features[l][a] != float(v[a] / strides[l]);
  }

  const FeaturePyramid sent = make_pyramid(base, {1, 2, 3, 4, 2}, [](int level, const Index3&, std::uint32_t k) {
    return float(100 * (level + 1) + k);
  });
  VoxelSet nodes;
  for (int i = 0; i < 10; ++i) nodes.push_back(base.center(Index3{int(rng() % 16), int(rng() % 12), int(rng() % 9)}));
  const Eigen::MatrixXd f = aggregate_node_features(sent, base, build_graph(nodes, {}, 0.009));
  const double expect[] = {400, 401, 402, 403, 300, 301, 302, 200, 201, 500, 501};
  int order_bad = f.cols() != 11;
  if (!order_bad)
    for (long r = 0; r < f.rows(); ++r)
      for (long c = 0; c < 11; ++c) order_bad += f(r, c) != expect[c];

  const bool ok = bil <= 1e-12 && stride_bad == 0 && order_bad == 0;
  return {ok, fmt("bilinear max err %.2e (tol 1e-12), strided mismatches %d/1000, concatenation mismatches %d", bil,
                  stride_bad, order_bad)};
}

Outcome a9() {
  const auto t0 = Clock::now();
  GoalSpec spec;
  spec.source = GoalSource::Stamp;
  spec.h1 = 0.02;
  spec.h2 = 0.01;
  const Goal g = gen_goal(spec);
  // Layers holding the full footprint versus layers holding the top only.
  std::size_t full = 0, top = 0;
  const auto layers = layer_counts(g.grid);
  const std::size_t widest = *std::max_element(layers.begin(), layers.end());
  for (auto n : layers) {
    if (n == 0) continue;
    (n == widest ? full : top) += 1;
  }
  const double ratio = top ? double(full) / double(top) : 0.0;
  const bool ratio_ok = top > 0 && std::abs(double(full) - 2.0 * double(top)) <= 1.0;

  int hits = 0;
  std::string per;
  for (std::size_t s = 0; s < 10; ++s) {
    const EpisodeResult ep = run(settings_for("goal = stamp\nstamp_h1 = 0.02\nstamp_h2 = 0.01\n", 3, s));
    const double r = (ep.loss_curve.front() - ep.loss_curve.back()) / ep.loss_curve.front();
    hits += r >= 0.2;
    per += fmt(" %.1f%%", 100 * r);
  }
  const bool ok = ratio_ok && hits >= 8;
  return {ok, fmt("layer ratio %zu/%zu = %.2f (need 2.0 +- 1 layer), seeds with >= 20%% reduction %d/10 (need 8), %.0f s;",
                  full, top, ratio, hits, seconds_since(t0)) + per};
}

OccupancyGrid random_grid(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> dim(1, 8);
  std::uniform_int_distribution<int> cls(0, 5), byte(0, 255);
  std::uniform_real_distribution<float> u(0.0f, 1.0f), off(-1.0f, 1.0f);
  GridSpec s;
  s.dims = {dim(rng), dim(rng), dim(rng)};
  s.voxel_size = {0.001f + u(rng), 0.001f + u(rng), 0.001f + u(rng)};
  s.origin = {off(rng), off(rng), off(rng)};
  OccupancyGridBuilder b(s);
  for (std::size_t i = 0; i < s.voxel_count(); ++i) {
    const auto c = static_cast<SemanticClass>(cls(rng));
    const float p = c == SemanticClass::Empty ? 0.4f * u(rng) : u(rng);
    b.set(i, c, p, Rgb{std::uint8_t(byte(rng)), std::uint8_t(byte(rng)), std::uint8_t(byte(rng))});
  }
  return std::move(b).build();
}

Outcome a10() {
  std::mt19937_64 rng(1010);
  int occ_bad = 0, fpy_bad = 0;
  for (int t = 0; t < 50; ++t) {
    const OccupancyGrid g = random_grid(rng);
    const auto bytes = encode_dump(g);
    const OccupancyGrid back = decode_dump(bytes);
    occ_bad += !(back == g) || encode_dump(back) != bytes;
  }
  std::uniform_real_distribution<float> u(-10.0f, 10.0f);
  for (int t = 0; t < 50; ++t) {
    GridSpec base;
    base.dims = {std::uint32_t(1 + rng() % 12), std::uint32_t(1 + rng() % 12), std::uint32_t(1 + rng() % 12)};
    base.voxel_size = Eigen::Vector3f::Constant(0.002f);
    const std::array<std::uint32_t, 5> dims{std::uint32_t(1 + rng() % 4), std::uint32_t(1 + rng() % 4),
                                            std::uint32_t(1 + rng() % 4), std::uint32_t(1 + rng() % 4),
                                            std::uint32_t(1 + rng() % 4)};
    const FeaturePyramid p = make_pyramid(base, dims, [&](int, const Index3&, std::uint32_t) { return u(rng); });
    const auto bytes = encode_pyramid(p);
    const FeaturePyramid back = decode_pyramid(bytes);
    fpy_bad += !(back == p) || encode_pyramid(back) != bytes;
  }
  return {occ_bad == 0 && fpy_bad == 0, fmt("50 instances each: OCCV1 mismatches %d, FPY1 mismatches %d", occ_bad, fpy_bad)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}};
  const std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%-3s %s  %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
