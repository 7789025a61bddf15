#include <random>
#include <set>

#include "doctest.h"
#include "occshape/feature_pyramid.hpp"
#include "occshape/state_graph.hpp"
#include "support/oracles.hpp"

using namespace occshape;

namespace {

VoxelSet fingers_of(std::vector<Vec3> pts) {
  VoxelSet f;
  for (std::size_t i = 0; i < pts.size(); ++i)
    f.push_back(pts[i], {}, i % 2 ? SemanticClass::FingerB : SemanticClass::FingerA);
  return f;
}

// Naive pairwise oracle, ordered receiver-major then sender.
std::vector<Edge> naive_edges(const VoxelSet& v, std::size_t objects, double r) {
  std::vector<Edge> out;
  for (std::uint32_t i = 0; i < v.size(); ++i)
    for (std::uint32_t j = 0; j < v.size(); ++j) {
      if (i == j || (v.points[i] - v.points[j]).norm() > r) continue;
      const bool fi = i >= objects, fj = j >= objects;
      if (fi && fj) continue;
      out.push_back({i, j, fi != fj ? Relation::FingerToObject : Relation::Internal});
    }
  return out;
}

GridSpec small_grid() {
  GridSpec s;
  s.dims = {16, 12, 9};
  s.voxel_size = Eigen::Vector3f::Constant(0.002f);
  s.origin = {-0.016f, -0.012f, 0.0f};
  return s;
}

}  // namespace

TEST_CASE("edge threshold") {
  const double r = 0.009, eps = 1e-6;
  VoxelSet s;
  s.push_back({0, 0, 0});
  s.push_back({r - eps, 0, 0});
  CHECK(build_graph(s, {}, r).edges.size() == 2);
  s.points[1].x() = r + eps;
  CHECK(build_graph(s, {}, r).edges.empty());
  CHECK_THROWS_AS(build_graph(VoxelSet{}, {}, r), InvalidArgument);
  CHECK_THROWS_AS(build_graph(s, {}, 0.0), InvalidArgument);
}

TEST_CASE("edge set equals the pairwise oracle") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const VoxelSet state = oracle::random_set(rng, 30, 0.0, 0.03);
    const VoxelSet fingers = fingers_of({oracle::random_point(rng, 0.0, 0.03), oracle::random_point(rng, 0.0, 0.03),
                                         oracle::random_point(rng, 0.0, 0.03)});
    const StateGraph g = build_graph(state, fingers, 0.009);
    CHECK(g.object_count == 30);
    CHECK(g.vertices.size() == 33);
    CHECK(g.edges == naive_edges(g.vertices, 30, 0.009));
    for (const Edge& e : g.edges) {
      CHECK(e.receiver != e.sender);
      const bool one_finger = is_finger(g.vertices.classes[e.receiver]) != is_finger(g.vertices.classes[e.sender]);
      CHECK((e.relation == Relation::FingerToObject) == one_finger);
    }
  }
}

TEST_CASE("edge set is translation invariant") {
  std::mt19937_64 rng(32);
  VoxelSet state = oracle::random_set(rng, 40, 0.0, 0.04);
  const StateGraph a = build_graph(state, {}, 0.009);
  for (auto& p : state.points) p += Vec3(0.25, -0.125, 0.5);
  CHECK(build_graph(state, {}, 0.009).edges == a.edges);
}

TEST_CASE("history frames") {
  VoxelSet s;
  s.push_back({0, 0, 0});
  s.push_back({0.001, 0, 0});
  const StateGraph none = build_graph(s, {}, 0.009);
  for (const auto& h : none.history) CHECK(h == s.points);

  const std::vector<Vec3> f1{{1, 0, 0}, {2, 0, 0}};
  const std::vector<Vec3> f2{{3, 0, 0}, {4, 0, 0}};
  const StateGraph g = build_graph(s, {}, 0.009, {f1, f2});
  CHECK(g.history[0] == f1);
  CHECK(g.history[1] == f2);
  CHECK(g.history[2] == f2);
}

TEST_CASE("level dimensions round up") {
  const GridSpec ws = GridSpec::workspace();
  CHECK(level_dims(ws, 8) == std::array<std::uint32_t, 3>{13, 13, 5});
  CHECK(level_dims(ws, 4) == std::array<std::uint32_t, 3>{25, 25, 10});
  CHECK(bev_dims(ws) == std::array<std::uint32_t, 3>{50, 50, 1});
}

TEST_CASE("strided lookup uses floor division") {
  const GridSpec base = small_grid();
  // Each level stores its own cell index in its three components.
  const FeaturePyramid pyr =
      make_pyramid(base, {3, 3, 3, 3, 1}, [](int, const Index3& c, std::uint32_t k) { return float(c[k < 3 ? k : 0]); });
  SUBCASE("examples") {
    const StridedFeatures o = strided_lookup(pyr, base, {0, 0, 0});
    for (const auto& c : o.cells) CHECK(c == Index3{0, 0, 0});
    const StridedFeatures s = strided_lookup(pyr, base, {15, 8, 7});
    CHECK(s.cells[0] == Index3{1, 1, 0});
    CHECK(s.cells[1] == Index3{3, 2, 1});
    CHECK(s.cells[2] == Index3{7, 4, 3});
  }
  SUBCASE("random indices") {
    std::mt19937_64 rng(33);
    for (int t = 0; t < 1000; ++t) {
      const Index3 v{int(rng() % 16), int(rng() % 12), int(rng() % 9)};
      const StridedFeatures s = strided_lookup(pyr, base, v);
      const int strides[3] = {8, 4, 2};
      for (int l = 0; l < 3; ++l)
        for (int a = 0; a < 3; ++a) {
          CHECK(s.cells[l][a] == v[a] / strides[l]);
          CHECK(s.features[l][a] == float(v[a] / strides[l]));
        }
    }
  }
  SUBCASE("out of range") {
    CHECK_THROWS_AS(strided_lookup(pyr, base, {16, 0, 0}), InvalidArgument);
    CHECK_THROWS_AS(strided_lookup(pyr, base, {0, -1, 0}), InvalidArgument);
  }
}

TEST_CASE("bilinear BEV lookup") {
  const GridSpec base = small_grid();
  // BEV pitch as the lookup sees it: two single-precision voxels.
  const double cell = 2.0 * double(base.voxel_size[0]);
  auto u_of = [&](double x, int a) { return (x - double(base.origin[a])) / cell - 0.5; };
  // Affine in the cell index with exactly representable values.
  const FeaturePyramid pyr = make_pyramid(base, {1, 1, 1, 1, 2}, [](int level, const Index3& c, std::uint32_t k) {
    if (level != 4) return 0.0f;
    return k == 0 ? 0.5f * c[0] + 0.25f * c[1] + 1.0f : -0.75f * c[0] + 2.0f * c[1];
  });
  const FeatureLattice& bev = pyr.bev;

  SUBCASE("at a cell center") {
    const Vec2 xy(double(base.origin[0]) + 2.5 * cell, double(base.origin[1]) + 1.5 * cell);
    const BevSample s = bev_lookup(bev, base, xy);
    CHECK_FALSE(s.clamped);
    CHECK(s.feature[0] == doctest::Approx(bev.at({2, 1, 0})[0]).epsilon(1e-12));
  }
  SUBCASE("midpoint along x") {
    const Vec2 xy(double(base.origin[0]) + 3.0 * cell, double(base.origin[1]) + 1.5 * cell);
    const BevSample s = bev_lookup(bev, base, xy);
    CHECK(std::abs(s.feature[1] - 0.5 * (bev.at({2, 1, 0})[1] + bev.at({3, 1, 0})[1])) <= 1e-12);
  }
  SUBCASE("exact on the affine field") {
    std::mt19937_64 rng(34);
    std::uniform_real_distribution<double> ux(double(base.origin[0]) + 0.5 * cell,
                                              double(base.origin[0]) + (bev.dims[0] - 0.5) * cell);
    std::uniform_real_distribution<double> uy(double(base.origin[1]) + 0.5 * cell,
                                              double(base.origin[1]) + (bev.dims[1] - 0.5) * cell);
    for (int t = 0; t < 1000; ++t) {
      const Vec2 xy(ux(rng), uy(rng));
      const BevSample s = bev_lookup(bev, base, xy);
      const double u = u_of(xy.x(), 0), v = u_of(xy.y(), 1);
      CHECK_FALSE(s.clamped);
      CHECK(std::abs(s.feature[0] - (0.5 * u + 0.25 * v + 1.0)) <= 1e-12);
      CHECK(std::abs(s.feature[1] - (-0.75 * u + 2.0 * v)) <= 1e-12);
    }
  }
  SUBCASE("continuous across cell boundaries") {
    const double x = double(base.origin[0]) + 3.5 * cell;
    const double y = double(base.origin[1]) + 2.2 * cell;
    const BevSample l = bev_lookup(bev, base, {std::nextafter(x, -1.0), y});
    const BevSample r = bev_lookup(bev, base, {x, y});
    CHECK(std::abs(l.feature[0] - r.feature[0]) <= 1e-12);
  }
  SUBCASE("outside the center hull clamps with a flag") {
    const BevSample s = bev_lookup(bev, base, {-1.0, 0.0});
    CHECK(s.clamped);
    const BevSample edge = bev_lookup(bev, base, {double(base.origin[0]) + 0.25 * cell, 0.0});
    CHECK(edge.clamped);
  }
}

TEST_CASE("node features concatenate f4, f3, f2, f_bev") {
  const GridSpec base = small_grid();
  // Level-tagged sentinels: component k of level l holds 100 * (l + 1) + k.
  const FeaturePyramid pyr = make_pyramid(base, {1, 2, 3, 4, 2}, [](int level, const Index3&, std::uint32_t k) {
    return float(100 * (level + 1) + k);
  });
  VoxelSet s;
  s.push_back(base.center(Index3{3, 4, 5}));
  s.push_back(base.center(Index3{10, 2, 1}));
  const StateGraph g = build_graph(s, {}, 0.009);
  const Eigen::MatrixXd f = aggregate_node_features(pyr, base, g);
  REQUIRE(f.cols() == 4 + 3 + 2 + 2);
  const double expect[] = {400, 401, 402, 403, 300, 301, 302, 200, 201, 500, 501};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 11; ++c) CHECK(f(r, c) == expect[c]);
}

TEST_CASE("node features compose the two lookups and follow node order") {
  const GridSpec base = small_grid();
  const FeaturePyramid pyr = make_pyramid(base, {2, 2, 2, 2, 3}, [](int level, const Index3& c, std::uint32_t k) {
    return float(level * 1000 + c[0] * 37 + c[1] * 11 + c[2] * 5 + k);
  });
  std::mt19937_64 rng(35);
  VoxelSet s;
  for (int i = 0; i < 25; ++i) s.push_back(base.center(Index3{int(rng() % 16), int(rng() % 12), int(rng() % 9)}));
  const Eigen::MatrixXd f = aggregate_node_features(pyr, base, build_graph(s, {}, 0.009));
  for (std::size_t n = 0; n < s.size(); ++n) {
    const Index3 v = *base.locate(s.points[n]);
    const StridedFeatures sf = strided_lookup(pyr, base, v);
    const BevSample b = bev_lookup(pyr.bev, base, s.points[n].head<2>());
    std::vector<double> expect;
    for (const auto& part : sf.features) expect.insert(expect.end(), part.begin(), part.end());
    expect.insert(expect.end(), b.feature.begin(), b.feature.end());
    for (std::size_t c = 0; c < expect.size(); ++c) CHECK(f(long(n), long(c)) == expect[c]);
  }

  // Permuting nodes permutes rows.
  VoxelSet rev;
  for (std::size_t i = s.size(); i-- > 0;) rev.push_back(s.points[i]);
  const Eigen::MatrixXd fr = aggregate_node_features(pyr, base, build_graph(rev, {}, 0.009));
  for (long n = 0; n < f.rows(); ++n) CHECK(fr.row(f.rows() - 1 - n) == f.row(n));
}

TEST_CASE("FPY1 round trip") {
  std::mt19937_64 rng(36);
  std::uniform_real_distribution<float> u(-10.0f, 10.0f);
  for (int t = 0; t < 10; ++t) {
    GridSpec base;
    base.dims = {std::uint32_t(1 + rng() % 9), std::uint32_t(1 + rng() % 9), std::uint32_t(1 + rng() % 9)};
    base.voxel_size = Eigen::Vector3f::Constant(0.002f);
    const FeaturePyramid pyr = make_pyramid(
        base, {std::uint32_t(1 + rng() % 3), 1, 2, 1, std::uint32_t(1 + rng() % 3)},
        [&](int, const Index3&, std::uint32_t) { return u(rng); });
    const auto bytes = encode_pyramid(pyr);
    const FeaturePyramid back = decode_pyramid(bytes);
    CHECK(back == pyr);
    CHECK(encode_pyramid(back) == bytes);
  }
  auto bytes = encode_pyramid(make_pyramid(small_grid(), {1, 1, 1, 1, 1}, [](int, const Index3&, std::uint32_t) { return 0.f; }));
  bytes[1] = 'Q';
  CHECK_THROWS_AS(decode_pyramid(bytes), ParseError);
  bytes[1] = 'P';
  bytes.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_pyramid(bytes), ParseError);
}
