#include "occshape/feature_pyramid.hpp"

#include <algorithm>
#include <cmath>

#include "occshape/bytes.hpp"
#include "occshape/state_graph.hpp"

namespace occshape {

namespace {

std::string dims_text(const std::array<std::uint32_t, 3>& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

FeatureLattice make_lattice(const std::array<std::uint32_t, 3>& dims, std::uint32_t fdim) {
  FeatureLattice l;
  l.dims = dims;
  l.feature_dim = fdim;
  l.data.assign(l.cell_count() * fdim, 0.0f);
  return l;
}

void validate_lattice(const FeatureLattice& l, const char* name) {
  if (l.data.size() != l.cell_count() * l.feature_dim)
    throw InvalidArgument(std::string(name) + " data size does not match dims and feature dim");
}

constexpr char kMagic[4] = {'F', 'P', 'Y', '1'};

}  // namespace

std::array<std::uint32_t, 3> level_dims(const GridSpec& base, int stride) {
  std::array<std::uint32_t, 3> d;
  for (int a = 0; a < 3; ++a) d[a] = (base.dims[a] + stride - 1) / stride;
  return d;
}

std::array<std::uint32_t, 3> bev_dims(const GridSpec& base) {
  return {(base.dims[0] + kBevStride - 1) / kBevStride, (base.dims[1] + kBevStride - 1) / kBevStride, 1};
}

void validate_pyramid(const FeaturePyramid& pyr, const GridSpec& base) {
  for (int l = 0; l < 4; ++l) {
    const auto want = level_dims(base, kLevelStrides[l]);
    const std::string name = "F" + std::to_string(l + 1);
    if (pyr.levels[l].dims != want)
      throw InvalidArgument(name + " dims " + dims_text(pyr.levels[l].dims) + " expected " + dims_text(want));
    validate_lattice(pyr.levels[l], name.c_str());
  }
  if (pyr.bev.dims != bev_dims(base))
    throw InvalidArgument("BEV dims " + dims_text(pyr.bev.dims) + " expected " + dims_text(bev_dims(base)));
  validate_lattice(pyr.bev, "BEV");
}

FeaturePyramid make_pyramid(const GridSpec& base, const std::array<std::uint32_t, 5>& feature_dims,
                            const FeatureFn& fn) {
  FeaturePyramid pyr;
  auto fill = [&](FeatureLattice& lat, int level) {
    for (int k = 0; k < int(lat.dims[2]); ++k)
      for (int j = 0; j < int(lat.dims[1]); ++j)
        for (int i = 0; i < int(lat.dims[0]); ++i) {
          auto cell = lat.at(Index3{i, j, k});
          for (std::uint32_t c = 0; c < lat.feature_dim; ++c) cell[c] = fn(level, Index3{i, j, k}, c);
        }
  };
  for (int l = 0; l < 4; ++l) {
    pyr.levels[l] = make_lattice(level_dims(base, kLevelStrides[l]), feature_dims[l]);
    fill(pyr.levels[l], l);
  }
  pyr.bev = make_lattice(bev_dims(base), feature_dims[4]);
  fill(pyr.bev, 4);
  return pyr;
}

StridedFeatures strided_lookup(const FeaturePyramid& pyr, const GridSpec& base, const Index3& voxel) {
  if (!base.in_range(voxel)) {
    throw InvalidArgument("voxel index (" + std::to_string(voxel[0]) + ", " + std::to_string(voxel[1]) +
                          ", " + std::to_string(voxel[2]) + ") outside the base grid");
  }
  StridedFeatures out;
  // Output slot s holds F(4 - s): strides 8, 4, 2.
  for (int s = 0; s < 3; ++s) {
    const int level = 3 - s;
    const int stride = kLevelStrides[level];
    const Index3 cell{voxel[0] / stride, voxel[1] / stride, voxel[2] / stride};
    const FeatureLattice& lat = pyr.levels[level];
    if (!lat.in_range(cell)) throw InvalidArgument("pyramid level does not cover the base grid");
    out.cells[s] = cell;
    out.features[s] = lat.at(cell);
  }
  return out;
}

BevSample bev_lookup(const FeatureLattice& bev, const GridSpec& base, const Vec2& xy) {
  if (bev.cell_count() == 0) throw InvalidArgument("empty BEV lattice");
  BevSample out;
  std::array<int, 2> i0{};
  std::array<double, 2> t{};
  for (int a = 0; a < 2; ++a) {
    const double cell = double(base.voxel_size[a]) * kBevStride;
    double u = (xy[a] - double(base.origin[a])) / cell - 0.5;
    const double hi = double(bev.dims[a]) - 1.0;
    if (u < 0.0 || u > hi || !std::isfinite(u)) {
      out.clamped = true;
      u = std::isfinite(u) ? std::clamp(u, 0.0, hi) : 0.0;
    }
    int f = static_cast<int>(std::floor(u));
    if (f >= static_cast<int>(bev.dims[a]) - 1) f = std::max(0, static_cast<int>(bev.dims[a]) - 2);
    i0[a] = f;
    t[a] = bev.dims[a] == 1 ? 0.0 : u - f;
  }
  const int i1 = std::min<int>(i0[0] + 1, bev.dims[0] - 1);
  const int j1 = std::min<int>(i0[1] + 1, bev.dims[1] - 1);
  const auto f00 = bev.at({i0[0], i0[1], 0});
  const auto f10 = bev.at({i1, i0[1], 0});
  const auto f01 = bev.at({i0[0], j1, 0});
  const auto f11 = bev.at({i1, j1, 0});
  out.feature.resize(bev.feature_dim);
  const double tx = t[0], ty = t[1];
  for (std::uint32_t c = 0; c < bev.feature_dim; ++c) {
    out.feature[c] = (1 - tx) * (1 - ty) * f00[c] + tx * (1 - ty) * f10[c] + (1 - tx) * ty * f01[c] +
                     tx * ty * f11[c];
  }
  return out;
}

Eigen::MatrixXd aggregate_node_features(const FeaturePyramid& pyr, const GridSpec& base,
                                        const StateGraph& graph) {
  const std::size_t dim = pyr.levels[3].feature_dim + pyr.levels[2].feature_dim +
                          pyr.levels[1].feature_dim + pyr.bev.feature_dim;
  Eigen::MatrixXd out(graph.vertices.size(), dim);
  for (std::size_t n = 0; n < graph.vertices.size(); ++n) {
    const Vec3& p = graph.vertices.points[n];
    const auto idx = base.locate(p);
    if (!idx) throw InvalidArgument("graph vertex " + std::to_string(n) + " lies outside the base grid");
    const auto sf = strided_lookup(pyr, base, *idx);
    Eigen::Index col = 0;
    for (const auto& f : sf.features)
      for (float v : f) out(n, col++) = v;
    for (double v : bev_lookup(pyr.bev, base, p.head<2>()).feature) out(n, col++) = v;
  }
  return out;
}

std::vector<std::uint8_t> encode_lattices(std::span<const FeatureLattice> lattices) {
  ByteWriter w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(static_cast<std::uint32_t>(lattices.size()));
  for (const auto& l : lattices) {
    validate_lattice(l, "lattice");
    for (auto d : l.dims) w.u32(d);
    w.u32(l.feature_dim);
    for (float v : l.data) w.f32(v);
  }
  return std::move(w).take();
}

std::vector<FeatureLattice> decode_lattices(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "FPY1");
  const auto magic = r.raw(4, "magic");
  for (int i = 0; i < 4; ++i)
    if (magic[i] != static_cast<std::uint8_t>(kMagic[i])) r.fail("bad magic", 0);
  const auto count = r.u32("level count");
  std::vector<FeatureLattice> out;
  for (std::uint32_t l = 0; l < count; ++l) {
    FeatureLattice lat;
    for (auto& d : lat.dims) d = r.u32("level dims");
    lat.feature_dim = r.u32("feature dim");
    const long double n = static_cast<long double>(lat.dims[0]) * lat.dims[1] * lat.dims[2] * lat.feature_dim;
    if (n * 4 > static_cast<long double>(r.remaining()))
      throw ParseError("FPY1: truncated level data", bytes.size());
    lat.data.resize(static_cast<std::size_t>(n));
    for (auto& v : lat.data) v = r.f32("feature data");
    out.push_back(std::move(lat));
  }
  r.expect_end();
  return out;
}

std::vector<std::uint8_t> encode_pyramid(const FeaturePyramid& pyr) {
  std::vector<FeatureLattice> all(pyr.levels.begin(), pyr.levels.end());
  all.push_back(pyr.bev);
  return encode_lattices(all);
}

FeaturePyramid decode_pyramid(std::span<const std::uint8_t> bytes) {
  auto all = decode_lattices(bytes);
  if (all.size() != 5) throw ParseError("FPY1: expected 5 entries, found " + std::to_string(all.size()), 4);
  if (all[4].dims[2] != 1) throw ParseError("FPY1: BEV entry must have H = 1", 4);
  FeaturePyramid pyr;
  for (int l = 0; l < 4; ++l) pyr.levels[l] = std::move(all[l]);
  pyr.bev = std::move(all[4]);
  return pyr;
}

void write_pyramid(const FeaturePyramid& pyr, const std::string& path) {
  write_file_bytes(path, encode_pyramid(pyr));
}

FeaturePyramid read_pyramid(const std::string& path) { return decode_pyramid(read_file_bytes(path)); }

}  // namespace occshape
