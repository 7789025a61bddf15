#pragma once

// Independent reference implementations used by the tests. They share no code
// with the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "occshape/mesh.hpp"
#include "occshape/voxel_set.hpp"

namespace oracle {

using occshape::Vec3;

inline Vec3 random_point(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  const double x = u(rng), y = u(rng), z = u(rng);
  return {x, y, z};
}

inline occshape::VoxelSet random_set(std::mt19937_64& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  occshape::VoxelSet s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(random_point(rng, lo, hi));
  return s;
}

/// Sum-form EMD by enumerating every bijection.
inline double emd_brute(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[perm[i]]).norm();
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline std::size_t nearest_index(const Vec3& q, const std::vector<Vec3>& pts) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double d = (q - pts[j]).squaredNorm();
    if (d < bd) {
      bd = d;
      best = j;
    }
  }
  return best;
}

inline double chamfer_naive(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double sa = 0.0, sb = 0.0;
  for (const auto& x : a) sa += (x - b[nearest_index(x, b)]).norm();
  for (const auto& y : b) sb += (y - a[nearest_index(y, a)]).norm();
  return sa / a.size() + sb / b.size();
}

inline double dcd_naive(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double alpha, double lambda) {
  auto side = [&](const std::vector<Vec3>& p, const std::vector<Vec3>& q) {
    std::vector<std::size_t> nn(p.size());
    std::vector<double> hits(q.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      nn[i] = nearest_index(p[i], q);
      hits[nn[i]] += 1.0;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      s += 1.0 - std::exp(-alpha * (p[i] - q[nn[i]]).norm()) / std::pow(hits[nn[i]], lambda);
    return s / p.size();
  };
  return 0.5 * (side(a, b) + side(b, a));
}

/// Greedy FPS with lowest-index ties, seeded at `seed`.
inline std::vector<std::size_t> fps_naive(const std::vector<Vec3>& pts, std::size_t k, std::size_t seed) {
  std::vector<std::size_t> chosen{seed};
  std::vector<double> d(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) d[i] = (pts[i] - pts[seed]).squaredNorm();
  while (chosen.size() < k) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (d[i] > d[best]) best = i;
    chosen.push_back(best);
    for (std::size_t i = 0; i < pts.size(); ++i) d[i] = std::min(d[i], (pts[i] - pts[best]).squaredNorm());
  }
  return chosen;
}

/// Candidate closest to the centroid, lowest index on ties.
inline std::size_t centroid_seed(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  c /= double(pts.size());
  return nearest_index(c, pts);
}

inline double cover_radius(const std::vector<Vec3>& pts, const std::vector<std::size_t>& centers) {
  double r = 0.0;
  for (const auto& p : pts) {
    double d = std::numeric_limits<double>::infinity();
    for (auto c : centers) d = std::min(d, (p - pts[c]).norm());
    r = std::max(r, d);
  }
  return r;
}

/// Optimal discrete k-center radius by enumerating every k-subset.
inline double optimal_k_center(const std::vector<Vec3>& pts, std::size_t k) {
  const std::size_t n = pts.size();
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
  double best = std::numeric_limits<double>::infinity();
  do {
    std::vector<std::size_t> c;
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) c.push_back(i);
    best = std::min(best, cover_radius(pts, c));
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

struct HalfSpace {
  Vec3 normal;  // outward
  double offset;
  bool inside(const Vec3& p) const { return normal.dot(p) <= offset; }
};

struct ConvexPolyhedron {
  occshape::TriMesh mesh;
  std::vector<HalfSpace> planes;
  bool contains(const Vec3& p) const {
    return std::all_of(planes.begin(), planes.end(), [&](const HalfSpace& h) { return h.inside(p); });
  }
};

/// Convex hull of random points on an ellipsoid, by testing every triple for
/// a supporting plane. Quadratic in faces; fine for a dozen points.
inline ConvexPolyhedron random_convex(std::mt19937_64& rng, std::size_t n, const Vec3& center, const Vec3& radii) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 d(g(rng), g(rng), g(rng));
    d.normalize();
    pts.push_back(center + d.cwiseProduct(radii));
  }
  ConvexPolyhedron out;
  out.mesh.vertices = pts;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j)
      for (std::uint32_t k = j + 1; k < n; ++k) {
        Vec3 nrm = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
        if (nrm.norm() < 1e-12) continue;
        nrm.normalize();
        int pos = 0, neg = 0;
        for (std::uint32_t m = 0; m < n; ++m) {
          if (m == i || m == j || m == k) continue;
          const double s = nrm.dot(pts[m] - pts[i]);
          if (s > 1e-12) ++pos;
          else if (s < -1e-12) ++neg;
        }
        if (pos && neg) continue;
        if (pos) {
          nrm = -nrm;
          out.mesh.faces.push_back({i, k, j});
        } else {
          out.mesh.faces.push_back({i, j, k});
        }
        out.planes.push_back({nrm, nrm.dot(pts[i])});
      }
  return out;
}

}  // namespace oracle
