#include "occshape/mesh.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace occshape {

Aabb TriMesh::bounds() const {
  Aabb box;
  if (vertices.empty()) return box;
  box.min = box.max = vertices.front();
  for (const auto& v : vertices) {
    box.min = box.min.cwiseMin(v);
    box.max = box.max.cwiseMax(v);
  }
  return box;
}

double TriMesh::signed_volume() const {
  double six_v = 0.0;
  for (const auto& f : faces) {
    six_v += vertices[f[0]].dot(vertices[f[1]].cross(vertices[f[2]]));
  }
  return six_v / 6.0;
}

std::optional<EdgeDiagnostic> find_open_edge(const TriMesh& mesh) {
  struct Use {
    std::size_t count = 0;
    std::size_t first_face = 0;
  };
  std::map<std::pair<std::uint32_t, std::uint32_t>, Use> edges;
  for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const auto& f = mesh.faces[fi];
    for (int e = 0; e < 3; ++e) {
      auto a = f[e];
      auto b = f[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      auto& use = edges[{a, b}];
      if (use.count == 0) use.first_face = fi;
      ++use.count;
    }
  }
  for (const auto& [key, use] : edges) {
    if (use.count != 2) {
      return EdgeDiagnostic{key.first, key.second, use.count, use.first_face};
    }
  }
  return std::nullopt;
}

void require_watertight(const TriMesh& mesh) {
  if (mesh.faces.empty()) throw MeshError("mesh has no faces");
  if (auto bad = find_open_edge(mesh)) {
    std::ostringstream msg;
    msg << "mesh is not watertight: edge (" << bad->a << ", " << bad->b << ") is shared by "
        << bad->face_count << " face(s), first seen in face " << bad->first_face;
    throw MeshError(msg.str());
  }
}

TriMesh flipped(const TriMesh& mesh) {
  TriMesh out = mesh;
  for (auto& f : out.faces) std::swap(f[1], f[2]);
  return out;
}

TriMesh make_box(const Vec3& lo, const Vec3& hi, Rgb color) {
  TriMesh m;
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i)
        m.vertices.emplace_back(i ? hi.x() : lo.x(), j ? hi.y() : lo.y(), k ? hi.z() : lo.z());
  auto id = [](int i, int j, int k) { return static_cast<std::uint32_t>(i + 2 * j + 4 * k); };
  auto quad = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
    m.faces.push_back({a, b, c});
    m.faces.push_back({a, c, d});
  };
  quad(id(0, 0, 0), id(0, 1, 0), id(1, 1, 0), id(1, 0, 0));  // -z
  quad(id(0, 0, 1), id(1, 0, 1), id(1, 1, 1), id(0, 1, 1));  // +z
  quad(id(0, 0, 0), id(1, 0, 0), id(1, 0, 1), id(0, 0, 1));  // -y
  quad(id(0, 1, 0), id(0, 1, 1), id(1, 1, 1), id(1, 1, 0));  // +y
  quad(id(0, 0, 0), id(0, 0, 1), id(0, 1, 1), id(0, 1, 0));  // -x
  quad(id(1, 0, 0), id(1, 1, 0), id(1, 1, 1), id(1, 0, 1));  // +x
  m.colors.assign(m.vertices.size(), color);
  return m;
}

}  // namespace occshape
