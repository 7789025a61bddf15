#pragma once

#include <array>
#include <optional>
#include <vector>

#include "occshape/common.hpp"

namespace occshape {

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  std::vector<Rgb> colors;  // per vertex; may be empty

  Aabb bounds() const;
  /// Volume enclosed with orientation sign; negative for inside-out meshes.
  double signed_volume() const;
  Rgb vertex_color(std::uint32_t v) const {
    return colors.empty() ? Rgb{} : colors[v];
  }
};

class MeshError : public Error {
 public:
  using Error::Error;
};

struct EdgeDiagnostic {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::size_t face_count = 0;  // faces sharing the edge
  std::size_t first_face = 0;
};

/// First edge not shared by exactly two faces, if any.
std::optional<EdgeDiagnostic> find_open_edge(const TriMesh& mesh);

/// Throws MeshError naming the offending edge and its adjacent face count.
void require_watertight(const TriMesh& mesh);

TriMesh flipped(const TriMesh& mesh);

/// Closed axis-aligned box with 8 shared vertices, outward orientation.
TriMesh make_box(const Vec3& lo, const Vec3& hi, Rgb color = {});

}  // namespace occshape
