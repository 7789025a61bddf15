#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace occshape {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Per-voxel semantic label. The numeric values are the on-disk encoding.
enum class SemanticClass : std::uint8_t {
  Empty = 0,
  Plasticine = 1,
  FingerA = 2,
  FingerB = 3,
  Plane = 4,
  Noise = 5,
};

std::string_view to_string(SemanticClass c);
SemanticClass semantic_class_from_byte(std::uint8_t value);

/// Labeling precedence: Empty < Noise < Plane < Plasticine < FingerA < FingerB.
/// A write succeeds when the incoming label ranks at least as high as the
/// stored one, so replaying labels in any order converges to the same grid.
int label_precedence(SemanticClass c);

inline bool is_finger(SemanticClass c) {
  return c == SemanticClass::FingerA || c == SemanticClass::FingerB;
}

/// Color used for a class when no sample is available.
Rgb default_color(SemanticClass c);

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 extent() const { return max - min; }
  bool degenerate() const { return (extent().array() <= 0.0).any(); }
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated operation precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace occshape
