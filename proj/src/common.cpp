#include "occshape/common.hpp"

namespace occshape {

std::string_view to_string(SemanticClass c) {
  switch (c) {
    case SemanticClass::Empty: return "empty";
    case SemanticClass::Plasticine: return "plasticine";
    case SemanticClass::FingerA: return "finger_a";
    case SemanticClass::FingerB: return "finger_b";
    case SemanticClass::Plane: return "plane";
    case SemanticClass::Noise: return "noise";
  }
  return "unknown";
}

SemanticClass semantic_class_from_byte(std::uint8_t value) {
  if (value > 5) throw InvalidArgument("invalid semantic class byte " + std::to_string(value));
  return static_cast<SemanticClass>(value);
}

int label_precedence(SemanticClass c) {
  switch (c) {
    case SemanticClass::Empty: return 0;
    case SemanticClass::Noise: return 1;
    case SemanticClass::Plane: return 2;
    case SemanticClass::Plasticine: return 3;
    case SemanticClass::FingerA: return 4;
    case SemanticClass::FingerB: return 5;
  }
  return 0;
}

Rgb default_color(SemanticClass c) {
  switch (c) {
    case SemanticClass::Plasticine: return {230, 190, 40};
    case SemanticClass::FingerA:
    case SemanticClass::FingerB: return {128, 128, 128};
    case SemanticClass::Plane: return {30, 60, 170};
    case SemanticClass::Noise: return {255, 0, 255};
    case SemanticClass::Empty: break;
  }
  return {0, 0, 0};
}

}  // namespace occshape
