#include "shapereg/types.hpp"

#include <array>
#include <utility>

namespace shapereg {

namespace {

constexpr std::array<std::pair<Shape, std::string_view>, 8> kShapeNames{{
    {Shape::kIncreasing, "increasing"},
    {Shape::kDecreasing, "decreasing"},
    {Shape::kConvex, "convex"},
    {Shape::kConcave, "concave"},
    {Shape::kIncreasingConvex, "incr-convex"},
    {Shape::kIncreasingConcave, "incr-concave"},
    {Shape::kDecreasingConvex, "decr-convex"},
    {Shape::kDecreasingConcave, "decr-concave"},
}};

}  // namespace

std::string_view to_string(Shape shape) {
  for (const auto& [s, name] : kShapeNames) {
    if (s == shape) return name;
  }
  return "unknown";
}

Shape parse_shape(std::string_view name) {
  for (const auto& [s, n] : kShapeNames) {
    if (n == name) return s;
  }
  throw InvalidInput("unknown shape '" + std::string(name) + "'");
}

}  // namespace shapereg
