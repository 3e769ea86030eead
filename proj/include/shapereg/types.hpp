#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace shapereg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when inputs violate a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for numerical failures (rank loss, cycling, budget exhaustion).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Shape {
  kIncreasing,
  kDecreasing,
  kConvex,
  kConcave,
  kIncreasingConvex,
  kIncreasingConcave,
  kDecreasingConvex,
  kDecreasingConcave,
};

inline constexpr Shape kAllShapes[] = {
    Shape::kIncreasing,        Shape::kDecreasing,
    Shape::kConvex,            Shape::kConcave,
    Shape::kIncreasingConvex,  Shape::kIncreasingConcave,
    Shape::kDecreasingConvex,  Shape::kDecreasingConcave,
};

std::string_view to_string(Shape shape);
Shape parse_shape(std::string_view name);

/// Monotone-only shapes use I-spline columns; all others use C-splines.
inline bool is_monotone_only(Shape s) {
  return s == Shape::kIncreasing || s == Shape::kDecreasing;
}
inline bool is_curvature_only(Shape s) {
  return s == Shape::kConvex || s == Shape::kConcave;
}
inline bool is_mixed(Shape s) {
  return !is_monotone_only(s) && !is_curvature_only(s);
}

/// Dimension of the linear space contained in the constraint set.
inline int linear_space_dim(Shape s) { return is_curvature_only(s) ? 2 : 1; }

}  // namespace shapereg
