#pragma once

#include <span>
#include <vector>

namespace shapereg {

/// Piecewise cubic Hermite interpolant whose node slopes have been pulled
/// into the Fritsch-Carlson monotonicity region (alpha^2 + beta^2 <= 9).
class MonotoneCubicInterpolant {
 public:
  MonotoneCubicInterpolant(std::vector<double> nodes, std::vector<double> values,
                           std::vector<double> slopes);

  double operator()(double x) const;
  double derivative(double x) const;

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& slopes() const { return slopes_; }

 private:
  std::size_t interval(double x) const;

  std::vector<double> nodes_;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

/// Monotone interpolant of nondecreasing values at strictly increasing
/// nodes. Starts from averaged secant slopes, zeroes slopes at flat
/// segments, and rescales any (alpha, beta) pair outside the circle of
/// radius 3.
MonotoneCubicInterpolant fritsch_carlson(std::span<const double> x,
                                         std::span<const double> values);

}  // namespace shapereg
