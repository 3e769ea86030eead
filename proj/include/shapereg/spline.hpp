#pragma once

#include <span>
#include <vector>

#include "shapereg/types.hpp"

namespace shapereg {

/// Stacked knot sequence t_1..t_{l+2k} for M-splines of order k.
///
/// The first k knots equal x_min, the last k equal x_max, and the l interior
/// knots are strictly increasing inside (x_min, x_max). The space has
/// m = l + k basis functions.
class KnotVector {
 public:
  KnotVector(int order, std::vector<double> interior, double lo, double hi);

  int order() const { return order_; }
  int interior_count() const { return static_cast<int>(interior_.size()); }
  int basis_count() const { return interior_count() + order_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  /// Full sequence, size l + 2k.
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& interior() const { return interior_; }
  /// Distinct breakpoints: lo, interior..., hi.
  std::vector<double> breakpoints() const;

  /// Same space on the mirrored axis x' = lo + hi - x.
  KnotVector reflected() const;
  KnotVector with_order(int order) const;

 private:
  int order_;
  std::vector<double> interior_;
  double lo_;
  double hi_;
  std::vector<double> knots_;
};

enum class KnotPlacement { kQuantile, kEqualSpacing };

/// Interior knots at the j/(l+1) empirical quantiles of x (linear
/// interpolation between order statistics), or equally spaced on
/// [x_min, x_max]. Rejects duplicate x and any knot interval that would
/// contain no design point.
KnotVector make_knots(std::span<const double> x, int interior_count, int order,
                      KnotPlacement placement = KnotPlacement::kQuantile);

/// Piecewise polynomial on consecutive breakpoints, each piece stored in the
/// power basis of (x - left breakpoint). Evaluates to zero outside
/// [front, back]; the last piece is closed on the right.
class PiecewisePoly {
 public:
  PiecewisePoly() = default;
  PiecewisePoly(std::vector<double> breaks,
                std::vector<std::vector<double>> coeffs);

  static PiecewisePoly zero(const std::vector<double>& breaks);
  static PiecewisePoly identity(double lo, double hi);

  double operator()(double x) const;
  double derivative_at(double x, int order = 1) const;

  /// Antiderivative vanishing at the left end of the domain.
  PiecewisePoly integral() const;
  PiecewisePoly derivative() const;

  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<std::vector<double>>& coeffs() const { return coeffs_; }
  int degree() const;
  double lo() const { return breaks_.front(); }
  double hi() const { return breaks_.back(); }

 private:
  std::size_t piece_index(double x) const;

  std::vector<double> breaks_;
  std::vector<std::vector<double>> coeffs_;
};

/// All m M-splines of the knot vector's order, built by the order recursion
/// from the piecewise-constant order-1 splines. Index is zero-based.
std::vector<PiecewisePoly> msplines(const KnotVector& kv);
PiecewisePoly mspline(const KnotVector& kv, int index);
/// I_i(x) = integral of M_i from x_min to x.
PiecewisePoly ispline(const KnotVector& kv, int index);
/// C_i(x) = integral of I_i from x_min to x.
PiecewisePoly cspline(const KnotVector& kv, int index);

/// One column function of a shape-restricted basis: sign * p(x) or, for
/// mirrored columns, sign * p(lo + hi - x).
struct BasisColumn {
  PiecewisePoly poly;
  double sign = 1.0;
  bool reflected = false;

  double operator()(double x) const;
};

/// Basis values sigma[i][j] = j-th column function at x_i.
struct BasisMatrix {
  Matrix values;
  Shape shape;
  KnotVector knots;
  std::vector<double> x;
  std::vector<BasisColumn> columns;
};

/// Column functions for a shape. Monotone shapes use I-splines, curvature
/// and mixed shapes use C-splines; mixed shapes append the identity. The
/// knot vector's order is the M-spline order and must be 1 or 2 so the
/// columns form a proper basis.
std::vector<BasisColumn> basis_columns(const KnotVector& kv, Shape shape);
BasisMatrix basis_vectors(const KnotVector& kv, std::span<const double> x,
                          Shape shape);

/// n x m matrix of M-spline values at x.
Matrix mspline_matrix(const KnotVector& kv, std::span<const double> x);

}  // namespace shapereg
