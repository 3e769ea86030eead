#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shapereg/cone.hpp"
#include "shapereg/fritsch_carlson.hpp"
#include "shapereg/inference.hpp"
#include "shapereg/projection.hpp"
#include "shapereg/spline.hpp"

namespace shapereg {

/// Scatterplot data. `weights` are inverse-variance weights (counts for
/// aggregated means); `group` is an optional 0/1 indicator.
struct Dataset {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> weights;
  std::vector<int> group;

  std::size_t size() const { return x.size(); }
  bool weighted() const;
};

/// Sorts by x and replaces runs of equal x by their weighted mean, with the
/// summed weight. Group indicators are dropped.
struct Aggregation {
  Dataset data;
  bool merged = false;
};
Aggregation aggregate_duplicates(const Dataset& data);

enum class Predictor { kSpline, kMonotoneInterpolant, kPiecewiseLinear };

struct FitOptions {
  KnotPlacement placement = KnotPlacement::kQuantile;
  ProjectionOptions projection;
};

/// A shape-restricted fit. Fitted values live at the (aggregated) design
/// points; `predict` evaluates the fitted function between them.
struct Fit {
  Shape shape = Shape::kIncreasing;
  /// Order (degree + 1) of the fitted spline; 0 for classical fits.
  int order = 0;
  std::optional<KnotVector> knots;
  std::vector<double> x;
  Vector fitted;
  ProjectionResult projection;
  int m = 0;
  int r = 0;
  int d = 0;
  double sse = 0.0;
  VarianceEstimate variance;

  /// Spline predictor: sum coef_j * column_j(x) + linear_coef(0) [+ linear_coef(1) x].
  std::vector<BasisColumn> columns;
  Vector column_coef;
  Vector linear_coef;

  /// Cubic-monotone path: M-spline coefficients and subcone size.
  Vector mspline_coef;
  int subcone_edge_count = 0;
  bool spline_monotone = true;
  std::optional<MonotoneCubicInterpolant> interpolant;

  Predictor predictor = Predictor::kSpline;
  std::vector<std::string> warnings;
};

/// round(n^(1/(2p+1))) with p the polynomial degree, clipped to [2, 10].
int default_interior_knots(std::size_t n, int order);

/// Shape-restricted regression spline. Monotone shapes take order 2 or 3
/// (linear or quadratic I-splines) or 4 (cubic, through the subcone);
/// curvature and mixed shapes take order 3 or 4 (quadratic or cubic
/// C-splines). Duplicate x are aggregated first.
Fit fit(const Dataset& data, Shape shape, int order, int interior_knots,
        const FitOptions& options = {});

/// Cubic monotone fit through the edges of {cubic splines increasing at the
/// design points}. `edges` may be supplied to skip enumeration.
Fit fit_cubic_monotone(const Dataset& data, int interior_knots, Shape shape = Shape::kIncreasing,
                       const FitOptions& options = {},
                       const SubconeEdges* edges = nullptr);

/// The constraint cone `fit` would project onto for this design (distinct,
/// increasing x).
ConeBasis fit_cone(std::span<const double> x, Shape shape, int order, int interior_knots,
                   KnotPlacement placement = KnotPlacement::kQuantile);

/// Unsmoothed shape-restricted least squares (PAVA-equivalent for
/// monotone shapes) with a piecewise linear predictor.
Fit fit_classical(const Dataset& data, Shape shape,
                  const ProjectionOptions& options = {});

/// Evaluates a fit inside [x_min, x_max]; extrapolation throws.
std::vector<double> predict(const Fit& fit, std::span<const double> x0);
double predict(const Fit& fit, double x0);

struct ParallelFit {
  Fit fit;
  /// Location shift of group 1 relative to group 0.
  double beta = 0.0;
  double total_sse = 0.0;
  int evaluations = 0;
};

/// y = theta(x) + beta * group + error with theta shape-restricted; beta by
/// golden-section search on the profile SSE.
ParallelFit fit_parallel(const Dataset& data, Shape shape, int order,
                         int interior_knots, const FitOptions& options = {},
                         double tolerance = 1e-6);

enum class TestKind { kConstantVsIncreasing, kLinearVsConvex };

std::string_view to_string(TestKind kind);
TestKind parse_test_kind(std::string_view name);

/// A hypothesis test bound to one design: the alternative cone and its
/// null mixing distribution are built once and reused for every y.
class ShapeTest {
 public:
  /// Regression-spline alternative (I-splines or C-splines of `order`).
  static ShapeTest spline(TestKind kind, std::span<const double> x, int order,
                          int interior_knots, std::uint64_t nsim, std::uint64_t seed,
                          KnotPlacement placement = KnotPlacement::kQuantile);
  /// Unsmoothed alternative (ordinary monotone or convex regression).
  static ShapeTest classical(TestKind kind, std::span<const double> x,
                             std::uint64_t nsim, std::uint64_t seed);
  /// Uses a precomputed mixing distribution.
  ShapeTest(TestKind kind, ConeBasis cone, MixingDistribution mix);

  TestResult run(const Vector& y) const;
  double critical_value(double alpha) const;

  const ConeBasis& cone() const { return cone_; }
  const MixingDistribution& mixing() const { return mix_; }
  TestKind kind() const { return kind_; }

 private:
  TestKind kind_;
  ConeBasis cone_;
  MixingDistribution mix_;
};

/// Shape behind each test's alternative.
Shape alternative_shape(TestKind kind);

TestResult test_constant_vs_increasing(const Dataset& data, int order, int interior_knots,
                                       std::uint64_t nsim, std::uint64_t seed);
TestResult test_linear_vs_convex(const Dataset& data, int order, int interior_knots,
                                 std::uint64_t nsim, std::uint64_t seed);

}  // namespace shapereg
