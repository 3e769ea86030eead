#include "shapereg/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace shapereg {

bool Dataset::weighted() const {
  return std::any_of(weights.begin(), weights.end(), [](double w) { return w != 1.0; });
}

namespace {

void validate(const Dataset& data) {
  const std::size_t n = data.x.size();
  if (data.y.size() != n) throw InvalidInput("x and y must have equal length");
  if (!data.weights.empty() && data.weights.size() != n) {
    throw InvalidInput("weights must match the data length");
  }
  if (!data.group.empty() && data.group.size() != n) {
    throw InvalidInput("group indicator must match the data length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(data.x[i]) || !std::isfinite(data.y[i])) {
      throw InvalidInput("data contain non-finite values");
    }
    if (!data.weights.empty() && !(data.weights[i] > 0.0 && std::isfinite(data.weights[i]))) {
      throw InvalidInput("weights must be positive and finite");
    }
    if (!data.group.empty() && data.group[i] != 0 && data.group[i] != 1) {
      throw InvalidInput("group indicator must be 0 or 1");
    }
  }
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Everything about a fit that depends on the design but not on y.
struct Design {
  Shape shape = Shape::kIncreasing;
  int order = 0;
  std::optional<KnotVector> knots;
  std::vector<double> x;
  ConeBasis cone;
  std::vector<BasisColumn> columns;
  Matrix column_values;
  bool cubic = false;
  double sign = 1.0;
  int m = 0;
  int edge_count = 0;
};

int mspline_order_for(Shape shape, int order) {
  if (is_monotone_only(shape)) {
    if (order < 2 || order > 4) {
      throw InvalidInput("monotone fits take order 2, 3 or 4 (linear, quadratic, cubic)");
    }
    return order - 1;
  }
  if (order < 3 || order > 4) {
    throw InvalidInput("convex-type fits take order 3 or 4 (quadratic or cubic C-splines)");
  }
  return order - 2;
}

Design spline_design(const std::vector<double>& x, Shape shape, int order,
                     int interior_knots, KnotPlacement placement,
                     const SubconeEdges* precomputed = nullptr) {
  Design d;
  d.shape = shape;
  d.order = order;
  d.x = x;
  const int morder = mspline_order_for(shape, order);
  if (is_monotone_only(shape) && order == 4) {
    d.cubic = true;
    d.sign = shape == Shape::kDecreasing ? -1.0 : 1.0;
    d.knots = make_knots(x, interior_knots, 4, placement);
    d.column_values = mspline_matrix(*d.knots, x);
    for (auto& p : msplines(*d.knots)) d.columns.push_back({std::move(p), 1.0, false});
    SubconeEdges enumerated;
    if (precomputed == nullptr) {
      ConstraintMatrix a = monotone_constraint_matrix(static_cast<int>(x.size()));
      a.a *= d.sign;
      enumerated = subcone_edges(d.column_values, a);
      precomputed = &enumerated;
    }
    if (precomputed->data.rows() != static_cast<Eigen::Index>(x.size())) {
      throw InvalidInput("precomputed subcone edges do not match the design");
    }
    d.cone = make_cone(precomputed->data, linear_space(shape, x), false);
    d.m = precomputed->row_rank;
    d.edge_count = static_cast<int>(precomputed->data.cols());
    return d;
  }
  d.knots = make_knots(x, interior_knots, morder, placement);
  BasisMatrix basis = basis_vectors(*d.knots, x, shape);
  d.cone = spline_cone(basis, false);
  d.columns = std::move(basis.columns);
  d.column_values = std::move(basis.values);
  d.m = static_cast<int>(d.cone.m());
  d.edge_count = d.m;
  return d;
}

ProjectionResult project_data(const Dataset& data, const ConeBasis& cone,
                              const ProjectionOptions& options) {
  const Vector y = to_vector(data.y);
  if (!data.weighted()) return project(y, cone, options);
  return weighted_project_diag(y, cone, to_vector(data.weights).cwiseInverse(), options);
}

bool cubic_is_monotone(const Fit& f, double sign) {
  const double range = f.x.back() - f.x.front();
  const double scale = (f.fitted.cwiseAbs().maxCoeff() + 1.0) / range;
  const auto br = f.knots->breakpoints();
  constexpr int kGrid = 512;
  for (std::size_t p = 0; p + 1 < br.size(); ++p) {
    for (int g = 0; g <= kGrid; ++g) {
      const double t = br[p] + (br[p + 1] - br[p]) * g / kGrid;
      double slope = 0.0;
      for (std::size_t j = 0; j < f.columns.size(); ++j) {
        slope += f.column_coef(static_cast<Eigen::Index>(j)) * f.columns[j].poly.derivative_at(t);
      }
      if (sign * slope < -1e-9 * scale) return false;
    }
  }
  return true;
}

Fit fit_on_design(const Design& design, const Dataset& data,
                  const ProjectionOptions& options) {
  const auto n = static_cast<int>(data.x.size());
  const int r = static_cast<int>(design.cone.r());
  if (n <= design.m + r) {
    throw InvalidInput("n = " + std::to_string(n) + " leaves no residual degrees of freedom for " +
                       std::to_string(design.m) + " basis functions plus " +
                       std::to_string(r) + " linear terms; use fewer knots");
  }
  Fit f;
  f.shape = design.shape;
  f.order = design.order;
  f.knots = design.knots;
  f.x = data.x;
  f.projection = project_data(data, design.cone, options);
  f.fitted = f.projection.fitted;
  f.m = design.m;
  f.r = r;
  f.d = f.projection.effective_dim();
  f.sse = f.projection.sse;
  f.variance = variance_estimate(f.sse, n, f.d, f.m, VarianceMethod::kEdf);
  f.columns = design.columns;
  f.subcone_edge_count = design.cubic ? design.edge_count : 0;

  if (design.cubic) {
    f.column_coef = design.column_values.colPivHouseholderQr().solve(f.fitted);
    f.mspline_coef = f.column_coef;
    f.linear_coef = Vector(0);
    f.spline_monotone = cubic_is_monotone(f, design.sign);
    if (f.spline_monotone) {
      f.predictor = Predictor::kSpline;
    } else {
      std::vector<double> vals(f.fitted.data(), f.fitted.data() + f.fitted.size());
      for (double& v : vals) v *= design.sign;
      // The cone only guarantees monotone order at the design points;
      // clean up rounding before interpolating.
      for (std::size_t i = 1; i < vals.size(); ++i) vals[i] = std::max(vals[i], vals[i - 1]);
      f.interpolant = fritsch_carlson(f.x, vals);
      f.predictor = Predictor::kMonotoneInterpolant;
    }
    f.linear_coef = Vector::Constant(1, design.sign);  // carries the sign for prediction
    return f;
  }

  f.column_coef = f.projection.edge_coef.cwiseQuotient(design.cone.edge_scale);
  const Vector remainder = f.fitted - design.column_values * f.column_coef;
  f.linear_coef = design.cone.linear.colPivHouseholderQr().solve(remainder);
  f.predictor = Predictor::kSpline;
  return f;
}

}  // namespace

Aggregation aggregate_duplicates(const Dataset& data) {
  validate(data);
  const std::size_t n = data.x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data.x[a] < data.x[b]; });
  Aggregation out;
  for (std::size_t k = 0; k < n;) {
    const double xv = data.x[order[k]];
    double wsum = 0.0;
    double wy = 0.0;
    std::size_t run = 0;
    while (k < n && data.x[order[k]] == xv) {
      const double w = data.weights.empty() ? 1.0 : data.weights[order[k]];
      wsum += w;
      wy += w * data.y[order[k]];
      ++k;
      ++run;
    }
    if (run > 1) out.merged = true;
    out.data.x.push_back(xv);
    out.data.y.push_back(wy / wsum);
    out.data.weights.push_back(wsum);
  }
  return out;
}

int default_interior_knots(std::size_t n, int order) {
  const int degree = std::max(order - 1, 1);
  const double l = std::round(std::pow(static_cast<double>(n), 1.0 / (2.0 * degree + 1.0)));
  return std::clamp(static_cast<int>(l), 2, 10);
}

Fit fit(const Dataset& data, Shape shape, int order, int interior_knots,
        const FitOptions& options) {
  Aggregation agg = aggregate_duplicates(data);
  const Design design = spline_design(agg.data.x, shape, order, interior_knots, options.placement);
  Fit f = fit_on_design(design, agg.data, options.projection);
  if (agg.merged) {
    f.warnings.emplace_back("duplicate x values were aggregated to weighted means");
  }
  return f;
}

Fit fit_cubic_monotone(const Dataset& data, int interior_knots, Shape shape,
                       const FitOptions& options, const SubconeEdges* edges) {
  if (!is_monotone_only(shape)) {
    throw InvalidInput("cubic monotone fits need an increasing or decreasing shape");
  }
  Aggregation agg = aggregate_duplicates(data);
  const Design design =
      spline_design(agg.data.x, shape, 4, interior_knots, options.placement, edges);
  Fit f = fit_on_design(design, agg.data, options.projection);
  if (agg.merged) {
    f.warnings.emplace_back("duplicate x values were aggregated to weighted means");
  }
  return f;
}

ConeBasis fit_cone(std::span<const double> x, Shape shape, int order, int interior_knots,
                   KnotPlacement placement) {
  return spline_design(std::vector<double>(x.begin(), x.end()), shape, order, interior_knots,
                       placement)
      .cone;
}

Fit fit_classical(const Dataset& data, Shape shape, const ProjectionOptions& options) {
  Aggregation agg = aggregate_duplicates(data);
  const auto& x = agg.data.x;
  ConeBasis cone = classical_cone(shape, x, false);
  Fit f;
  f.shape = shape;
  f.order = 0;
  f.x = x;
  f.projection = project_data(agg.data, cone, options);
  f.fitted = f.projection.fitted;
  f.m = static_cast<int>(cone.m());
  f.r = static_cast<int>(cone.r());
  f.d = f.projection.effective_dim();
  f.sse = f.projection.sse;
  const int n = static_cast<int>(x.size());
  f.variance = variance_estimate(f.sse, n, f.d, std::min(f.m, n - 1), VarianceMethod::kEdf);
  f.predictor = Predictor::kPiecewiseLinear;
  if (agg.merged) {
    f.warnings.emplace_back("duplicate x values were aggregated to weighted means");
  }
  return f;
}

double predict(const Fit& f, double x0) {
  const double lo = f.x.front();
  const double hi = f.x.back();
  const double slack = 1e-12 * (hi - lo);
  if (!(x0 >= lo - slack && x0 <= hi + slack)) {
    throw InvalidInput("prediction at " + std::to_string(x0) +
                       " would extrapolate outside [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
  }
  x0 = std::clamp(x0, lo, hi);
  switch (f.predictor) {
    case Predictor::kSpline: {
      double v = 0.0;
      for (std::size_t j = 0; j < f.columns.size(); ++j) {
        v += f.column_coef(static_cast<Eigen::Index>(j)) * f.columns[j](x0);
      }
      if (f.mspline_coef.size() > 0) return v;
      if (f.linear_coef.size() > 0) v += f.linear_coef(0);
      if (f.linear_coef.size() > 1) v += f.linear_coef(1) * x0;
      return v;
    }
    case Predictor::kMonotoneInterpolant:
      return f.linear_coef(0) * (*f.interpolant)(x0);
    case Predictor::kPiecewiseLinear: {
      auto it = std::upper_bound(f.x.begin(), f.x.end(), x0);
      auto k = static_cast<std::size_t>(std::distance(f.x.begin(), it));
      k = std::clamp<std::size_t>(k, 1, f.x.size() - 1) - 1;
      const double t = (x0 - f.x[k]) / (f.x[k + 1] - f.x[k]);
      const auto kk = static_cast<Eigen::Index>(k);
      return (1.0 - t) * f.fitted(kk) + t * f.fitted(kk + 1);
    }
  }
  return 0.0;
}

std::vector<double> predict(const Fit& f, std::span<const double> x0) {
  std::vector<double> out;
  out.reserve(x0.size());
  for (double v : x0) out.push_back(predict(f, v));
  return out;
}

ParallelFit fit_parallel(const Dataset& data, Shape shape, int order, int interior_knots,
                         const FitOptions& options, double tolerance) {
  validate(data);
  if (data.group.empty()) throw InvalidInput("parallel-curves fit needs a group indicator");
  const std::size_t n = data.x.size();
  std::size_t ones = 0;
  for (int g : data.group) ones += static_cast<std::size_t>(g);
  if (ones == 0) {
    ParallelFit out;
    out.fit = fit(data, shape, order, interior_knots, options);
    out.beta = 0.0;
    out.total_sse = out.fit.sse;
    return out;
  }
  if (ones == n) throw InvalidInput("both groups must be nonempty");

  // Pooled distinct x define the basis; observations map onto them.
  std::vector<double> xs(data.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<std::size_t> slot(n);
  for (std::size_t i = 0; i < n; ++i) {
    slot[i] = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), data.x[i]) - xs.begin());
  }
  std::vector<double> w(n, 1.0);
  if (!data.weights.empty()) w = data.weights;
  std::vector<double> wsum(xs.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) wsum[slot[i]] += w[i];

  const Design design = spline_design(xs, shape, order, interior_knots, options.placement);

  auto aggregated = [&](double beta) {
    Dataset agg;
    agg.x = xs;
    agg.y.assign(xs.size(), 0.0);
    agg.weights = wsum;
    for (std::size_t i = 0; i < n; ++i) {
      agg.y[slot[i]] += w[i] * (data.y[i] - beta * data.group[i]);
    }
    for (std::size_t k = 0; k < xs.size(); ++k) agg.y[k] /= wsum[k];
    double within = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = data.y[i] - beta * data.group[i] - agg.y[slot[i]];
      within += w[i] * e * e;
    }
    return std::pair{std::move(agg), within};
  };
  int evaluations = 0;
  auto profile = [&](double beta) {
    ++evaluations;
    auto [agg, within] = aggregated(beta);
    return within + project_data(agg, design.cone, options.projection).sse;
  };

  double mean0 = 0.0, mean1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) (data.group[i] ? mean1 : mean0) += data.y[i];
  mean1 /= static_cast<double>(ones);
  mean0 /= static_cast<double>(n - ones);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = data.y[i] - (data.group[i] ? mean1 : mean0);
    ss += e * e;
  }
  const double pooled_sd = std::sqrt(ss / static_cast<double>(n - 2 > 0 ? n - 2 : 1));
  const double center = mean1 - mean0;
  double half = 4.0 * std::max(pooled_sd, 1e-12);

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto golden = [&](double a, double b) {
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = profile(c);
    double fd = profile(d);
    while (b - a > tolerance) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = profile(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = profile(d);
      }
    }
    return 0.5 * (a + b);
  };

  double lo = center - half;
  double hi = center + half;
  double beta = golden(lo, hi);
  auto at_edge = [&](double b, double a0, double b0) {
    return b - a0 < 2 * tolerance || b0 - b < 2 * tolerance;
  };
  if (at_edge(beta, lo, hi)) {
    half *= 2.0;
    lo = beta - half;
    hi = beta + half;
    beta = golden(lo, hi);
    if (at_edge(beta, lo, hi)) {
      throw NumericalError("profile SSE has no interior minimum in the search bracket");
    }
  }

  ParallelFit out;
  auto [agg, within] = aggregated(beta);
  out.fit = fit_on_design(design, agg, options.projection);
  out.beta = beta;
  out.total_sse = within + out.fit.sse;
  out.evaluations = evaluations;
  return out;
}

std::string_view to_string(TestKind kind) {
  return kind == TestKind::kConstantVsIncreasing ? "const-vs-incr" : "lin-vs-convex";
}

TestKind parse_test_kind(std::string_view name) {
  if (name == "const-vs-incr") return TestKind::kConstantVsIncreasing;
  if (name == "lin-vs-convex") return TestKind::kLinearVsConvex;
  throw InvalidInput("unknown test '" + std::string(name) + "'");
}

Shape alternative_shape(TestKind kind) {
  return kind == TestKind::kConstantVsIncreasing ? Shape::kIncreasing : Shape::kConvex;
}

ShapeTest::ShapeTest(TestKind kind, ConeBasis cone, MixingDistribution mix)
    : kind_(kind), cone_(std::move(cone)), mix_(std::move(mix)) {}

ShapeTest ShapeTest::spline(TestKind kind, std::span<const double> x, int order,
                            int interior_knots, std::uint64_t nsim, std::uint64_t seed,
                            KnotPlacement placement) {
  const Shape shape = alternative_shape(kind);
  if (kind == TestKind::kConstantVsIncreasing && order == 4) {
    throw InvalidInput("the increasing-alternative test needs a proper basis (order 2 or 3)");
  }
  Design design = spline_design(std::vector<double>(x.begin(), x.end()), shape, order,
                                interior_knots, placement);
  MixingDistribution mix = mixing_distribution(design.cone, nsim, seed);
  return ShapeTest(kind, std::move(design.cone), std::move(mix));
}

ShapeTest ShapeTest::classical(TestKind kind, std::span<const double> x,
                               std::uint64_t nsim, std::uint64_t seed) {
  ConeBasis cone = classical_cone(alternative_shape(kind), x, false);
  MixingDistribution mix = mixing_distribution(cone, nsim, seed);
  return ShapeTest(kind, std::move(cone), std::move(mix));
}

TestResult ShapeTest::run(const Vector& y) const { return b_statistic(y, cone_, &mix_); }

double ShapeTest::critical_value(double alpha) const {
  return beta_mixture_critical_value(alpha, mix_, static_cast<int>(cone_.n()),
                                     static_cast<int>(cone_.r()));
}

namespace {

TestResult run_test(const Dataset& data, TestKind kind, int order, int interior_knots,
                    std::uint64_t nsim, std::uint64_t seed) {
  validate(data);
  if (data.weighted()) throw InvalidInput("hypothesis tests take unweighted data");
  for (std::size_t i = 1; i < data.x.size(); ++i) {
    if (!(data.x[i] > data.x[i - 1])) {
      throw InvalidInput("hypothesis tests need strictly increasing x");
    }
  }
  const ShapeTest test = ShapeTest::spline(kind, data.x, order, interior_knots, nsim, seed);
  return test.run(to_vector(data.y));
}

}  // namespace

TestResult test_constant_vs_increasing(const Dataset& data, int order, int interior_knots,
                                       std::uint64_t nsim, std::uint64_t seed) {
  return run_test(data, TestKind::kConstantVsIncreasing, order, interior_knots, nsim, seed);
}

TestResult test_linear_vs_convex(const Dataset& data, int order, int interior_knots,
                                 std::uint64_t nsim, std::uint64_t seed) {
  return run_test(data, TestKind::kLinearVsConvex, order, interior_knots, nsim, seed);
}

}  // namespace shapereg
