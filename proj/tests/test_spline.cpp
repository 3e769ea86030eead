#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "shapereg/simulation.hpp"
#include "shapereg/spline.hpp"

using namespace shapereg;

namespace {

std::vector<double> uniform_grid(int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = static_cast<double>(i) / (n - 1);
  return x;
}

KnotVector sample_knots(int order) {
  return KnotVector(order, {0.2, 0.45, 0.7}, 0.0, 1.0);
}

}  // namespace

TEST_CASE("quantile knots on a uniform grid") {
  const auto x = uniform_grid(40);
  const KnotVector kv = make_knots(x, 3, 3);
  REQUIRE(kv.interior_count() == 3);
  CHECK(kv.interior()[0] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(kv.interior()[1] == doctest::Approx(0.50).epsilon(1e-9));
  CHECK(kv.interior()[2] == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(kv.basis_count() == 6);
}

TEST_CASE("no interior knots leaves only stacked boundary knots") {
  const auto x = uniform_grid(7);
  const KnotVector kv = make_knots(x, 0, 3);
  CHECK(kv.basis_count() == 3);
  CHECK(kv.knots() == std::vector<double>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("boundary knots are stacked order-deep") {
  std::vector<double> x;
  for (int i = 0; i <= 10; ++i) x.push_back(i / 10.0);
  const KnotVector kv = make_knots(x, 2, 3);
  const auto& t = kv.knots();
  REQUIRE(t.size() == 8);
  CHECK(t[0] == 0.0);
  CHECK(t[1] == 0.0);
  CHECK(t[2] == 0.0);
  CHECK(t[5] == 1.0);
  CHECK(t[6] == 1.0);
  CHECK(t[7] == 1.0);
}

TEST_CASE("knot construction rejects bad designs") {
  CHECK_THROWS_AS(make_knots(std::vector<double>{0, 0.5, 0.5, 1}, 1, 2), InvalidInput);
  // five points cannot populate nine intervals
  CHECK_THROWS_AS(make_knots(uniform_grid(5), 8, 2), InvalidInput);
}

TEST_CASE("equal-spacing placement") {
  const auto x = equally_spaced_design(40);
  const KnotVector kv = make_knots(x, 3, 2, KnotPlacement::kEqualSpacing);
  const double lo = x.front(), hi = x.back();
  for (int j = 0; j < 3; ++j)
    CHECK(kv.interior()[j] == doctest::Approx(lo + (hi - lo) * (j + 1) / 4.0));
}

TEST_CASE("order-1 M-splines are normalized indicators") {
  const KnotVector kv = sample_knots(1);
  const auto& t = kv.knots();
  for (int i = 0; i < kv.basis_count(); ++i) {
    const PiecewisePoly m = mspline(kv, i);
    const double mid = 0.5 * (t[i] + t[i + 1]);
    CHECK(m(mid) == doctest::Approx(1.0 / (t[i + 1] - t[i])));
  }
}

TEST_CASE("M-splines vanish off their support and integrate to one") {
  for (int order = 1; order <= 4; ++order) {
    const KnotVector kv = sample_knots(order);
    const auto& t = kv.knots();
    const auto ms = msplines(kv);
    REQUIRE(static_cast<int>(ms.size()) == kv.basis_count());
    for (int i = 0; i < kv.basis_count(); ++i) {
      const double a = t[i], b = t[i + order];
      for (double u : oracle::grid(0.0, 1.0, 401)) {
        if (u < a - 1e-12 || u > b + 1e-12) CHECK(ms[i](u) == 0.0);
      }
      // integrate each knot interval separately so kinks sit on endpoints
      double total = 0.0;
      for (int s = i; s < i + order; ++s)
        if (t[s + 1] > t[s])
          total += oracle::integrate([&](double u) { return ms[i](u); }, t[s], t[s + 1], 20);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("I-splines rise from 0 to 1 and differentiate to M-splines") {
  for (int order = 1; order <= 3; ++order) {
    const KnotVector kv = sample_knots(order);
    for (int i = 0; i < kv.basis_count(); ++i) {
      const PiecewisePoly m = mspline(kv, i);
      const PiecewisePoly s = ispline(kv, i);
      CHECK(s(0.0) == doctest::Approx(0.0));
      CHECK(s(1.0) == doctest::Approx(1.0).epsilon(1e-8));
      // split at the knots below 0.6 so every panel is smooth
      double quad = 0.0, left = 0.0;
      for (double b : {0.2, 0.45, 0.6}) {
        quad += oracle::integrate([&](double u) { return m(u); }, left, b, 50);
        left = b;
      }
      CHECK(s(0.6) == doctest::Approx(quad).epsilon(1e-6));
      double prev = -1.0;
      for (double u : oracle::grid(1e-3, 1 - 1e-3, 997)) {
        CHECK(s(u) >= prev - 1e-14);
        prev = s(u);
        if (order >= 2) {
          const double fd = oracle::derivative([&](double v) { return s(v); }, u);
          CHECK(std::abs(fd - m(u)) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("C-splines are convex and differentiate to I-splines") {
  for (int order = 1; order <= 2; ++order) {
    const KnotVector kv = sample_knots(order);
    for (int i = 0; i < kv.basis_count(); ++i) {
      const PiecewisePoly s = ispline(kv, i);
      const PiecewisePoly c = cspline(kv, i);
      CHECK(c(0.0) == doctest::Approx(0.0));
      const auto g = oracle::grid(0.0, 1.0, 1001);
      for (std::size_t k = 1; k + 1 < g.size(); ++k) {
        CHECK(c(g[k + 1]) - 2 * c(g[k]) + c(g[k - 1]) >= -1e-12);
        bool near_knot = false;
        for (double b : kv.interior()) near_knot |= std::abs(g[k] - b) < 1e-5;
        if (near_knot) continue;
        const double fd = oracle::derivative([&](double v) { return c(v); }, g[k]);
        CHECK(std::abs(fd - s(g[k])) < 1e-6);
      }
    }
  }
}

TEST_CASE("quadratic I-spline basis: one rising column at each interior knot") {
  const KnotVector kv = sample_knots(2);
  const auto cols = basis_columns(kv, Shape::kIncreasing);
  for (double knot : kv.interior()) {
    int rising = 0;
    for (const auto& c : cols)
      if (c.poly.derivative_at(knot) > 1e-9) ++rising;
    CHECK(rising == 1);
  }
}

TEST_CASE("cubic C-spline basis: one column with curvature at each knot") {
  const KnotVector kv = sample_knots(2);
  const auto cols = basis_columns(kv, Shape::kConvex);
  for (double knot : kv.breakpoints()) {
    int curved = 0;
    for (const auto& c : cols)
      if (c.poly.derivative_at(knot, 2) > 1e-9) ++curved;
    CHECK(curved == 1);
  }
}

TEST_CASE("decreasing columns negate increasing ones") {
  const auto x = equally_spaced_design(30);
  const KnotVector kv = make_knots(x, 3, 2);
  const BasisMatrix up = basis_vectors(kv, x, Shape::kIncreasing);
  const BasisMatrix down = basis_vectors(kv, x, Shape::kDecreasing);
  CHECK(oracle::max_abs_diff(up.values, -down.values) == 0.0);
}

TEST_CASE("mixed shapes append the identity column") {
  const auto x = equally_spaced_design(30);
  const KnotVector kv = make_knots(x, 3, 2);
  const BasisMatrix convex = basis_vectors(kv, x, Shape::kConvex);
  const BasisMatrix mixed = basis_vectors(kv, x, Shape::kIncreasingConvex);
  REQUIRE(mixed.values.cols() == convex.values.cols() + 1);
  const Eigen::VectorXd last = mixed.values.col(mixed.values.cols() - 1);
  // identity up to an additive constant
  for (int i = 1; i < 30; ++i)
    CHECK(last(i) - last(0) == doctest::Approx(x[i] - x[0]));
}

TEST_CASE("cubic I-splines are not offered as a proper basis") {
  const auto x = equally_spaced_design(30);
  const KnotVector kv = make_knots(x, 3, 3);
  CHECK_THROWS_AS(basis_vectors(kv, x, Shape::kIncreasing), InvalidInput);
}

TEST_CASE("nonnegative combinations keep the shape") {
  std::mt19937_64 rng(7);
  std::exponential_distribution<double> coef(1.0);
  std::normal_distribution<double> z;
  const auto x = equally_spaced_design(35);
  for (Shape shape : kAllShapes) {
    for (int order = 1; order <= 2; ++order) {
      const KnotVector kv = make_knots(x, 4, order);
      const BasisMatrix b = basis_vectors(kv, x, shape);
      for (int rep = 0; rep < 200; ++rep) {
        Eigen::VectorXd c(b.values.cols());
        for (auto& v : c) v = coef(rng);
        Eigen::VectorXd f = b.values * c;
        const double a = z(rng), slope = is_curvature_only(shape) ? z(rng) : 0.0;
        for (int i = 0; i < f.size(); ++i) f(i) += a + slope * x[i];
        const bool up = shape == Shape::kIncreasing || shape == Shape::kIncreasingConvex ||
                        shape == Shape::kIncreasingConcave;
        const bool down = shape == Shape::kDecreasing || shape == Shape::kDecreasingConvex ||
                          shape == Shape::kDecreasingConcave;
        const bool convex = shape == Shape::kConvex || shape == Shape::kIncreasingConvex ||
                            shape == Shape::kDecreasingConvex;
        const bool concave = shape == Shape::kConcave || shape == Shape::kIncreasingConcave ||
                             shape == Shape::kDecreasingConcave;
        for (int i = 0; i + 1 < f.size(); ++i) {
          if (up) CHECK(f(i + 1) - f(i) >= -1e-10);
          if (down) CHECK(f(i + 1) - f(i) <= 1e-10);
        }
        for (int i = 1; i + 1 < f.size(); ++i) {
          const double dd = f(i + 1) - 2 * f(i) + f(i - 1);
          if (convex) CHECK(dd >= -1e-10);
          if (concave) CHECK(dd <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("piecewise polynomial calculus") {
  // x^2 on two pieces, stored about each left breakpoint
  const PiecewisePoly p({0.0, 1.0, 2.0}, {{0.0, 0.0, 1.0}, {1.0, 2.0, 1.0}});
  CHECK(p(1.5) == doctest::Approx(2.25));
  CHECK(p.derivative_at(1.5) == doctest::Approx(3.0));
  CHECK(p.integral()(2.0) == doctest::Approx(8.0 / 3.0));
  CHECK(p(2.5) == 0.0);
  CHECK(p.derivative()(0.5) == doctest::Approx(1.0));
}

TEST_CASE("reflected knot vector mirrors the interior") {
  const KnotVector kv(3, {0.1, 0.6}, 0.0, 1.0);
  const KnotVector rk = kv.reflected();
  CHECK(rk.interior()[0] == doctest::Approx(0.4));
  CHECK(rk.interior()[1] == doctest::Approx(0.9));
}

TEST_CASE("M-spline matrix matches pointwise evaluation") {
  const auto x = equally_spaced_design(20);
  const KnotVector kv = make_knots(x, 2, 4);
  const Eigen::MatrixXd mm = mspline_matrix(kv, x);
  const auto ms = msplines(kv);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < kv.basis_count(); ++j) CHECK(mm(i, j) == doctest::Approx(ms[j](x[i])));
}
