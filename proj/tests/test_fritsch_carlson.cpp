#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "shapereg/fritsch_carlson.hpp"

using namespace shapereg;

TEST_CASE("collinear values give the straight line") {
  const std::vector<double> x{0.0, 0.3, 0.5, 1.2, 2.0};
  std::vector<double> v;
  for (double u : x) v.push_back(1.0 + 2.5 * u);
  const auto f = fritsch_carlson(x, v);
  for (double u : oracle::grid(0.0, 2.0, 201)) {
    CHECK(f(u) == doctest::Approx(1.0 + 2.5 * u).epsilon(1e-13));
    CHECK(f.derivative(u) == doctest::Approx(2.5).epsilon(1e-12));
  }
}

TEST_CASE("flat segments stay flat") {
  const std::vector<double> x{0, 1, 2, 3, 4};
  const std::vector<double> v{0, 1, 1, 3, 7};
  const auto f = fritsch_carlson(x, v);
  for (double u : oracle::grid(1.0, 2.0, 51)) CHECK(f(u) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("random monotone data: interpolating and nondecreasing") {
  std::mt19937_64 rng(1980);
  std::exponential_distribution<double> gap(1.0);
  std::bernoulli_distribution flat(0.2);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 30);
    std::vector<double> x{0.0}, v{0.0};
    for (int i = 1; i < n; ++i) {
      x.push_back(x.back() + 0.05 + gap(rng));
      v.push_back(v.back() + (flat(rng) ? 0.0 : gap(rng) * gap(rng) * 3.0));
    }
    const auto f = fritsch_carlson(x, v);
    for (int i = 0; i < n; ++i) CHECK(f(x[i]) == v[i]);
    double worst = 0.0;
    double prev = -1e300;
    bool monotone = true;
    for (double u : oracle::grid(x.front(), x.back(), 10000)) {
      worst = std::min(worst, f.derivative(u));
      const double val = f(u);
      monotone &= val >= prev - 1e-12;
      prev = val;
    }
    CHECK(worst >= -1e-10);
    CHECK(monotone);
  }
}

TEST_CASE("two nodes") {
  const auto f = fritsch_carlson(std::vector<double>{1.0, 3.0}, std::vector<double>{2.0, 6.0});
  CHECK(f(2.0) == doctest::Approx(4.0));
}

TEST_CASE("invalid input") {
  CHECK_THROWS(fritsch_carlson(std::vector<double>{0, 1, 1}, std::vector<double>{0, 1, 2}));
  CHECK_THROWS(fritsch_carlson(std::vector<double>{0, 1, 2}, std::vector<double>{0, 2, 1}));
  CHECK_THROWS(fritsch_carlson(std::vector<double>{0, 1}, std::vector<double>{0}));
}
