#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "shapereg/simulation.hpp"

using namespace shapereg;

TEST_CASE("design points") {
  const auto x = equally_spaced_design(4, 0.0, 1.0);
  REQUIRE(x.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(x[i] == doctest::Approx(0.2 * (i + 1)).epsilon(1e-15));
  CHECK(equally_spaced_design(1, 0.0, 2.0)[0] == 1.0);
  CHECK_THROWS_AS(equally_spaced_design(0), InvalidInput);
}

TEST_CASE("test functions") {
  CHECK(evaluate(FunctionTag::kLinear4x, 0.3) == doctest::Approx(1.2));
  CHECK(evaluate(FunctionTag::kSigmoid, 0.5) == doctest::Approx(2.5));
  CHECK(evaluate(FunctionTag::kSigmoid, 0.7) ==
        doctest::Approx(5.0 / (1.0 + std::exp(-2.0))));
  CHECK(evaluate(FunctionTag::kQuad4x2, 0.5) == doctest::Approx(1.0));
  CHECK(evaluate(FunctionTag::kRamp, 0.5) == doctest::Approx(1.0));
  CHECK(evaluate(FunctionTag::kRamp, 1.0) == doctest::Approx(std::exp(4.0)));
  CHECK(evaluate(FunctionTag::kQuadX2, 0.3) == doctest::Approx(0.09));
  for (auto tag : {FunctionTag::kLinear4x, FunctionTag::kSigmoid, FunctionTag::kQuad4x2,
                   FunctionTag::kRamp, FunctionTag::kQuadX2}) {
    CHECK(parse_function_tag(to_string(tag)) == tag);
  }
  CHECK_THROWS_AS(parse_function_tag("cubic"), InvalidInput);
}

TEST_CASE("default specs") {
  for (int t = 1; t <= 6; ++t) {
    const SimulationSpec s = default_spec(t);
    CHECK(s.table == t);
    CHECK_FALSE(s.functions.empty());
    CHECK(s.n.size() == 3);
  }
  CHECK_THROWS_AS(default_spec(7), InvalidInput);
}

namespace {

SimulationSpec small(int table) {
  SimulationSpec s = default_spec(table);
  s.n = {20};
  if (!s.knots.empty()) s.knots = {2};
  if (!s.sigma.empty()) s.sigma = {1.0};
  if (!s.power_targets.empty()) s.power_targets = {0.5};
  s.functions.resize(1);
  s.reps = 40;
  s.nsim = 300;
  s.seed = 77;
  return s;
}

}  // namespace

TEST_CASE("small runs of every table are reproducible") {
  for (int t = 1; t <= 6; ++t) {
    CAPTURE(t);
    SimulationSpec a = small(t);
    a.threads = 1;
    SimulationSpec b = small(t);
    b.threads = 4;
    const Report ra = run_simulation(a);
    const Report rb = run_simulation(b);
    CHECK(ra.complete);
    CHECK_FALSE(ra.cells.empty());
    // thread count must not change the output
    const std::string csv_a = report_csv(ra);
    CHECK(csv_a == report_csv(rb));
    CHECK(report_csv(run_simulation(a)) == csv_a);
    CHECK(csv_a.rfind("# table " + std::to_string(t), 0) == 0);
    CHECK(csv_a.find("\nfunction,n,sigma,target,knots,method,metric,value,se,reps\n") != std::string::npos);
    const std::string json = report_json(ra);
    CHECK(json.find("\"cells\"") != std::string::npos);
    CHECK(json.find("runtime") == std::string::npos);
    CHECK(report_json(ra, true).find("runtime") != std::string::npos);
  }
}

TEST_CASE("report lookup") {
  const Report r = run_simulation(small(1));
  const std::string f = std::string(to_string(small(1).functions[0]));
  const Cell& c = r.find(f, 20, "MSPL2", "rmse");
  CHECK(c.value > 0.0);
  CHECK(c.reps == 40);
  CHECK(r.find(f, 20, "MSPL2", "rmse", 1.0).value == c.value);
  CHECK(r.find(f, 20, "MR", "rmse").value > 0.0);
  CHECK(r.find(f, 20, "MSPL4", "rmse").value > 0.0);
  const double dom = r.find(f, 20, "MSPL2", "dominance").value;
  CHECK(dom >= 0.0);
  CHECK(dom <= 1.0);
  CHECK_THROWS_AS(r.find(f, 20, "MSPL2", "rmse", 2.0), InvalidInput);
  CHECK_THROWS_AS(r.find(f, 21, "MSPL2", "rmse"), InvalidInput);
}

TEST_CASE("power cells") {
  const Report r = run_simulation(small(3));
  const std::string f = std::string(to_string(small(3).functions[0]));
  CHECK(r.find(f, 20, "F", "sigma", 0.5).value > 0.0);
  for (const char* m : {"F", "IQRS", "MREG"}) {
    const double p = r.find(f, 20, m, "power", 0.5).value;
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("time budget marks the report incomplete") {
  SimulationSpec s = small(1);
  s.n = {20, 40, 80};
  s.max_seconds = 1e-9;
  int calls = 0;
  const Report r = run_simulation(s, [&](const Report&) { ++calls; });
  CHECK_FALSE(r.complete);
  CHECK(calls <= 1);
  CHECK_FALSE(r.notes.empty());
}

TEST_CASE("progress callback sees each design point") {
  SimulationSpec s = small(5);
  s.sigma = {0.1, 1.0};
  std::vector<std::size_t> sizes;
  const Report r = run_simulation(s, [&](const Report& partial) { sizes.push_back(partial.cells.size()); });
  REQUIRE(sizes.size() == 2);
  CHECK(sizes[0] < sizes[1]);
  CHECK(sizes[1] == r.cells.size());
}

TEST_CASE("hinge iteration profile") {
  const IterationProfile p = hinge_iteration_profile(50, 4, 200, 3);
  std::uint64_t total = 0;
  for (auto h : p.histogram) total += h;
  CHECK(total == 200);
  CHECK(p.max == static_cast<int>(p.histogram.size()) - 1);
  CHECK(p.histogram[static_cast<std::size_t>(p.mode)] > 0);
  CHECK(p.max <= 12);
  const IterationProfile q = hinge_iteration_profile(50, 4, 200, 3);
  CHECK(q.histogram == p.histogram);
}
