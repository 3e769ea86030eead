#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "shapereg/types.hpp"

namespace shapereg {

enum class FunctionTag { kLinear4x, kSigmoid, kQuad4x2, kRamp, kQuadX2 };

std::string_view to_string(FunctionTag tag);
FunctionTag parse_function_tag(std::string_view name);
double evaluate(FunctionTag tag, double x);

/// n points equally spaced on the open interval (lo, hi): lo + (hi - lo) i / (n + 1).
std::vector<double> equally_spaced_design(int n, double lo = 0.0, double hi = 1.0);

/// One of the six simulation tables.
///   1: monotone fits (MR, MSPL2, MSPL4), root mean SEL
///   2: monotone-convex fits (MCR, MCSPL2, MCSPL4), root mean SEL
///   3: power of constant vs increasing (F, IQRS, MREG)
///   4: power of linear vs convex (F, CQRS, CREG)
///   5: sigma estimators under monotone fits (MQRS, MQRS-cons, M-W, MLE)
///   6: sigma estimators under convex fits (CQRS, CQRS-cons, MLE)
struct SimulationSpec {
  int table = 1;
  std::vector<FunctionTag> functions;
  std::vector<int> n;
  /// Noise levels for tables 1, 2, 5, 6.
  std::vector<double> sigma;
  /// F-test power targets for tables 3 and 4; sigma is calibrated per cell.
  std::vector<double> power_targets;
  int reps = 1000;
  /// Interior knots per entry of `n` (tables 3-6); tables 1-2 fix them per method.
  std::vector<int> knots;
  std::uint64_t seed = 20090601;
  /// Null simulations for the test mixing distributions.
  std::uint64_t nsim = 10000;
  double alpha = 0.05;
  /// Tables 3-4: calibrate sigma on one-sided t power instead of the
  /// noncentral F power.
  bool one_sided_calibration = false;
  /// Wall-clock budget; 0 disables. Cells not started in time are omitted
  /// and the report is marked incomplete.
  double max_seconds = 0.0;
  unsigned threads = 0;
};

/// Full-size designs with reduced replication counts.
SimulationSpec default_spec(int table);

struct Cell {
  std::string function;
  int n = 0;
  double sigma = 0.0;
  /// F-power target (tables 3-4), else 0.
  double target = 0.0;
  int knots = 0;
  std::string method;
  std::string metric;
  double value = 0.0;
  /// Monte Carlo standard error of `value`.
  double se = 0.0;
  int reps = 0;
};

struct Report {
  SimulationSpec spec;
  std::vector<Cell> cells;
  bool complete = true;
  double runtime_seconds = 0.0;
  std::vector<std::string> notes;

  /// First cell matching all given fields; throws InvalidInput if none.
  const Cell& find(std::string_view function, int n, std::string_view method,
                   std::string_view metric, double sigma_or_target = -1.0) const;
};

/// Called after each completed design point with the report so far.
using ProgressCallback = std::function<void(const Report&)>;

Report run_simulation(const SimulationSpec& spec, const ProgressCallback& progress = {});

/// Byte-stable renderings; the runtime is included only when asked.
std::string report_csv(const Report& report, bool timing = false);
std::string report_json(const Report& report, bool timing = false);

/// Iteration counts of the hinge algorithm for monotone quadratic spline
/// fits to y = x^2 + N(0, 1), x equally spaced on (0, 2).
struct IterationProfile {
  std::vector<std::uint64_t> histogram;
  int max = 0;
  int mode = 0;
};
IterationProfile hinge_iteration_profile(int n, int interior_knots, int reps, std::uint64_t seed);

}  // namespace shapereg
