#include "shapereg/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "shapereg/csv.hpp"
#include "shapereg/mixing_cache.hpp"
#include "shapereg/models.hpp"
#include "shapereg/simulation.hpp"

namespace shapereg {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

KnotPlacement parse_placement(const std::string& s) {
  if (s == "quantile") return KnotPlacement::kQuantile;
  if (s == "equal") return KnotPlacement::kEqualSpacing;
  throw InvalidInput("placement must be 'quantile' or 'equal'");
}

CsvTable read_input(const std::string& path) {
  if (path == "-") return read_csv(std::cin);
  return read_csv_file(path);
}

// Writes the whole result at once so a failure leaves no partial output.
void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    out.flush();
    return;
  }
  const std::string tmp = out_path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    f << text;
    if (!f) throw NumericalError("cannot write '" + out_path + "'");
  }
  if (std::rename(tmp.c_str(), out_path.c_str()) != 0) {
    throw NumericalError("cannot write '" + out_path + "'");
  }
}

void check_format(const std::string& format) {
  if (format != "csv" && format != "json") throw InvalidInput("format must be 'csv' or 'json'");
}

int default_order(Shape shape) { return is_monotone_only(shape) ? 3 : 4; }

std::unique_ptr<MixingCache> open_cache(const std::string& dir, bool disabled) {
  if (disabled) return nullptr;
  if (!dir.empty()) return std::make_unique<MixingCache>(dir);
  if (auto d = MixingCache::default_dir()) return std::make_unique<MixingCache>(*d);
  return nullptr;
}

void report_provenance(const MixingLookup& lookup, const MixingKey& key, std::ostream& err) {
  if (lookup.cache_hit) {
    err << "mixing: cache hit " << lookup.path << "\n";
  } else {
    err << "mixing: simulated " << key.nsim << " draws with seed " << key.seed;
    if (!lookup.path.empty()) err << ", stored at " << lookup.path;
    err << "\n";
  }
}

struct Common {
  std::string input;
  std::string out;
  std::string format = "csv";
  std::string x_col = "x";
  std::string y_col = "y";
  std::string placement = "quantile";
  std::optional<int> order;
  std::optional<int> knots;
};

void add_data_options(CLI::App* cmd, Common& c) {
  cmd->add_option("input", c.input, "CSV file with a header row ('-' for stdin)")->required();
  cmd->add_option("--x-col", c.x_col, "Name of the x column");
  cmd->add_option("--y-col", c.y_col, "Name of the y column");
}

void add_spline_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--order", c.order, "Spline order (degree + 1)");
  cmd->add_option("--knots", c.knots, "Number of interior knots")->check(CLI::NonNegativeNumber);
  cmd->add_option("--placement", c.placement, "Knot placement: quantile or equal");
}

void add_output_options(CLI::App* cmd, Common& c, const std::string& default_format) {
  c.format = default_format;
  cmd->add_option("--out", c.out, "Output file (default stdout)");
  cmd->add_option("--format", c.format, "Output format: csv or json");
}

// fit ---------------------------------------------------------------------

struct FitArgs {
  Common c;
  std::string shape = "increasing";
  std::optional<std::string> weights_col;
  std::optional<std::string> group_col;
  bool classical = false;
};

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  check_format(a.c.format);
  ColumnNames names{a.c.x_col, a.c.y_col, a.weights_col, a.group_col};
  const Dataset data = dataset_from_csv(read_input(a.c.input), names);
  const Shape shape = parse_shape(a.shape);
  FitOptions options;
  options.placement = parse_placement(a.c.placement);

  Fit f;
  std::optional<double> beta;
  int l = 0;
  if (a.classical) {
    if (a.group_col) throw InvalidInput("--group-col is not available with --classical");
    f = fit_classical(data, shape, options.projection);
  } else {
    const int order = a.c.order.value_or(default_order(shape));
    l = a.c.knots.value_or(default_interior_knots(aggregate_duplicates(data).data.size(), order));
    if (a.group_col) {
      ParallelFit pf = fit_parallel(data, shape, order, l, options);
      f = std::move(pf.fit);
      beta = pf.beta;
    } else {
      f = fit(data, shape, order, l, options);
    }
  }
  for (const auto& w : f.warnings) err << "warning: " << w << "\n";

  std::vector<double> interior;
  if (f.knots) interior = f.knots->interior();
  std::string text;
  if (a.c.format == "csv") {
    std::ostringstream s;
    s << "# shape," << to_string(f.shape) << "\n";
    s << "# method," << (a.classical ? "classical" : "spline") << "\n";
    s << "# order," << f.order << "\n";
    s << "# knots," << interior.size();
    for (double k : interior) s << "," << num(k);
    s << "\n# n," << f.x.size() << "\n# d," << f.d << "\n# sse," << num(f.sse)
      << "\n# sigma2," << num(f.variance.sigma2) << "\n";
    if (beta) s << "# beta," << num(*beta) << "\n";
    if (f.subcone_edge_count > 0) s << "# subcone_edges," << f.subcone_edge_count << "\n";
    s << "x,fitted\n";
    for (std::size_t i = 0; i < f.x.size(); ++i) {
      s << num(f.x[i]) << "," << num(f.fitted(static_cast<Eigen::Index>(i))) << "\n";
    }
    text = s.str();
  } else {
    json j;
    j["shape"] = std::string(to_string(f.shape));
    j["method"] = a.classical ? "classical" : "spline";
    j["order"] = f.order;
    j["knots"] = interior;
    j["n"] = f.x.size();
    j["d"] = f.d;
    j["sse"] = f.sse;
    j["sigma2"] = f.variance.sigma2;
    if (beta) j["beta"] = *beta;
    j["warnings"] = f.warnings;
    j["x"] = f.x;
    j["fitted"] = std::vector<double>(f.fitted.data(), f.fitted.data() + f.fitted.size());
    text = j.dump(2) + "\n";
  }
  emit(text, a.c.out, out);
  return kExitOk;
}

// test --------------------------------------------------------------------

struct TestArgs {
  Common c;
  std::string test = "const-vs-incr";
  std::uint64_t nsim = 10000;
  std::uint64_t seed = 1;
  std::string cache_dir;
  bool no_cache = false;
};

int cmd_test(const TestArgs& a, std::ostream& out, std::ostream& err) {
  check_format(a.c.format);
  const Dataset data = dataset_from_csv(read_input(a.c.input), {a.c.x_col, a.c.y_col, {}, {}});
  for (std::size_t i = 1; i < data.x.size(); ++i) {
    if (!(data.x[i] > data.x[i - 1])) {
      throw InvalidInput("tests need strictly increasing, distinct x");
    }
  }
  const TestKind kind = parse_test_kind(a.test);
  const Shape shape = alternative_shape(kind);
  const int order = a.c.order.value_or(default_order(shape));
  if (kind == TestKind::kConstantVsIncreasing && order > 3) {
    throw InvalidInput("const-vs-incr needs order 2 or 3");
  }
  const int l = a.c.knots.value_or(default_interior_knots(data.x.size(), order));
  const KnotPlacement placement = parse_placement(a.c.placement);
  ConeBasis cone = fit_cone(data.x, shape, order, l, placement);

  MixingKey key{data.x.size(), design_hash(data.x), shape, order, l, placement, a.nsim, a.seed};
  const auto cache = open_cache(a.cache_dir, a.no_cache);
  MixingLookup lookup = cached_mixing(cache.get(), key, cone);
  report_provenance(lookup, key, err);
  const ShapeTest test(kind, std::move(cone), lookup.mix);
  const Vector y = Eigen::Map<const Vector>(data.y.data(), static_cast<Eigen::Index>(data.y.size()));
  const TestResult r = test.run(y);

  std::string text;
  if (a.c.format == "json") {
    json j;
    j["test"] = std::string(to_string(kind));
    j["n"] = data.x.size();
    j["order"] = order;
    j["knots"] = l;
    j["statistic"] = r.statistic;
    j["sse0"] = r.sse0;
    j["sse1"] = r.sse1;
    j["active"] = r.active;
    j["d"] = r.d;
    j["p_value"] = r.p_value;
    j["mixing"] = {{"key", key.describe()},
                   {"nsim", lookup.mix.nsim},
                   {"seed", lookup.mix.seed},
                   {"probs", lookup.mix.probs}};
    text = j.dump(2) + "\n";
  } else {
    std::ostringstream s;
    s << "test,n,order,knots,statistic,sse0,sse1,active,d,p_value\n"
      << to_string(kind) << "," << data.x.size() << "," << order << "," << l << ","
      << num(r.statistic) << "," << num(r.sse0) << "," << num(r.sse1) << "," << r.active << ","
      << r.d << "," << num(r.p_value) << "\n";
    text = s.str();
  }
  emit(text, a.c.out, out);
  return kExitOk;
}

// mixing ------------------------------------------------------------------

struct MixingArgs {
  Common c;
  std::optional<int> n;
  std::string shape = "increasing";
  bool classical = false;
  std::uint64_t nsim = 10000;
  std::uint64_t seed = 1;
  std::string cache_dir;
  bool no_cache = false;
};

int cmd_mixing(const MixingArgs& a, std::ostream& out, std::ostream& err) {
  check_format(a.c.format);
  std::vector<double> x;
  if (!a.c.input.empty()) {
    x = dataset_from_csv(read_input(a.c.input), {a.c.x_col, a.c.x_col, {}, {}}).x;
  } else if (a.n) {
    x = equally_spaced_design(*a.n);
  } else {
    throw InvalidInput("give --n or --input");
  }
  const Shape shape = parse_shape(a.shape);
  const KnotPlacement placement = parse_placement(a.c.placement);
  int order = 0;
  int l = 0;
  ConeBasis cone;
  if (a.classical) {
    cone = classical_cone(shape, x, false);
  } else {
    order = a.c.order.value_or(default_order(shape));
    l = a.c.knots.value_or(default_interior_knots(x.size(), order));
    cone = fit_cone(x, shape, order, l, placement);
  }
  MixingKey key{x.size(), design_hash(x), shape, order, l, placement, a.nsim, a.seed};
  const auto cache = open_cache(a.cache_dir, a.no_cache);
  const MixingLookup lookup = cached_mixing(cache.get(), key, cone);
  report_provenance(lookup, key, err);

  std::string text;
  if (a.c.format == "json") {
    json j;
    j["key"] = key.describe();
    j["nsim"] = lookup.mix.nsim;
    j["seed"] = lookup.mix.seed;
    j["r"] = lookup.mix.r;
    j["counts"] = lookup.mix.counts;
    j["probs"] = lookup.mix.probs;
    text = j.dump(2) + "\n";
  } else {
    std::ostringstream s;
    s << "# " << key.describe() << "\n" << "d,count,prob\n";
    for (std::size_t d = 0; d < lookup.mix.probs.size(); ++d) {
      s << d << "," << lookup.mix.counts[d] << "," << num(lookup.mix.probs[d]) << "\n";
    }
    text = s.str();
  }
  emit(text, a.c.out, out);
  return kExitOk;
}

// simulate ----------------------------------------------------------------

struct SimulateArgs {
  Common c;
  int table = 0;
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> nsim;
  std::vector<int> n;
  std::vector<double> sigma;
  std::vector<int> knots;
  std::vector<std::string> functions;
  bool full_scale = false;
  double max_seconds = 0.0;
  bool timing = false;
  unsigned threads = 0;
  std::string calibration = "f";
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  check_format(a.c.format);
  SimulationSpec spec = default_spec(a.table);
  if (a.full_scale) spec.reps = 10000;
  if (a.reps) spec.reps = *a.reps;
  if (a.seed) spec.seed = *a.seed;
  if (a.nsim) spec.nsim = *a.nsim;
  if (!a.n.empty()) spec.n = a.n;
  if (!a.knots.empty()) spec.knots = a.knots;
  if (!a.sigma.empty()) {
    if (spec.table == 3 || spec.table == 4) {
      spec.power_targets = a.sigma;
    } else {
      spec.sigma = a.sigma;
    }
  }
  if (!a.functions.empty()) {
    spec.functions.clear();
    for (const auto& f : a.functions) spec.functions.push_back(parse_function_tag(f));
  }
  if (a.calibration == "one-sided") {
    spec.one_sided_calibration = true;
  } else if (a.calibration != "f") {
    throw InvalidInput("calibration must be 'f' or 'one-sided'");
  }
  spec.max_seconds = a.max_seconds;
  spec.threads = a.threads;

  auto render = [&](const Report& r) {
    return a.c.format == "json" ? report_json(r, a.timing) : report_csv(r, a.timing);
  };
  ProgressCallback checkpoint;
  if (!a.c.out.empty()) {
    checkpoint = [&](const Report& r) { emit(render(r), a.c.out, out); };
  }
  const Report report = run_simulation(spec, checkpoint);
  emit(render(report), a.c.out, out);
  if (!report.complete) {
    err << "simulate: time budget exhausted, report is partial\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shape-restricted regression splines"};
  app.name("shapereg");
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a shape-restricted regression spline");
  add_data_options(fit_cmd, fit_args.c);
  add_spline_options(fit_cmd, fit_args.c);
  add_output_options(fit_cmd, fit_args.c, "csv");
  fit_cmd->add_option("--shape", fit_args.shape, "Shape restriction");
  fit_cmd->add_option("--weights-col", fit_args.weights_col, "Column of inverse-variance weights");
  fit_cmd->add_option("--group-col", fit_args.group_col,
                      "0/1 column for a parallel-curves fit");
  fit_cmd->add_flag("--classical", fit_args.classical, "Unsmoothed shape-restricted fit");

  TestArgs test_args;
  auto* test_cmd = app.add_subcommand("test", "Test a parametric null against a shape alternative");
  add_data_options(test_cmd, test_args.c);
  add_spline_options(test_cmd, test_args.c);
  add_output_options(test_cmd, test_args.c, "json");
  test_cmd->add_option("--test", test_args.test, "const-vs-incr or lin-vs-convex");
  test_cmd->add_option("--nsim", test_args.nsim, "Null simulations for P(D = d)");
  test_cmd->add_option("--seed", test_args.seed, "Seed for the mixing distribution");
  test_cmd->add_option("--cache-dir", test_args.cache_dir, "Mixing cache directory");
  test_cmd->add_flag("--no-cache", test_args.no_cache, "Do not read or write the cache");

  MixingArgs mix_args;
  auto* mix_cmd = app.add_subcommand("mixing", "Compute and cache a null mixing distribution");
  mix_cmd->add_option("--input", mix_args.c.input, "CSV whose x column is the design");
  mix_cmd->add_option("--x-col", mix_args.c.x_col, "Name of the x column");
  mix_cmd->add_option("--n", mix_args.n, "Equally spaced design of n points on (0, 1)");
  add_spline_options(mix_cmd, mix_args.c);
  add_output_options(mix_cmd, mix_args.c, "csv");
  mix_cmd->add_option("--shape", mix_args.shape, "Shape of the alternative cone");
  mix_cmd->add_flag("--classical", mix_args.classical, "Use the unsmoothed cone");
  mix_cmd->add_option("--nsim", mix_args.nsim, "Null simulations");
  mix_cmd->add_option("--seed", mix_args.seed, "Seed");
  mix_cmd->add_option("--cache-dir", mix_args.cache_dir, "Mixing cache directory");
  mix_cmd->add_flag("--no-cache", mix_args.no_cache, "Do not read or write the cache");

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Run one of the simulation tables (1-6)");
  sim_cmd->add_option("--table", sim_args.table, "Table number")->required()->check(CLI::Range(1, 6));
  sim_cmd->add_option("--reps", sim_args.reps, "Replications per cell");
  sim_cmd->add_option("--seed", sim_args.seed, "Master seed");
  sim_cmd->add_option("--nsim", sim_args.nsim, "Null simulations for test mixing distributions");
  sim_cmd->add_option("--n", sim_args.n, "Sample sizes");
  sim_cmd->add_option("--sigma", sim_args.sigma, "Noise levels (power targets for tables 3-4)");
  sim_cmd->add_option("--knots", sim_args.knots, "Interior knots per sample size");
  sim_cmd->add_option("--functions", sim_args.functions, "Function tags");
  sim_cmd->add_flag("--full-scale", sim_args.full_scale, "10,000 replications per cell");
  sim_cmd->add_option("--max-seconds", sim_args.max_seconds, "Time budget; 0 = unlimited");
  sim_cmd->add_flag("--timing", sim_args.timing, "Include the runtime in the report");
  sim_cmd->add_option("--calibration", sim_args.calibration,
                      "Tables 3-4 sigma calibration: f (noncentral F) or one-sided");
  sim_cmd->add_option("--threads", sim_args.threads, "Worker threads; 0 = all cores");
  add_output_options(sim_cmd, sim_args.c, "csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit_args, out, err);
    if (test_cmd->parsed()) return cmd_test(test_args, out, err);
    if (mix_cmd->parsed()) return cmd_mixing(mix_args, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(sim_args, out, err);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"shapereg"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace shapereg
