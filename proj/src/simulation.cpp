#include "shapereg/simulation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "shapereg/inference.hpp"
#include "shapereg/models.hpp"
#include "shapereg/random.hpp"

namespace shapereg {

std::string_view to_string(FunctionTag tag) {
  switch (tag) {
    case FunctionTag::kLinear4x: return "linear-4x";
    case FunctionTag::kSigmoid: return "sigmoid";
    case FunctionTag::kQuad4x2: return "quad-4x2";
    case FunctionTag::kRamp: return "ramp";
    case FunctionTag::kQuadX2: return "quad-x2";
  }
  return "?";
}

FunctionTag parse_function_tag(std::string_view name) {
  for (auto tag : {FunctionTag::kLinear4x, FunctionTag::kSigmoid, FunctionTag::kQuad4x2,
                   FunctionTag::kRamp, FunctionTag::kQuadX2}) {
    if (to_string(tag) == name) return tag;
  }
  throw InvalidInput("unknown function tag '" + std::string(name) + "'");
}

double evaluate(FunctionTag tag, double x) {
  switch (tag) {
    case FunctionTag::kLinear4x: return 4.0 * x;
    case FunctionTag::kSigmoid: {
      const double e = std::exp(10.0 * x - 5.0);
      return 5.0 * e / (1.0 + e);
    }
    case FunctionTag::kQuad4x2: return 4.0 * x * x;
    case FunctionTag::kRamp: return std::exp(8.0 * (x - 0.5));
    case FunctionTag::kQuadX2: return x * x;
  }
  return 0.0;
}

std::vector<double> equally_spaced_design(int n, double lo, double hi) {
  if (n < 1) throw InvalidInput("design needs at least one point");
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = lo + (hi - lo) * (i + 1) / (n + 1.0);
  return x;
}

SimulationSpec default_spec(int table) {
  SimulationSpec s;
  s.table = table;
  switch (table) {
    case 1:
      s.functions = {FunctionTag::kLinear4x, FunctionTag::kSigmoid};
      s.n = {40, 80, 200};
      s.sigma = {1.0};
      s.reps = 1000;
      break;
    case 2:
      s.functions = {FunctionTag::kLinear4x, FunctionTag::kQuad4x2};
      s.n = {40, 80, 200};
      s.sigma = {1.0};
      s.reps = 1000;
      break;
    case 3:
      s.functions = {FunctionTag::kLinear4x, FunctionTag::kRamp};
      s.n = {20, 40, 80};
      s.knots = {2, 2, 3};
      s.power_targets = {0.25, 0.50, 0.75};
      s.reps = 2000;
      break;
    case 4:
      s.functions = {FunctionTag::kQuadX2, FunctionTag::kRamp};
      s.n = {20, 40, 80};
      s.knots = {2, 2, 3};
      s.power_targets = {0.25, 0.50, 0.75};
      s.reps = 2000;
      break;
    case 5:
    case 6:
      s.functions = {FunctionTag::kQuadX2};
      s.n = {20, 40, 80};
      s.sigma = {0.1, 1.0};
      s.knots = {2, 2, 2};
      s.reps = 2000;
      break;
    default:
      throw InvalidInput("table must be 1-6");
  }
  return s;
}

const Cell& Report::find(std::string_view function, int n, std::string_view method,
                         std::string_view metric, double sigma_or_target) const {
  for (const auto& c : cells) {
    if (c.function != function || c.n != n || c.method != method || c.metric != metric) continue;
    if (sigma_or_target >= 0.0 && std::abs(c.sigma - sigma_or_target) > 1e-12 &&
        std::abs(c.target - sigma_or_target) > 1e-12) {
      continue;
    }
    return c;
  }
  throw InvalidInput("no report cell " + std::string(function) + " n=" + std::to_string(n) +
                     " " + std::string(method) + " " + std::string(metric));
}

namespace {

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  int count = 0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  double sum = 0.0;
  for (double a : v) {
    if (std::isnan(a)) continue;
    sum += a;
    ++m.count;
  }
  if (m.count == 0) return m;
  m.mean = sum / m.count;
  double ss = 0.0;
  for (double a : v) {
    if (!std::isnan(a)) ss += (a - m.mean) * (a - m.mean);
  }
  m.sd = m.count > 1 ? std::sqrt(ss / (m.count - 1)) : 0.0;
  return m;
}

Cell proportion_cell(Cell base, const std::vector<double>& hits) {
  const Moments m = moments(hits);
  base.value = m.mean;
  base.se = std::sqrt(m.mean * (1.0 - m.mean) / std::max(m.count, 1));
  base.reps = m.count;
  return base;
}

Vector mean_vector(FunctionTag f, const std::vector<double>& x) {
  Vector theta(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) theta(static_cast<Eigen::Index>(i)) = evaluate(f, x[i]);
  return theta;
}

int knots_for(const SimulationSpec& spec, std::size_t index) {
  if (spec.knots.empty()) throw InvalidInput("table needs a knot count per sample size");
  if (spec.knots.size() == 1) return spec.knots.front();
  if (spec.knots.size() != spec.n.size()) {
    throw InvalidInput("give one knot count, or one per sample size");
  }
  return spec.knots[index];
}

class Runner {
 public:
  Runner(const SimulationSpec& spec, const ProgressCallback& progress)
      : spec_(spec), progress_(progress), start_(std::chrono::steady_clock::now()) {
    report_.spec = spec;
  }

  Report run() {
    if (spec_.reps < 2) throw InvalidInput("need at least two replications");
    if (spec_.n.empty() || spec_.functions.empty()) throw InvalidInput("empty simulation spec");
    report_.notes.emplace_back("design: x_i = i/(n+1), i = 1..n");
    switch (spec_.table) {
      case 1: fit_table(Shape::kIncreasing, 3, {"MR", "MSPL2", "MSPL4"}); break;
      case 2: fit_table(Shape::kIncreasingConvex, 4, {"MCR", "MCSPL2", "MCSPL4"}); break;
      case 3: power_table(TestKind::kConstantVsIncreasing, 3, 0, 1, {"F", "IQRS", "MREG"}); break;
      case 4: power_table(TestKind::kLinearVsConvex, 4, 1, 2, {"F", "CQRS", "CREG"}); break;
      case 5: variance_table(Shape::kIncreasing, 3, {"MQRS", "MQRS-cons", "M-W", "MLE"}); break;
      case 6: variance_table(Shape::kConvex, 4, {"CQRS", "CQRS-cons", "MLE"}); break;
      default: throw InvalidInput("table must be 1-6");
    }
    report_.runtime_seconds = elapsed();
    return std::move(report_);
  }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  // False once the budget is spent; the report is then marked incomplete.
  bool may_start() {
    if (spec_.max_seconds > 0.0 && elapsed() > spec_.max_seconds) {
      if (report_.complete) {
        report_.complete = false;
        report_.notes.emplace_back("time budget exhausted; remaining cells omitted");
      }
      return false;
    }
    return true;
  }

  void finish_point() {
    if (progress_) progress_(report_);
  }

  std::uint64_t point_seed() { return stream_seed(spec_.seed, point_counter_++); }

  Vector draw(const Vector& theta, double sigma, std::uint64_t seed, std::size_t rep) const {
    Rng rng(seed, rep);
    return theta + sigma * rng.normal_vector(theta.size());
  }

  void fit_table(Shape shape, int order, std::vector<std::string> methods) {
    const std::vector<int> knots{2, 4};
    for (auto f : spec_.functions) {
      for (int n : spec_.n) {
        for (double sigma : spec_.sigma) {
          const std::uint64_t seed = point_seed();
          if (!may_start()) return;
          const auto x = equally_spaced_design(n);
          const Vector theta = mean_vector(f, x);
          const ConeBasis classical = classical_cone(shape, x, false);
          std::vector<ConeBasis> cones;
          // Orthonormal bases of the unconstrained spline spaces.
          std::vector<Matrix> spans;
          for (int l : knots) {
            cones.push_back(fit_cone(x, shape, order, l));
            Matrix full(n, cones.back().r() + cones.back().m());
            full << cones.back().linear, cones.back().edges;
            Eigen::ColPivHouseholderQR<Matrix> qr(full);
            spans.push_back(qr.householderQ() * Matrix::Identity(n, qr.rank()));
          }
          const auto reps = static_cast<std::size_t>(spec_.reps);
          std::vector<std::vector<double>> sel(3, std::vector<double>(reps));
          std::vector<std::vector<double>> dominated(2, std::vector<double>(reps));
          parallel_for(
              reps,
              [&](std::size_t i) {
                const Vector y = draw(theta, sigma, seed, i);
                sel[0][i] = (project(y, classical).fitted - theta).squaredNorm() / n;
                for (std::size_t k = 0; k < cones.size(); ++k) {
                  const double c = (project(y, cones[k]).fitted - theta).squaredNorm() / n;
                  const Vector unc = spans[k] * (spans[k].transpose() * y);
                  const double u = (unc - theta).squaredNorm() / n;
                  sel[k + 1][i] = c;
                  dominated[k][i] = c <= u * (1.0 + 1e-9) + 1e-15 ? 1.0 : 0.0;
                }
              },
              spec_.threads);
          for (std::size_t k = 0; k < methods.size(); ++k) {
            Cell c = base_cell(f, n, sigma, 0.0, k == 0 ? 0 : knots[k - 1], methods[k]);
            const Moments m = moments(sel[k]);
            c.metric = "rmse";
            c.value = std::sqrt(m.mean);
            c.se = m.sd / std::sqrt(static_cast<double>(m.count)) / (2.0 * c.value);
            c.reps = m.count;
            report_.cells.push_back(c);
            if (k > 0) {
              c.metric = "dominance";
              report_.cells.push_back(proportion_cell(c, dominated[k - 1]));
            }
          }
          finish_point();
        }
      }
    }
  }

  void power_table(TestKind kind, int order, int null_deg, int alt_deg,
                   std::vector<std::string> methods) {
    report_.notes.emplace_back(spec_.one_sided_calibration
                                   ? "sigma calibrated on one-sided t power at level alpha"
                                   : "sigma calibrated on noncentral F power at level alpha");
    std::map<int, std::pair<ShapeTest, ShapeTest>> tests;
    for (auto f : spec_.functions) {
      for (std::size_t ni = 0; ni < spec_.n.size(); ++ni) {
        const int n = spec_.n[ni];
        const int l = knots_for(spec_, ni);
        const auto x = equally_spaced_design(n);
        const Vector theta = mean_vector(f, x);
        for (double target : spec_.power_targets) {
          const std::uint64_t seed = point_seed();
          if (!may_start()) return;
          auto it = tests.find(n);
          if (it == tests.end()) {
            const std::uint64_t mix_seed = stream_seed(spec_.seed ^ 0x5A5A5A5AULL, ni);
            it = tests
                     .emplace(n, std::pair{ShapeTest::spline(kind, x, order, l, spec_.nsim, mix_seed),
                                           ShapeTest::classical(kind, x, spec_.nsim, mix_seed)})
                     .first;
          }
          const ShapeTest& spline_test = it->second.first;
          const ShapeTest& classical_test = it->second.second;
          const double sigma =
              spec_.one_sided_calibration
                  ? calibrate_sigma_one_sided(x, theta, target, null_deg, alt_deg, spec_.alpha)
                  : calibrate_sigma(x, theta, target, null_deg, alt_deg, spec_.alpha);
          const auto reps = static_cast<std::size_t>(spec_.reps);
          std::vector<std::vector<double>> reject(3, std::vector<double>(reps));
          parallel_for(
              reps,
              [&](std::size_t i) {
                const Vector y = draw(theta, sigma, seed, i);
                reject[0][i] = f_test(x, y, null_deg, alt_deg).p_value < spec_.alpha ? 1.0 : 0.0;
                reject[1][i] = spline_test.run(y).p_value < spec_.alpha ? 1.0 : 0.0;
                reject[2][i] = classical_test.run(y).p_value < spec_.alpha ? 1.0 : 0.0;
              },
              spec_.threads);
          Cell c = base_cell(f, n, sigma, target, l, "F");
          c.metric = "sigma";
          c.value = sigma;
          c.reps = 0;
          report_.cells.push_back(c);
          for (std::size_t k = 0; k < methods.size(); ++k) {
            c.method = methods[k];
            c.knots = k == 1 ? l : 0;
            c.metric = "power";
            report_.cells.push_back(proportion_cell(c, reject[k]));
          }
          finish_point();
        }
      }
    }
  }

  void variance_table(Shape shape, int order, std::vector<std::string> methods) {
    const bool monotone = is_monotone_only(shape);
    for (auto f : spec_.functions) {
      for (std::size_t ni = 0; ni < spec_.n.size(); ++ni) {
        const int n = spec_.n[ni];
        const int l = knots_for(spec_, ni);
        const auto x = equally_spaced_design(n);
        const Vector theta = mean_vector(f, x);
        const ConeBasis spline = fit_cone(x, shape, order, l);
        const ConeBasis classical = classical_cone(shape, x, false);
        const int m = static_cast<int>(spline.m());
        for (double sigma : spec_.sigma) {
          const std::uint64_t seed = point_seed();
          if (!may_start()) return;
          const auto reps = static_cast<std::size_t>(spec_.reps);
          std::vector<std::vector<double>> est(methods.size(), std::vector<double>(reps));
          parallel_for(
              reps,
              [&](std::size_t i) {
                const Vector y = draw(theta, sigma, seed, i);
                const ProjectionResult s = project(y, spline, {});
                const ProjectionResult c = project(y, classical, {});
                est[0][i] = std::sqrt(s.sse / (n - s.effective_dim()));
                est[1][i] = std::sqrt(s.sse / (n - m));
                if (monotone) {
                  const double denom = n - 1.5 * c.effective_dim();
                  est[2][i] = denom > 0.0 ? std::sqrt(c.sse / denom) : std::nan("");
                }
                est.back()[i] = std::sqrt(c.sse / n);
              },
              spec_.threads);
          for (std::size_t k = 0; k < methods.size(); ++k) {
            const Moments mo = moments(est[k]);
            Cell c = base_cell(f, n, sigma, 0.0, k < 2 ? l : 0, methods[k]);
            c.reps = mo.count;
            c.metric = "pct_bias";
            c.value = 100.0 * (mo.mean - sigma) / sigma;
            c.se = 100.0 * mo.sd / (sigma * std::sqrt(static_cast<double>(mo.count)));
            report_.cells.push_back(c);
            c.metric = "sd";
            c.value = mo.sd;
            c.se = mo.sd / std::sqrt(2.0 * (mo.count - 1));
            report_.cells.push_back(c);
            if (mo.count < spec_.reps) {
              report_.notes.emplace_back(
                  methods[k] + " n=" + std::to_string(n) + ": " +
                  std::to_string(spec_.reps - mo.count) +
                  " replications dropped (nonpositive denominator)");
            }
          }
          finish_point();
        }
      }
    }
  }

  Cell base_cell(FunctionTag f, int n, double sigma, double target, int knots,
                 const std::string& method) const {
    Cell c;
    c.function = std::string(to_string(f));
    c.n = n;
    c.sigma = sigma;
    c.target = target;
    c.knots = knots;
    c.method = method;
    return c;
  }

  const SimulationSpec& spec_;
  const ProgressCallback& progress_;
  std::chrono::steady_clock::time_point start_;
  Report report_;
  std::uint64_t point_counter_ = 0;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  return buf;
}

nlohmann::json spec_json(const SimulationSpec& s) {
  nlohmann::json j;
  j["table"] = s.table;
  std::vector<std::string> fs;
  for (auto f : s.functions) fs.emplace_back(to_string(f));
  j["functions"] = fs;
  j["n"] = s.n;
  j["sigma"] = s.sigma;
  j["power_targets"] = s.power_targets;
  j["knots"] = s.knots;
  j["reps"] = s.reps;
  j["seed"] = s.seed;
  j["nsim"] = s.nsim;
  j["alpha"] = s.alpha;
  if (s.table == 3 || s.table == 4) {
    j["calibration"] = s.one_sided_calibration ? "one-sided" : "noncentral-f";
  }
  return j;
}

}  // namespace

Report run_simulation(const SimulationSpec& spec, const ProgressCallback& progress) {
  return Runner(spec, progress).run();
}

std::string report_csv(const Report& report, bool timing) {
  std::ostringstream out;
  out << "# table " << report.spec.table << ", seed " << report.spec.seed << ", reps "
      << report.spec.reps << ", complete " << (report.complete ? "true" : "false") << "\n";
  for (const auto& note : report.notes) out << "# " << note << "\n";
  if (timing) out << "# runtime_seconds " << num(report.runtime_seconds) << "\n";
  out << "function,n,sigma,target,knots,method,metric,value,se,reps\n";
  for (const auto& c : report.cells) {
    out << c.function << ',' << c.n << ',' << num(c.sigma) << ',' << num(c.target) << ','
        << c.knots << ',' << c.method << ',' << c.metric << ',' << num(c.value) << ','
        << num(c.se) << ',' << c.reps << "\n";
  }
  return out.str();
}

std::string report_json(const Report& report, bool timing) {
  nlohmann::json j;
  j["config"] = spec_json(report.spec);
  j["complete"] = report.complete;
  j["notes"] = report.notes;
  if (timing) j["runtime_seconds"] = report.runtime_seconds;
  auto& cells = j["cells"] = nlohmann::json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"function", c.function},
                     {"n", c.n},
                     {"sigma", c.sigma},
                     {"target", c.target},
                     {"knots", c.knots},
                     {"method", c.method},
                     {"metric", c.metric},
                     {"value", c.value},
                     {"se", c.se},
                     {"reps", c.reps}});
  }
  return j.dump(2) + "\n";
}

IterationProfile hinge_iteration_profile(int n, int interior_knots, int reps, std::uint64_t seed) {
  const auto x = equally_spaced_design(n, 0.0, 2.0);
  const ConeBasis cone = fit_cone(x, Shape::kIncreasing, 3, interior_knots);
  const Vector theta = Eigen::Map<const Vector>(x.data(), n).array().square();
  std::vector<int> iters(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t i) {
    Rng rng(seed, i);
    iters[i] = project(theta + rng.normal_vector(n), cone).iterations;
  });
  IterationProfile p;
  for (int it : iters) {
    if (static_cast<std::size_t>(it) >= p.histogram.size()) p.histogram.resize(it + 1, 0);
    ++p.histogram[static_cast<std::size_t>(it)];
    p.max = std::max(p.max, it);
  }
  for (std::size_t k = 0; k < p.histogram.size(); ++k) {
    if (p.histogram[k] > p.histogram[static_cast<std::size_t>(p.mode)]) p.mode = static_cast<int>(k);
  }
  return p;
}

}  // namespace shapereg
