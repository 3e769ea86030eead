#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "shapereg/cli.hpp"
#include "shapereg/simulation.hpp"

using namespace shapereg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "shapereg_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const fs::path p = work_dir() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string xy_csv(const std::string& name, const std::vector<double>& x, const std::vector<double>& y) {
  std::ostringstream s;
  s.precision(17);
  s << "x,y\n";
  for (std::size_t i = 0; i < x.size(); ++i) s << x[i] << "," << y[i] << "\n";
  return write_file(name, s.str());
}

// Normal draws from a fixed-seed LCG + Box-Muller, independent of the library RNG.
std::vector<double> noise(std::size_t n, unsigned seed) {
  std::uint64_t s = seed * 6364136223846793005ULL + 1442695040888963407ULL;
  auto u = [&] {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    return (static_cast<double>(s >> 11) + 0.5) / 9007199254740992.0;
  };
  std::vector<double> z(n);
  for (auto& v : z) v = std::sqrt(-2.0 * std::log(u())) * std::cos(6.283185307179586 * u());
  return z;
}

}  // namespace

TEST_CASE("fit reproduces monotone piecewise-linear data") {
  const std::string in = write_file("toy.csv", "x,y\n0,1\n1,3\n2,5\n");
  const Run r = run({"fit", in, "--order", "2", "--knots", "0", "--format", "json"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["order"] == 2);
  const auto fitted = j["fitted"].get<std::vector<double>>();
  REQUIRE(fitted.size() == 3);
  CHECK(fitted[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fitted[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fitted[2] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("fit csv output layout") {
  const auto x = equally_spaced_design(30);
  std::vector<double> y;
  const auto z = noise(30, 3);
  for (std::size_t i = 0; i < x.size(); ++i) y.push_back(4.0 * x[i] + 0.3 * z[i]);
  const std::string in = xy_csv("lin.csv", x, y);
  const Run r = run({"fit", in, "--shape", "increasing"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("# shape,increasing\n", 0) == 0);
  CHECK(r.out.find("\n# order,3\n") != std::string::npos);
  CHECK(r.out.find("\nx,fitted\n") != std::string::npos);
  std::istringstream lines(r.out.substr(r.out.find("x,fitted\n") + 9));
  std::string line;
  int rows = 0;
  double prev = -1e300;
  while (std::getline(lines, line)) {
    const double v = std::stod(line.substr(line.find(',') + 1));
    CHECK(v >= prev - 1e-10);
    prev = v;
    ++rows;
  }
  CHECK(rows == 30);
}

TEST_CASE("duplicate x values warn and match the aggregated weighted fit") {
  const std::string dup = write_file(
      "dup.csv", "x,y\n0.1,0.2\n0.2,0.1\n0.2,0.7\n0.3,0.5\n0.4,0.4\n0.5,1.2\n0.5,0.8\n0.5,1.3\n0.6,1.1\n0.7,1.6\n0.8,1.4\n0.9,2.0\n");
  const std::string agg = write_file(
      "agg.csv", "x,y,w\n0.1,0.2,1\n0.2,0.4,2\n0.3,0.5,1\n0.4,0.4,1\n0.5,1.1,3\n0.6,1.1,1\n0.7,1.6,1\n0.8,1.4,1\n0.9,2.0,1\n");
  const Run a = run({"fit", dup, "--knots", "2", "--format", "json"});
  const Run b = run({"fit", agg, "--knots", "2", "--weights-col", "w", "--format", "json"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(a.err.find("warning: duplicate x") != std::string::npos);
  const auto fa = json::parse(a.out)["fitted"].get<std::vector<double>>();
  const auto fb = json::parse(b.out)["fitted"].get<std::vector<double>>();
  REQUIRE(fa.size() == 9);
  REQUIRE(fb.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) CHECK(fa[i] == doctest::Approx(fb[i]).epsilon(1e-10));
}

TEST_CASE("classical and grouped fits") {
  const std::string in = write_file("cl.csv", "x,y\n1,3\n2,1\n3,2\n4,5\n");
  const Run r = run({"fit", in, "--classical", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto f = json::parse(r.out)["fitted"].get<std::vector<double>>();
  CHECK(f == std::vector<double>{2, 2, 2, 5});

  std::ostringstream s;
  s << "x,y,g\n";
  const auto x = equally_spaced_design(20, 0.0, 3.0);
  const auto z = noise(40, 9);
  for (std::size_t i = 0; i < x.size(); ++i) {
    s << x[i] << "," << 2.0 * std::exp(-1.2 * x[i]) + 0.02 * z[i] << ",0\n";
    s << x[i] << "," << 2.0 * std::exp(-1.2 * x[i]) + 0.5 + 0.02 * z[20 + i] << ",1\n";
  }
  const std::string grouped = write_file("grp.csv", s.str());
  const Run g = run({"fit", grouped, "--shape", "decr-convex", "--group-col", "g", "--knots", "2",
                     "--format", "json"});
  REQUIRE(g.code == 0);
  CHECK(json::parse(g.out)["beta"].get<double>() == doctest::Approx(0.5).epsilon(0.05));
  const Run bad = run({"fit", grouped, "--classical", "--group-col", "g"});
  CHECK(bad.code == 2);
}

TEST_CASE("input errors exit 2 and write nothing") {
  const std::string in = write_file("noy.csv", "x,z\n1,2\n2,3\n3,4\n");
  const fs::path out = work_dir() / "never.csv";
  Run r = run({"fit", in, "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.out.empty());
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK_FALSE(fs::exists(out));

  CHECK(run({"fit", (work_dir() / "missing.csv").string()}).code == 2);
  CHECK(run({"fit", in, "--y-col", "z", "--shape", "wiggly"}).code == 2);
  CHECK(run({"fit", in, "--y-col", "z", "--format", "xml"}).code == 2);
  CHECK(run({"fit", in, "--y-col", "z", "--placement", "random"}).code == 2);
  CHECK(run({"fit", in, "--y-col", "z", "--order", "4", "--knots", "3"}).code == 2);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"fit"}).code == 2);
  CHECK(run({"simulate"}).code == 2);
  CHECK(run({"simulate", "--table", "9"}).code == 2);
  CHECK(run({"fit", "a.csv", "--knots", "-1"}).code == 2);
  const Run help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("simulate") != std::string::npos);
}

TEST_CASE("test subcommand") {
  const std::string cache = (work_dir() / "cache").string();
  const auto x = equally_spaced_design(40);
  const std::string flat = xy_csv("flat.csv", x, std::vector<double>(40, 2.0));
  Run r = run({"test", flat, "--nsim", "2000", "--cache-dir", cache, "--format", "json"});
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["p_value"].get<double>() == 1.0);
  CHECK(j["statistic"].get<double>() == 0.0);
  CHECK(r.err.find("mixing: simulated 2000 draws") != std::string::npos);

  // second run with the same design reads the cache and gives identical output
  const Run again = run({"test", flat, "--nsim", "2000", "--cache-dir", cache, "--format", "json"});
  CHECK(again.err.find("mixing: cache hit") != std::string::npos);
  CHECK(again.out == r.out);

  std::vector<double> y;
  const auto z = noise(40, 5);
  for (std::size_t i = 0; i < x.size(); ++i) y.push_back(8.0 * (x[i] - 0.5) * (x[i] - 0.5) + 0.1 * z[i]);
  const std::string convex = xy_csv("convex.csv", x, y);
  r = run({"test", convex, "--test", "lin-vs-convex", "--nsim", "2000", "--no-cache", "--format", "csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("test,n,order,knots,statistic,sse0,sse1,active,d,p_value\n", 0) == 0);
  const std::string row = r.out.substr(r.out.find('\n') + 1);
  const double p = std::stod(row.substr(row.rfind(',') + 1));
  CHECK(p < 0.01);

  const std::string dup = write_file("tdup.csv", "x,y\n1,1\n1,2\n2,3\n3,4\n4,5\n5,6\n");
  CHECK(run({"test", dup, "--no-cache"}).code == 2);
  CHECK(run({"test", flat, "--order", "4", "--no-cache"}).code == 2);
  CHECK(run({"test", flat, "--test", "other", "--no-cache"}).code == 2);
}

TEST_CASE("mixing subcommand") {
  const std::string cache = (work_dir() / "mixcache").string();
  const Run r = run({"mixing", "--n", "30", "--nsim", "3000", "--seed", "8", "--cache-dir", cache,
                     "--format", "json"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  const auto probs = j["probs"].get<std::vector<double>>();
  double total = 0.0;
  for (double p : probs) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(j["nsim"] == 3000);
  CHECK(j["seed"] == 8);
  const Run hit = run({"mixing", "--n", "30", "--nsim", "3000", "--seed", "8", "--cache-dir", cache,
                       "--format", "json"});
  CHECK(hit.err.find("cache hit") != std::string::npos);
  CHECK(hit.out == r.out);

  // linear monotone spline without interior knots has a single edge: P(D = 0) = P(D = 1) = 1/2
  const Run one = run({"mixing", "--n", "10", "--order", "2", "--knots", "0", "--nsim", "20000",
                       "--no-cache", "--format", "json"});
  REQUIRE(one.code == 0);
  const auto p1 = json::parse(one.out)["probs"].get<std::vector<double>>();
  REQUIRE(p1.size() == 2);
  CHECK(std::abs(p1[0] - 0.5) < 4.0 * std::sqrt(0.25 / 20000));

  CHECK(run({"mixing", "--no-cache"}).code == 2);
}

TEST_CASE("simulate subcommand") {
  const std::vector<std::string> args{"simulate", "--table", "1", "--reps", "20", "--n", "20",
                                      "--functions", "sigmoid", "--seed", "5"};
  const Run a = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == run(args).out);
  CHECK(a.out.find("sigmoid,20,") != std::string::npos);
  CHECK(a.out.find(",MSPL4,rmse,") != std::string::npos);

  const fs::path out = work_dir() / "sim.json";
  auto with_out = args;
  with_out.insert(with_out.end(), {"--format", "json", "--out", out.string()});
  const Run b = run(with_out);
  REQUIRE(b.code == 0);
  CHECK(b.out.empty());
  std::ifstream f(out);
  const json j = json::parse(f);
  CHECK(j["cells"].size() > 0);

  auto budget = args;
  budget.insert(budget.end(), {"--n", "40", "--max-seconds", "1e-9"});
  CHECK(run(budget).code == 1);
  auto bad = args;
  bad.insert(bad.end(), {"--functions", "cubic"});
  CHECK(run(bad).code == 2);
  auto calib = args;
  calib.insert(calib.end(), {"--calibration", "two-sided"});
  CHECK(run(calib).code == 2);
}
