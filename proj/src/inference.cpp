#include "shapereg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/non_central_f.hpp>
#include <boost/math/distributions/non_central_t.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "shapereg/random.hpp"

namespace shapereg {

double MixingDistribution::mean() const {
  double s = 0.0;
  for (std::size_t d = 0; d < probs.size(); ++d) s += static_cast<double>(d) * probs[d];
  return s;
}

MixingDistribution MixingDistribution::from_counts(std::vector<std::uint64_t> counts,
                                                   std::uint64_t seed, int r) {
  MixingDistribution mix;
  mix.nsim = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (mix.nsim == 0) throw InvalidInput("mixing distribution needs at least one draw");
  mix.probs.resize(counts.size());
  for (std::size_t d = 0; d < counts.size(); ++d) {
    mix.probs[d] = static_cast<double>(counts[d]) / static_cast<double>(mix.nsim);
  }
  mix.counts = std::move(counts);
  mix.seed = seed;
  mix.r = r;
  return mix;
}

MixingDistribution mixing_distribution(const ConeBasis& cone, std::uint64_t nsim,
                                       std::uint64_t seed, double scale,
                                       unsigned threads) {
  if (nsim == 0) throw InvalidInput("nsim must be positive");
  const auto n = cone.n();
  std::vector<int> sizes(nsim);
  parallel_for(
      nsim,
      [&](std::size_t i) {
        Rng rng(seed, i);
        const Vector y = scale * rng.normal_vector(n);
        sizes[i] = static_cast<int>(project(y, cone).active.size());
      },
      threads);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(cone.m()) + 1, 0);
  for (int s : sizes) ++counts[static_cast<std::size_t>(s)];
  return MixingDistribution::from_counts(std::move(counts), seed,
                                         static_cast<int>(cone.r()));
}

namespace {

void check_dims(const MixingDistribution& mix, int n, int r) {
  for (int d = 0; d <= mix.max_dim(); ++d) {
    if (mix.probs[static_cast<std::size_t>(d)] > 0.0 && n - d - r < 0) {
      throw InvalidInput("mixing component d=" + std::to_string(d) +
                         " leaves negative residual degrees of freedom");
    }
  }
}

// P(Beta(d/2, (n-d-r)/2) >= b) with degenerate ends as point masses.
double beta_upper(int d, int rest, double b) {
  if (d == 0) return b <= 0.0 ? 1.0 : 0.0;
  if (rest == 0) return 1.0;
  if (b <= 0.0) return 1.0;
  if (b >= 1.0) return 0.0;
  return boost::math::ibetac(0.5 * d, 0.5 * rest, b);
}

}  // namespace

double chibar_pvalue(double t, const MixingDistribution& mix, int n, int r) {
  if (t < 0.0) throw InvalidInput("chi-bar-square statistic must be >= 0");
  check_dims(mix, n, r);
  if (t <= 0.0) return 1.0;
  double p = 0.0;
  for (int d = 0; d <= mix.max_dim(); ++d) {
    const double w = mix.probs[static_cast<std::size_t>(d)];
    if (w == 0.0) continue;
    const double tail = d == 0 ? (t <= 0.0 ? 1.0 : 0.0)
                               : (t <= 0.0 ? 1.0 : boost::math::gamma_q(0.5 * d, 0.5 * t));
    p += w * tail;
  }
  return std::clamp(p, 0.0, 1.0);
}

double beta_mixture_pvalue(double b, const MixingDistribution& mix, int n, int r) {
  if (b < 0.0 || b > 1.0 || std::isnan(b)) {
    throw InvalidInput("B01 statistic must lie in [0, 1]");
  }
  check_dims(mix, n, r);
  if (b <= 0.0) return 1.0;
  double p = 0.0;
  for (int d = 0; d <= mix.max_dim(); ++d) {
    const double w = mix.probs[static_cast<std::size_t>(d)];
    if (w == 0.0) continue;
    p += w * beta_upper(d, n - d - r, b);
  }
  return std::clamp(p, 0.0, 1.0);
}

double beta_mixture_cdf(double b, const MixingDistribution& mix, int n, int r) {
  check_dims(mix, n, r);
  if (b < 0.0) return 0.0;
  double c = 0.0;
  for (int d = 0; d <= mix.max_dim(); ++d) {
    const double w = mix.probs[static_cast<std::size_t>(d)];
    if (w == 0.0) continue;
    const int rest = n - d - r;
    double cdf;
    if (d == 0) {
      cdf = 1.0;
    } else if (rest == 0) {
      cdf = b >= 1.0 ? 1.0 : 0.0;
    } else if (b >= 1.0) {
      cdf = 1.0;
    } else {
      cdf = boost::math::ibeta(0.5 * d, 0.5 * rest, b);
    }
    c += w * cdf;
  }
  return std::clamp(c, 0.0, 1.0);
}

double beta_mixture_critical_value(double alpha, const MixingDistribution& mix,
                                   int n, int r) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must be in (0, 1)");
  double lo = 0.0;
  double hi = 1.0;
  if (beta_mixture_pvalue(hi, mix, n, r) > alpha) return 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (beta_mixture_pvalue(mid, mix, n, r) <= alpha) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

TestResult b_statistic(const Vector& y, const ConeBasis& cone,
                       const MixingDistribution* mix) {
  TestResult out;
  const Vector null_fit = project_linear(y, cone.linear);
  out.sse0 = (y - null_fit).squaredNorm();
  out.alternative = project(y, cone);
  // An empty face is the null fit itself; avoid a spurious positive B01.
  out.sse1 = out.alternative.active.empty() ? out.sse0
                                            : std::min(out.alternative.sse, out.sse0);
  out.active = static_cast<int>(out.alternative.active.size());
  out.d = out.active + static_cast<int>(cone.r());
  const double floor = 1e-28 * std::max(y.squaredNorm(), 1e-300);
  if (out.sse0 <= floor) {
    out.statistic = 0.0;
    out.p_value = 1.0;
    return out;
  }
  out.statistic = std::clamp((out.sse0 - out.sse1) / out.sse0, 0.0, 1.0);
  if (mix != nullptr) {
    out.p_value = beta_mixture_pvalue(out.statistic, *mix, static_cast<int>(cone.n()),
                                      static_cast<int>(cone.r()));
  }
  return out;
}

std::string_view to_string(VarianceMethod method) {
  switch (method) {
    case VarianceMethod::kEdf: return "edf";
    case VarianceMethod::kConservative: return "conservative";
    case VarianceMethod::kMle: return "mle";
    case VarianceMethod::kMeyerWoodroofe: return "meyer-woodroofe";
  }
  return "unknown";
}

VarianceMethod parse_variance_method(std::string_view name) {
  for (auto m : {VarianceMethod::kEdf, VarianceMethod::kConservative,
                 VarianceMethod::kMle, VarianceMethod::kMeyerWoodroofe}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidInput("unknown variance method '" + std::string(name) + "'");
}

VarianceEstimate variance_estimate(double sse, int n, int d, int m,
                                   VarianceMethod method) {
  if (sse < 0.0) throw InvalidInput("SSE must be nonnegative");
  VarianceEstimate est;
  est.method = method;
  est.n = n;
  est.d = d;
  est.m = m;
  switch (method) {
    case VarianceMethod::kEdf: est.denominator = n - d; break;
    case VarianceMethod::kConservative: est.denominator = n - m; break;
    case VarianceMethod::kMle: est.denominator = n; break;
    case VarianceMethod::kMeyerWoodroofe: est.denominator = n - 1.5 * d; break;
  }
  if (!(est.denominator > 0.0)) {
    throw InvalidInput("variance estimator denominator must be positive");
  }
  est.sigma2 = sse / est.denominator;
  return est;
}

Matrix polynomial_basis(std::span<const double> x, int degree) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (degree < 0) throw InvalidInput("polynomial degree must be >= 0");
  const Vector xv = Eigen::Map<const Vector>(x.data(), n);
  const double center = xv.mean();
  const double spread = std::max((xv.array() - center).abs().maxCoeff(), 1e-300);
  Matrix vand(n, degree + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (xv(i) - center) / spread;
    double p = 1.0;
    for (int j = 0; j <= degree; ++j) {
      vand(i, j) = p;
      p *= u;
    }
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(vand);
  if (qr.rank() < degree + 1) throw NumericalError("polynomial design is rank deficient");
  Eigen::HouseholderQR<Matrix> plain(vand);
  return plain.householderQ() * Matrix::Identity(n, degree + 1);
}

namespace {

struct NestedSpaces {
  Matrix null_basis;
  Matrix alt_basis;
  int df1;
  int df2;
};

NestedSpaces nested(std::span<const double> x, int null_degree, int alt_degree) {
  if (alt_degree <= null_degree || null_degree < 0) {
    throw InvalidInput("alternative degree must exceed the null degree");
  }
  const int n = static_cast<int>(x.size());
  if (n <= alt_degree + 1) throw InvalidInput("too few observations for the F test");
  // Columns of the alternative basis are nested: the first null_degree + 1
  // span the null model.
  Matrix alt = polynomial_basis(x, alt_degree);
  Matrix nul = alt.leftCols(null_degree + 1);
  return {std::move(nul), std::move(alt), alt_degree - null_degree, n - alt_degree - 1};
}

}  // namespace

FTestResult f_test(std::span<const double> x, const Vector& y, int null_degree,
                   int alt_degree) {
  if (static_cast<Eigen::Index>(x.size()) != y.size()) {
    throw InvalidInput("x and y lengths differ");
  }
  const auto sp = nested(x, null_degree, alt_degree);
  const Vector extra = sp.alt_basis.rightCols(sp.df1).transpose() * y;
  const Vector fit1 = sp.alt_basis * (sp.alt_basis.transpose() * y);
  const double sse1 = (y - fit1).squaredNorm();
  const double ss_extra = extra.squaredNorm();
  FTestResult out;
  out.df1 = sp.df1;
  out.df2 = sp.df2;
  const double scale = std::max(y.squaredNorm(), 1e-300);
  if (ss_extra <= 1e-24 * scale) {
    out.statistic = 0.0;
    out.p_value = 1.0;
    return out;
  }
  if (sse1 <= 1e-28 * scale) {
    out.statistic = std::numeric_limits<double>::infinity();
    out.p_value = 0.0;
    return out;
  }
  out.statistic = (ss_extra / sp.df1) / (sse1 / sp.df2);
  boost::math::fisher_f dist(sp.df1, sp.df2);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

namespace {

double power_at(double lambda, int df1, int df2, double crit) {
  if (lambda <= 0.0) {
    boost::math::fisher_f central(df1, df2);
    return boost::math::cdf(boost::math::complement(central, crit));
  }
  boost::math::non_central_f dist(df1, df2, lambda);
  return boost::math::cdf(boost::math::complement(dist, crit));
}

}  // namespace

double f_test_power(std::span<const double> x, const Vector& mean, double sigma,
                    int null_degree, int alt_degree, double alpha) {
  if (!(sigma > 0.0)) throw InvalidInput("sigma must be positive");
  const auto sp = nested(x, null_degree, alt_degree);
  const double signal = (sp.alt_basis.rightCols(sp.df1).transpose() * mean).squaredNorm();
  boost::math::fisher_f central(sp.df1, sp.df2);
  const double crit = boost::math::quantile(boost::math::complement(central, alpha));
  return power_at(signal / (sigma * sigma), sp.df1, sp.df2, crit);
}

double calibrate_sigma(std::span<const double> x, const Vector& mean,
                       double target_power, int null_degree, int alt_degree,
                       double alpha) {
  if (!(target_power > alpha && target_power < 1.0)) {
    throw InvalidInput("target power must lie in (alpha, 1)");
  }
  const auto sp = nested(x, null_degree, alt_degree);
  const double signal = (sp.alt_basis.rightCols(sp.df1).transpose() * mean).squaredNorm();
  if (!(signal > 1e-24 * std::max(mean.squaredNorm(), 1e-300))) {
    throw InvalidInput("mean lies in the null model; target power is unattainable");
  }
  boost::math::fisher_f central(sp.df1, sp.df2);
  const double crit = boost::math::quantile(boost::math::complement(central, alpha));
  // Power increases with the noncentrality; bracket then bisect on log lambda.
  double lo = 1e-8;
  double hi = 1.0;
  while (power_at(hi, sp.df1, sp.df2, crit) < target_power) {
    hi *= 2.0;
    if (hi > 1e8) throw NumericalError("could not bracket the noncentrality");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (power_at(mid, sp.df1, sp.df2, crit) < target_power) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi / lo - 1.0 < 1e-13) break;
  }
  return std::sqrt(signal / (0.5 * (lo + hi)));
}

namespace {

// Signed coefficient of the mean on the added term, and residual df.
std::pair<double, int> added_term(std::span<const double> x, const Vector& mean,
                                  int null_degree, int alt_degree) {
  if (alt_degree != null_degree + 1) {
    throw InvalidInput("one-sided power needs exactly one added polynomial term");
  }
  const auto sp = nested(x, null_degree, alt_degree);
  return {sp.alt_basis.rightCols(1).col(0).dot(mean), sp.df2};
}

double one_sided_power(double delta, int df, double crit) {
  boost::math::non_central_t dist(df, delta);
  return boost::math::cdf(boost::math::complement(dist, crit));
}

}  // namespace

double t_test_power(std::span<const double> x, const Vector& mean, double sigma,
                    int null_degree, int alt_degree, double alpha) {
  if (!(sigma > 0.0)) throw InvalidInput("sigma must be positive");
  const auto [coef, df] = added_term(x, mean, null_degree, alt_degree);
  boost::math::students_t central(df);
  const double crit = boost::math::quantile(boost::math::complement(central, alpha));
  return one_sided_power(std::abs(coef) / sigma, df, crit);
}

double calibrate_sigma_one_sided(std::span<const double> x, const Vector& mean,
                                 double target_power, int null_degree, int alt_degree,
                                 double alpha) {
  if (!(target_power > alpha && target_power < 1.0)) {
    throw InvalidInput("target power must lie in (alpha, 1)");
  }
  const auto [coef, df] = added_term(x, mean, null_degree, alt_degree);
  if (!(coef * coef > 1e-24 * std::max(mean.squaredNorm(), 1e-300))) {
    throw InvalidInput("mean lies in the null model; target power is unattainable");
  }
  boost::math::students_t central(df);
  const double crit = boost::math::quantile(boost::math::complement(central, alpha));
  double lo = 1e-6;
  double hi = 1.0;
  while (one_sided_power(hi, df, crit) < target_power) {
    hi *= 2.0;
    if (hi > 1e6) throw NumericalError("could not bracket the noncentrality");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (one_sided_power(mid, df, crit) < target_power) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12 * hi) break;
  }
  return std::abs(coef) / (0.5 * (lo + hi));
}

}  // namespace shapereg
