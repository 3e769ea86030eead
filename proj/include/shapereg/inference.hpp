#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shapereg/cone.hpp"
#include "shapereg/projection.hpp"

namespace shapereg {

/// Null probabilities P(D = d), d = 0..m, of the number of active edges.
struct MixingDistribution {
  std::vector<double> probs;
  std::vector<std::uint64_t> counts;
  std::uint64_t nsim = 0;
  std::uint64_t seed = 0;
  int r = 0;

  int max_dim() const { return static_cast<int>(probs.size()) - 1; }
  double mean() const;
  static MixingDistribution from_counts(std::vector<std::uint64_t> counts,
                                        std::uint64_t seed, int r);
};

/// Projects nsim standard normal vectors (times `scale`) onto the cone and
/// tabulates |J|. Replication i draws from stream_seed(seed, i).
MixingDistribution mixing_distribution(const ConeBasis& cone, std::uint64_t nsim,
                                       std::uint64_t seed, double scale = 1.0,
                                       unsigned threads = 0);

/// P(chi-bar-square >= t) with components chi^2(d), d = |J|; the d = 0 term
/// is a point mass at zero.
double chibar_pvalue(double t, const MixingDistribution& mix, int n, int r);

/// P(B01 >= b) for the mixture of Beta(d/2, (n-d-r)/2); d = 0 is a point
/// mass at 0 and n - d - r = 0 a point mass at 1.
double beta_mixture_pvalue(double b, const MixingDistribution& mix, int n, int r);

/// CDF of the beta mixture, P(B01 <= b).
double beta_mixture_cdf(double b, const MixingDistribution& mix, int n, int r);

/// Smallest b with P(B01 >= b) <= alpha.
double beta_mixture_critical_value(double alpha, const MixingDistribution& mix,
                                   int n, int r);

struct TestResult {
  double statistic = 0.0;
  double sse0 = 0.0;
  double sse1 = 0.0;
  /// |J| of the alternative fit.
  int active = 0;
  /// |J| + r.
  int d = 0;
  double p_value = 1.0;
  ProjectionResult alternative;
};

/// B01 = (SSE0 - SSE1) / SSE0 with SSE0 from the projection onto V and SSE1
/// from the cone projection. The p-value is filled in when `mix` is given.
TestResult b_statistic(const Vector& y, const ConeBasis& cone,
                       const MixingDistribution* mix = nullptr);

enum class VarianceMethod { kEdf, kConservative, kMle, kMeyerWoodroofe };

std::string_view to_string(VarianceMethod method);
VarianceMethod parse_variance_method(std::string_view name);

struct VarianceEstimate {
  double sigma2 = 0.0;
  VarianceMethod method = VarianceMethod::kEdf;
  double denominator = 0.0;
  int n = 0;
  int d = 0;
  int m = 0;
};

/// SSE/(n-d), SSE/(n-m), SSE/n or SSE/(n-1.5d).
VarianceEstimate variance_estimate(double sse, int n, int d, int m,
                                   VarianceMethod method);

struct FTestResult {
  double statistic = 0.0;
  int df1 = 0;
  int df2 = 0;
  double p_value = 1.0;
};

/// Nested polynomial regression F test of degree `null_degree` against
/// degree `alt_degree`.
FTestResult f_test(std::span<const double> x, const Vector& y, int null_degree,
                   int alt_degree);

/// Power of the level-alpha F test when the mean vector is `mean` and the
/// error standard deviation is sigma (noncentral F).
double f_test_power(std::span<const double> x, const Vector& mean, double sigma,
                    int null_degree, int alt_degree, double alpha = 0.05);

/// Sigma at which the F test has the target power for mean vector `mean`.
double calibrate_sigma(std::span<const double> x, const Vector& mean,
                       double target_power, int null_degree, int alt_degree,
                       double alpha = 0.05);

/// Power of the one-sided level-alpha t test on the single added polynomial
/// term (alt_degree = null_degree + 1), rejecting in the direction of `mean`.
double t_test_power(std::span<const double> x, const Vector& mean, double sigma,
                    int null_degree, int alt_degree, double alpha = 0.05);

/// Sigma at which the one-sided t test has the target power.
double calibrate_sigma_one_sided(std::span<const double> x, const Vector& mean,
                                 double target_power, int null_degree, int alt_degree,
                                 double alpha = 0.05);

/// Orthonormal basis of polynomials up to `degree` evaluated at x.
Matrix polynomial_basis(std::span<const double> x, int degree);

}  // namespace shapereg
