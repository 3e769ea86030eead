#include "shapereg/fritsch_carlson.hpp"

#include <algorithm>
#include <cmath>

#include "shapereg/types.hpp"

namespace shapereg {

MonotoneCubicInterpolant::MonotoneCubicInterpolant(std::vector<double> nodes,
                                                   std::vector<double> values,
                                                   std::vector<double> slopes)
    : nodes_(std::move(nodes)), values_(std::move(values)), slopes_(std::move(slopes)) {
  if (nodes_.size() < 2 || values_.size() != nodes_.size() ||
      slopes_.size() != nodes_.size()) {
    throw InvalidInput("interpolant needs matching nodes, values and slopes");
  }
}

std::size_t MonotoneCubicInterpolant::interval(double x) const {
  if (x < nodes_.front() || x > nodes_.back()) {
    throw InvalidInput("interpolant evaluated outside its node range");
  }
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  auto k = static_cast<std::size_t>(std::distance(nodes_.begin(), it));
  k = k == 0 ? 0 : k - 1;
  return std::min(k, nodes_.size() - 2);
}

double MonotoneCubicInterpolant::operator()(double x) const {
  const std::size_t k = interval(x);
  const double h = nodes_[k + 1] - nodes_[k];
  const double t = (x - nodes_[k]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return h00 * values_[k] + h10 * h * slopes_[k] + h01 * values_[k + 1] +
         h11 * h * slopes_[k + 1];
}

double MonotoneCubicInterpolant::derivative(double x) const {
  const std::size_t k = interval(x);
  const double h = nodes_[k + 1] - nodes_[k];
  const double t = (x - nodes_[k]) / h;
  const double t2 = t * t;
  const double d00 = (6 * t2 - 6 * t) / h;
  const double d10 = 3 * t2 - 4 * t + 1;
  const double d01 = (-6 * t2 + 6 * t) / h;
  const double d11 = 3 * t2 - 2 * t;
  return d00 * values_[k] + d10 * slopes_[k] + d01 * values_[k + 1] +
         d11 * slopes_[k + 1];
}

MonotoneCubicInterpolant fritsch_carlson(std::span<const double> x,
                                         std::span<const double> values) {
  const std::size_t n = x.size();
  if (n < 2 || values.size() != n) {
    throw InvalidInput("monotone interpolation needs at least two matching points");
  }
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  std::vector<double> secant(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double h = x[k + 1] - x[k];
    if (!(h > 0.0)) throw InvalidInput("interpolation nodes must be strictly increasing");
    double rise = values[k + 1] - values[k];
    if (rise < 0.0) {
      if (rise < -1e-12 * std::max(scale, 1.0)) {
        throw InvalidInput("values must be nondecreasing for monotone interpolation");
      }
      rise = 0.0;
    }
    secant[k] = rise / h;
  }

  std::vector<double> slope(n);
  slope.front() = secant.front();
  slope.back() = secant.back();
  for (std::size_t k = 1; k + 1 < n; ++k) {
    slope[k] = (secant[k - 1] > 0.0 && secant[k] > 0.0)
                   ? 0.5 * (secant[k - 1] + secant[k])
                   : 0.0;
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (secant[k] == 0.0) {
      slope[k] = 0.0;
      slope[k + 1] = 0.0;
      continue;
    }
    const double alpha = slope[k] / secant[k];
    const double beta = slope[k + 1] / secant[k];
    const double radius2 = alpha * alpha + beta * beta;
    if (radius2 > 9.0) {
      const double tau = 3.0 / std::sqrt(radius2);
      slope[k] = tau * alpha * secant[k];
      slope[k + 1] = tau * beta * secant[k];
    }
  }
  std::vector<double> vals(values.begin(), values.end());
  return MonotoneCubicInterpolant(std::vector<double>(x.begin(), x.end()),
                                  std::move(vals), std::move(slope));
}

}  // namespace shapereg
