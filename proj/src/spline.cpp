#include "shapereg/spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace shapereg {

// ---------------------------------------------------------------------------
// KnotVector

KnotVector::KnotVector(int order, std::vector<double> interior, double lo,
                       double hi)
    : order_(order), interior_(std::move(interior)), lo_(lo), hi_(hi) {
  if (order_ < 1 || order_ > 4) {
    throw InvalidInput("spline order must be in 1..4, got " +
                       std::to_string(order_));
  }
  if (!(lo_ < hi_)) throw InvalidInput("knot range must satisfy lo < hi");
  double prev = lo_;
  for (double t : interior_) {
    if (!(t > prev)) {
      throw InvalidInput("interior knots must be strictly increasing inside "
                         "(x_min, x_max)");
    }
    prev = t;
  }
  if (!interior_.empty() && !(interior_.back() < hi_)) {
    throw InvalidInput("interior knots must lie strictly below x_max");
  }
  knots_.assign(order_, lo_);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), order_, hi_);
}

std::vector<double> KnotVector::breakpoints() const {
  std::vector<double> br;
  br.reserve(interior_.size() + 2);
  br.push_back(lo_);
  br.insert(br.end(), interior_.begin(), interior_.end());
  br.push_back(hi_);
  return br;
}

KnotVector KnotVector::reflected() const {
  std::vector<double> mirrored(interior_.rbegin(), interior_.rend());
  for (double& t : mirrored) t = lo_ + hi_ - t;
  return KnotVector(order_, std::move(mirrored), lo_, hi_);
}

KnotVector KnotVector::with_order(int order) const {
  return KnotVector(order, interior_, lo_, hi_);
}

KnotVector make_knots(std::span<const double> x, int interior_count, int order,
                      KnotPlacement placement) {
  const auto n = x.size();
  if (n < 2) throw InvalidInput("need at least two design points");
  if (interior_count < 0) throw InvalidInput("interior knot count must be >= 0");
  if (order < 1 || order > 4) throw InvalidInput("spline order must be in 1..4");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) throw InvalidInput("design points must be finite");
    if (i > 0 && !(x[i] > x[i - 1])) {
      throw InvalidInput(
          "design points must be strictly increasing (aggregate duplicate x "
          "with a weighted fit)");
    }
  }
  const double lo = x.front();
  const double hi = x.back();
  const int l = interior_count;
  std::vector<double> interior(l);
  for (int j = 1; j <= l; ++j) {
    const double p = static_cast<double>(j) / (l + 1);
    if (placement == KnotPlacement::kEqualSpacing) {
      interior[j - 1] = lo + p * (hi - lo);
    } else {
      const double h = p * static_cast<double>(n - 1);
      const auto below = static_cast<std::size_t>(std::floor(h));
      const double frac = h - static_cast<double>(below);
      const std::size_t above = std::min(below + 1, n - 1);
      interior[j - 1] = x[below] + frac * (x[above] - x[below]);
    }
  }
  // Nudge quantiles that land on the boundary back inside the range.
  const double eps = 1e-9 * (hi - lo);
  for (double& t : interior) t = std::clamp(t, lo + eps, hi - eps);

  KnotVector kv(order, std::move(interior), lo, hi);

  const auto br = kv.breakpoints();
  for (std::size_t p = 0; p + 1 < br.size(); ++p) {
    const bool last = p + 2 == br.size();
    const auto has_point = std::any_of(x.begin(), x.end(), [&](double xi) {
      return xi >= br[p] && (last ? xi <= br[p + 1] : xi < br[p + 1]);
    });
    if (!has_point) {
      throw InvalidInput("knot interval [" + std::to_string(br[p]) + ", " +
                         std::to_string(br[p + 1]) +
                         ") contains no design point; use fewer knots");
    }
  }
  return kv;
}

// ---------------------------------------------------------------------------
// PiecewisePoly

namespace {

using Poly = std::vector<double>;

double horner(const Poly& c, double u) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * u + *it;
  return v;
}

Poly derivative_coeffs(const Poly& c) {
  if (c.size() <= 1) return {};
  Poly d(c.size() - 1);
  for (std::size_t j = 1; j < c.size(); ++j) d[j - 1] = c[j] * static_cast<double>(j);
  return d;
}

// c(u) * (a0 + a1 u)
Poly times_linear(const Poly& c, double a0, double a1) {
  if (c.empty()) return {};
  Poly out(c.size() + 1, 0.0);
  for (std::size_t j = 0; j < c.size(); ++j) {
    out[j] += a0 * c[j];
    out[j + 1] += a1 * c[j];
  }
  return out;
}

void add_into(Poly& acc, const Poly& c, double scale) {
  if (acc.size() < c.size()) acc.resize(c.size(), 0.0);
  for (std::size_t j = 0; j < c.size(); ++j) acc[j] += scale * c[j];
}

}  // namespace

PiecewisePoly::PiecewisePoly(std::vector<double> breaks,
                             std::vector<std::vector<double>> coeffs)
    : breaks_(std::move(breaks)), coeffs_(std::move(coeffs)) {
  if (breaks_.size() < 2 || coeffs_.size() + 1 != breaks_.size()) {
    throw InvalidInput("piecewise polynomial needs one piece per interval");
  }
  for (std::size_t p = 0; p + 1 < breaks_.size(); ++p) {
    if (!(breaks_[p + 1] > breaks_[p])) {
      throw InvalidInput("breakpoints must be strictly increasing");
    }
  }
}

PiecewisePoly PiecewisePoly::zero(const std::vector<double>& breaks) {
  return PiecewisePoly(breaks, std::vector<Poly>(breaks.size() - 1));
}

PiecewisePoly PiecewisePoly::identity(double lo, double hi) {
  return PiecewisePoly({lo, hi}, {{lo, 1.0}});
}

std::size_t PiecewisePoly::piece_index(double x) const {
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
  auto idx = static_cast<std::size_t>(std::distance(breaks_.begin(), it));
  idx = idx == 0 ? 0 : idx - 1;
  return std::min(idx, coeffs_.size() - 1);
}

double PiecewisePoly::operator()(double x) const {
  if (x < breaks_.front() || x > breaks_.back()) return 0.0;
  const auto p = piece_index(x);
  return horner(coeffs_[p], x - breaks_[p]);
}

double PiecewisePoly::derivative_at(double x, int order) const {
  if (x < breaks_.front() || x > breaks_.back()) return 0.0;
  const auto p = piece_index(x);
  Poly c = coeffs_[p];
  for (int d = 0; d < order; ++d) c = derivative_coeffs(c);
  return horner(c, x - breaks_[p]);
}

PiecewisePoly PiecewisePoly::integral() const {
  std::vector<Poly> out(coeffs_.size());
  double acc = 0.0;
  for (std::size_t p = 0; p < coeffs_.size(); ++p) {
    const Poly& c = coeffs_[p];
    Poly a(c.size() + 1, 0.0);
    a[0] = acc;
    for (std::size_t j = 0; j < c.size(); ++j) {
      a[j + 1] = c[j] / static_cast<double>(j + 1);
    }
    acc = horner(a, breaks_[p + 1] - breaks_[p]);
    out[p] = std::move(a);
  }
  return PiecewisePoly(breaks_, std::move(out));
}

PiecewisePoly PiecewisePoly::derivative() const {
  std::vector<Poly> out;
  out.reserve(coeffs_.size());
  for (const auto& c : coeffs_) out.push_back(derivative_coeffs(c));
  return PiecewisePoly(breaks_, std::move(out));
}

int PiecewisePoly::degree() const {
  int deg = 0;
  for (const auto& c : coeffs_) {
    for (int j = static_cast<int>(c.size()) - 1; j > deg; --j) {
      if (c[j] != 0.0) {
        deg = j;
        break;
      }
    }
  }
  return deg;
}

// ---------------------------------------------------------------------------
// M-, I- and C-splines

std::vector<PiecewisePoly> msplines(const KnotVector& kv) {
  const auto& t = kv.knots();
  const auto br = kv.breakpoints();
  const std::size_t pieces = br.size() - 1;
  const int k = kv.order();

  auto piece_of = [&](double left) {
    return static_cast<std::size_t>(
        std::lower_bound(br.begin(), br.end(), left) - br.begin());
  };

  // cur[i][p]: coefficients of M_i on piece p, in powers of (x - br[p]).
  std::vector<std::vector<Poly>> cur(t.size() - 1, std::vector<Poly>(pieces));
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (t[i] < t[i + 1]) cur[i][piece_of(t[i])] = {1.0 / (t[i + 1] - t[i])};
  }
  for (int ord = 2; ord <= k; ++ord) {
    std::vector<std::vector<Poly>> next(cur.size() - 1,
                                        std::vector<Poly>(pieces));
    for (std::size_t i = 0; i < next.size(); ++i) {
      const double span = t[i + ord] - t[i];
      if (span <= 0.0) continue;
      const double factor = ord / ((ord - 1) * span);
      for (std::size_t p = 0; p < pieces; ++p) {
        const double a = br[p];
        Poly acc;
        // (x - t_i) M_i + (t_{i+ord} - x) M_{i+1}, with x = a + u.
        add_into(acc, times_linear(cur[i][p], a - t[i], 1.0), factor);
        add_into(acc, times_linear(cur[i + 1][p], t[i + ord] - a, -1.0),
                 factor);
        next[i][p] = std::move(acc);
      }
    }
    cur = std::move(next);
  }

  std::vector<PiecewisePoly> out;
  out.reserve(cur.size());
  for (auto& pieces_of_i : cur) out.emplace_back(br, std::move(pieces_of_i));
  return out;
}

PiecewisePoly mspline(const KnotVector& kv, int index) {
  if (index < 0 || index >= kv.basis_count()) {
    throw InvalidInput("M-spline index out of range");
  }
  return msplines(kv)[static_cast<std::size_t>(index)];
}

PiecewisePoly ispline(const KnotVector& kv, int index) {
  return mspline(kv, index).integral();
}

PiecewisePoly cspline(const KnotVector& kv, int index) {
  return mspline(kv, index).integral().integral();
}

Matrix mspline_matrix(const KnotVector& kv, std::span<const double> x) {
  const auto ms = msplines(kv);
  Matrix out(static_cast<Eigen::Index>(x.size()),
             static_cast<Eigen::Index>(ms.size()));
  for (std::size_t j = 0; j < ms.size(); ++j) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ms[j](x[i]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shape-restricted bases

double BasisColumn::operator()(double x) const {
  const double arg = reflected ? poly.lo() + poly.hi() - x : x;
  return sign * poly(arg);
}

std::vector<BasisColumn> basis_columns(const KnotVector& kv, Shape shape) {
  if (kv.order() > 2) {
    throw InvalidInput(
        "shape-restricted bases need M-spline order 1 or 2 (quadratic I-splines "
        "or cubic C-splines); cubic monotone fits use the subcone path");
  }
  std::vector<BasisColumn> cols;
  auto push_all = [&](const KnotVector& knots, int integrations, double sign,
                      bool reflected) {
    for (auto& m : msplines(knots)) {
      PiecewisePoly p = std::move(m);
      for (int s = 0; s < integrations; ++s) p = p.integral();
      cols.push_back({std::move(p), sign, reflected});
    }
  };
  auto push_identity = [&](double sign, bool reflected) {
    cols.push_back({PiecewisePoly::identity(kv.lo(), kv.hi()), sign, reflected});
  };

  switch (shape) {
    case Shape::kIncreasing:
      push_all(kv, 1, 1.0, false);
      break;
    case Shape::kDecreasing:
      push_all(kv, 1, -1.0, false);
      break;
    case Shape::kConvex:
      push_all(kv, 2, 1.0, false);
      break;
    case Shape::kConcave:
      push_all(kv, 2, -1.0, false);
      break;
    case Shape::kIncreasingConvex:
      push_all(kv, 2, 1.0, false);
      push_identity(1.0, false);
      break;
    case Shape::kDecreasingConcave:
      push_all(kv, 2, -1.0, false);
      push_identity(-1.0, false);
      break;
    case Shape::kDecreasingConvex:
      push_all(kv.reflected(), 2, 1.0, true);
      push_identity(1.0, true);
      break;
    case Shape::kIncreasingConcave:
      push_all(kv.reflected(), 2, -1.0, true);
      push_identity(-1.0, true);
      break;
  }
  return cols;
}

BasisMatrix basis_vectors(const KnotVector& kv, std::span<const double> x,
                          Shape shape) {
  auto cols = basis_columns(kv, shape);
  Matrix values(static_cast<Eigen::Index>(x.size()),
                static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cols[j](x[i]);
    }
  }
  return BasisMatrix{std::move(values), shape, kv,
                     std::vector<double>(x.begin(), x.end()), std::move(cols)};
}

}  // namespace shapereg
