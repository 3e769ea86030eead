// Reference implementations used only by the tests. None of these call into
// the library's numerics, so agreement is meaningful.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// 5-point Gauss-Legendre on each of `pieces` equal subintervals.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        int pieces = 400) {
  static const double node[5] = {0.0, -0.5384693101056831, 0.5384693101056831,
                                 -0.9061798459386640, 0.9061798459386640};
  static const double weight[5] = {0.5688888888888889, 0.4786286704993665,
                                   0.4786286704993665, 0.2369268850561891,
                                   0.2369268850561891};
  const double h = (b - a) / pieces;
  double total = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int q = 0; q < 5; ++q) total += weight[q] * f(mid + 0.5 * h * node[q]);
  }
  return total * 0.5 * h;
}

// Weighted pool-adjacent-violators for a nondecreasing fit.
inline std::vector<double> pava(const std::vector<double>& y,
                                std::vector<double> w = {}) {
  if (w.empty()) w.assign(y.size(), 1.0);
  struct Block { double mean, weight; std::size_t size; };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < y.size(); ++i) {
    blocks.push_back({y[i], w[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      const double tw = a.weight + b.weight;
      a.mean = (a.mean * a.weight + b.mean * b.weight) / tw;
      a.weight = tw;
      a.size += b.size;
    }
  }
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.size, b.mean);
  return out;
}

// Projection onto {V a + E b : b >= 0} by brute force: every face's
// least-squares fit with nonnegative edge coefficients is a point of the
// cone, and the projection is the closest of them.
inline Vector face_enumeration_projection(const Vector& y, const Matrix& edges,
                                          const Matrix& linear) {
  const int m = static_cast<int>(edges.cols());
  const int r = static_cast<int>(linear.cols());
  double best = std::numeric_limits<double>::infinity();
  Vector best_fit = Vector::Zero(y.size());
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> cols;
    for (int j = 0; j < m; ++j)
      if (mask & (1u << j)) cols.push_back(j);
    Matrix design(y.size(), r + static_cast<int>(cols.size()));
    if (r > 0) design.leftCols(r) = linear;
    for (std::size_t c = 0; c < cols.size(); ++c) design.col(r + c) = edges.col(cols[c]);
    Vector coef = design.size() == 0 ? Vector() : Vector(design.colPivHouseholderQr().solve(y));
    bool ok = true;
    for (std::size_t c = 0; c < cols.size(); ++c)
      if (coef(r + c) < -1e-12) ok = false;
    if (!ok) continue;
    Vector fit = design.size() == 0 ? Vector(Vector::Zero(y.size())) : Vector(design * coef);
    const double sse = (y - fit).squaredNorm();
    if (sse < best) {
      best = sse;
      best_fit = fit;
    }
  }
  return best_fit;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline Vector random_normal(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> z;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

// Numerical derivative by central differences.
inline double derivative(const std::function<double(double)>& f, double x,
                         double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

inline std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / (n - 1);
  g.back() = hi;
  return g;
}

// Kolmogorov distance between the empirical CDF of `sample` and `cdf`;
// ties (atoms) are compared against the left limit of `cdf`.
inline double ks_distance(std::vector<double> sample,
                          const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sample.size()) {
    std::size_t j = i;
    while (j < sample.size() && sample[j] == sample[i]) ++j;
    const double v = sample[i];
    const double left = cdf(std::nextafter(v, -std::numeric_limits<double>::infinity()));
    d = std::max({d, std::abs(j / n - cdf(v)), std::abs(left - i / n)});
    i = j;
  }
  return d;
}

// Extreme rays of {B c : G c >= 0} with G = A B, modulo the lineality space
// {c : G c = 0}. Works in an orthonormal basis Q of the row space of G so the
// cone is pointed, samples random directions on the unit sphere, keeps the
// feasible ones, and walks each along its current face until q - 1
// independent constraints are tight. Returns unit data-space rays B Q u.
inline Matrix extreme_rays_by_sampling(const Matrix& basis, const Matrix& a,
                                       int samples, std::uint64_t seed) {
  const Matrix g = a * basis;
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullV);
  const double cut = 1e-10 * svd.singularValues()(0);
  int q = 0;
  while (q < svd.singularValues().size() && svd.singularValues()(q) > cut) ++q;
  const Matrix rowspace = svd.matrixV().leftCols(q);
  const Matrix gq = g * rowspace;
  std::mt19937_64 rng(seed);
  std::vector<Vector> rays;
  for (int s = 0; s < samples; ++s) {
    Vector u = random_normal(rng, q).normalized();
    if ((gq * u).minCoeff() < 0.0) continue;
    bool extreme = false;
    for (int step = 0; step < 4 * q; ++step) {
      const Vector slack = gq * u;
      std::vector<int> tight;
      for (int i = 0; i < slack.size(); ++i)
        if (slack(i) <= 1e-11) tight.push_back(i);
      Matrix face(tight.size(), q);
      for (std::size_t i = 0; i < tight.size(); ++i) face.row(i) = gq.row(tight[i]);
      Matrix dirs;
      if (tight.empty()) {
        dirs = Matrix::Identity(q, q);
      } else {
        Eigen::FullPivLU<Matrix> lu(face);
        lu.setThreshold(1e-9);
        dirs = lu.kernel();
        if (lu.rank() == 0) dirs = Matrix::Identity(q, q);
      }
      if (dirs.cols() <= 1) {
        extreme = true;
        break;
      }
      // random move within the face, orthogonal to u
      Vector d = dirs * random_normal(rng, dirs.cols());
      d -= d.dot(u) * u;
      if (d.norm() < 1e-12) break;
      d.normalize();
      const Vector rate = gq * d;
      double t = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rate.size(); ++i)
        if (rate(i) < -1e-14 && slack(i) > 1e-11) t = std::min(t, -slack(i) / rate(i));
      if (!std::isfinite(t)) {
        d = -d;
        const Vector back = gq * d;
        for (int i = 0; i < back.size(); ++i)
          if (back(i) < -1e-14 && slack(i) > 1e-11) t = std::min(t, -slack(i) / back(i));
      }
      if (!std::isfinite(t)) break;
      u = (u + t * d).normalized();
      // clean tiny negative slacks from rounding
      if ((gq * u).minCoeff() < -1e-9) break;
    }
    if (!extreme) continue;
    Vector ray = basis * (rowspace * u);
    ray.normalize();
    bool seen = false;
    for (const auto& r : rays) seen |= (r - ray).norm() < 1e-7;
    if (!seen) rays.push_back(ray);
  }
  Matrix out(basis.rows(), rays.size());
  for (std::size_t j = 0; j < rays.size(); ++j) out.col(j) = rays[j];
  return out;
}

}  // namespace oracle
