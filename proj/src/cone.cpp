#include "shapereg/cone.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace shapereg {

namespace {

Vector as_vector(std::span<const double> x) {
  return Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
}

// Residual of each column of m after least-squares projection onto span(v).
Matrix residual_after(const Matrix& m, const Matrix& v) {
  if (v.cols() == 0) return m;
  Eigen::HouseholderQR<Matrix> qr(v);
  const Matrix q = qr.householderQ() * Matrix::Identity(v.rows(), v.cols());
  return m - q * (q.transpose() * m);
}

}  // namespace

Matrix linear_space(Shape shape, std::span<const double> x) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Matrix v(n, linear_space_dim(shape));
  v.col(0).setOnes();
  if (v.cols() == 2) v.col(1) = as_vector(x);
  return v;
}

Matrix edge_vectors(const Matrix& sigma, const Matrix& linear, Vector* scales) {
  Matrix delta = residual_after(sigma, linear);
  Vector norms(delta.cols());
  for (Eigen::Index j = 0; j < delta.cols(); ++j) {
    const double before = sigma.col(j).norm();
    const double after = delta.col(j).norm();
    if (!(after > 1e-10 * before) || after == 0.0) {
      throw NumericalError("basis column " + std::to_string(j) +
                           " lies in the linear space; degenerate basis");
    }
    norms(j) = after;
    delta.col(j) /= after;
  }
  if (scales != nullptr) *scales = norms;
  return delta;
}

Matrix polar_generators(const Matrix& edges) {
  const Matrix gram = edges.transpose() * edges;
  Eigen::ColPivHouseholderQR<Matrix> qr(gram);
  qr.setThreshold(1e-12);
  if (qr.rank() < gram.cols()) {
    throw NumericalError("edge vectors are linearly dependent; polar cone "
                         "generators are undefined");
  }
  return -edges * qr.inverse();
}

Matrix complement_basis(const Matrix& edges, const Matrix& linear) {
  const Eigen::Index n = std::max(edges.rows(), linear.rows());
  const Eigen::Index used = edges.cols() + linear.cols();
  if (used >= n) return Matrix(n, 0);
  Matrix span(n, used);
  span << linear, edges;
  Eigen::HouseholderQR<Matrix> qr(span);
  const Matrix q = qr.householderQ();
  return q.rightCols(n - used);
}

ConeBasis make_cone(const Matrix& sigma, const Matrix& linear, bool with_dual) {
  ConeBasis cone;
  cone.linear = linear;
  cone.edges = edge_vectors(sigma, linear, &cone.edge_scale);
  if (with_dual && cone.m() > 0) {
    cone.polar = polar_generators(cone.edges);
    cone.complement = complement_basis(cone.edges, cone.linear);
    if (cone.m() + cone.r() >= cone.n()) {
      cone.warnings.emplace_back(
          "m + r >= n: no residual directions outside the cone's span");
    }
  } else if (with_dual) {
    cone.polar = Matrix(cone.n(), 0);
    cone.complement = complement_basis(cone.edges, cone.linear);
  }
  return cone;
}

ConeBasis spline_cone(const BasisMatrix& basis, bool with_dual) {
  return make_cone(basis.values, linear_space(basis.shape, basis.x), with_dual);
}

ConeBasis classical_cone(Shape shape, std::span<const double> x,
                         bool with_dual) {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n < 3) throw InvalidInput("classical cones need n >= 3");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(x[i] > x[i - 1])) throw InvalidInput("x must be strictly increasing");
  }
  Matrix sigma;
  double sign = 1.0;
  switch (shape) {
    case Shape::kDecreasing:
      sign = -1.0;
      [[fallthrough]];
    case Shape::kIncreasing:
      sigma = Matrix::Zero(n, n - 1);
      for (Eigen::Index j = 0; j < n - 1; ++j) sigma.col(j).tail(n - 1 - j).setOnes();
      break;
    case Shape::kConcave:
      sign = -1.0;
      [[fallthrough]];
    case Shape::kConvex:
      sigma = Matrix::Zero(n, n - 2);
      for (Eigen::Index j = 0; j < n - 2; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) sigma(i, j) = std::max(0.0, x[i] - x[j + 1]);
      }
      break;
    case Shape::kDecreasingConcave:
      sign = -1.0;
      [[fallthrough]];
    case Shape::kIncreasingConvex:
      // Slopes nonnegative and nondecreasing: (x - x_1) plus hinges.
      sigma = Matrix::Zero(n, n - 1);
      for (Eigen::Index j = 0; j < n - 1; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) sigma(i, j) = std::max(0.0, x[i] - x[j]);
      }
      break;
    case Shape::kIncreasingConcave:
      sign = -1.0;
      [[fallthrough]];
    case Shape::kDecreasingConvex:
      // Mirror image: (x_n - x) plus hinges opening to the left.
      sigma = Matrix::Zero(n, n - 1);
      for (Eigen::Index j = 0; j < n - 1; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
          sigma(i, j) = std::max(0.0, x[n - 1 - j] - x[i]);
        }
      }
      break;
  }
  return make_cone(sign * sigma, linear_space(shape, x), with_dual);
}

ConstraintMatrix monotone_constraint_matrix(int n) {
  if (n < 2) throw InvalidInput("constraint matrix needs n >= 2");
  Matrix a = Matrix::Zero(n - 1, n);
  for (int i = 0; i < n - 1; ++i) {
    a(i, i) = -1.0;
    a(i, i + 1) = 1.0;
  }
  return {std::move(a)};
}

namespace {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > (std::uint64_t{1} << 62)) return r;
  }
  return r;
}

}  // namespace

SubconeEdges subcone_edges(const Matrix& basis, const ConstraintMatrix& a,
                           const SubconeOptions& options) {
  if (a.a.cols() != basis.rows()) {
    throw InvalidInput("constraint matrix and basis disagree on n");
  }
  const Matrix ab = a.a * basis;

  // Coordinates in the row space of A B, where the cone is pointed.
  Eigen::JacobiSVD<Matrix> svd(ab, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int q = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-10 * sv(0)) ++q;
  }
  if (q < 1) throw NumericalError("constraint rows of the subspace are all zero");
  const Matrix row_basis = svd.matrixV().leftCols(q);  // m x q
  Matrix rows = ab * row_basis;                        // (n-1) x q

  std::vector<Eigen::Index> live;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double nrm = rows.row(i).norm();
    if (nrm > 1e-12) {
      rows.row(i) /= nrm;
      live.push_back(i);
    }
  }
  const auto n_live = static_cast<std::uint64_t>(live.size());
  const auto choose = static_cast<std::uint64_t>(q - 1);
  const std::uint64_t total = binomial(n_live, choose);
  if (total > options.max_subsets) {
    throw NumericalError("subcone edge enumeration needs " +
                         std::to_string(total) + " subsets (cap " +
                         std::to_string(options.max_subsets) +
                         "); use fewer knots");
  }

  SubconeEdges out;
  out.row_rank = q;
  std::vector<Vector> data_edges;
  std::vector<Vector> coeff_edges;
  const Matrix data_map = basis * row_basis;  // n x q

  // An edge is pinned down by all rows active at it; recomputing the
  // direction from that full set removes the conditioning error of the
  // particular subset that found it.
  auto polish = [&](const Vector& dir) -> Vector {
    const Vector slack = rows * dir;
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      if (std::abs(slack(i)) < 1e-7) active.push_back(i);
    }
    if (static_cast<int>(active.size()) < q - 1) return dir;
    Matrix act(static_cast<Eigen::Index>(active.size()), q);
    for (std::size_t i = 0; i < active.size(); ++i) {
      act.row(static_cast<Eigen::Index>(i)) = rows.row(active[i]);
    }
    Eigen::JacobiSVD<Matrix> s(act, Eigen::ComputeFullV);
    const auto& w = s.singularValues();
    if (w.size() < q - 1 || w(q - 2) < 1e-9 * w(0)) return dir;
    if (w.size() >= q && w(q - 1) > 1e-9 * w(0)) return dir;
    Vector refined = s.matrixV().col(q - 1);
    if (refined.dot(dir) < 0) refined = -refined;
    return refined;
  };

  auto consider = [&](const Vector& r0) {
    const Vector slack = rows * r0;
    Vector dir;
    if (slack.minCoeff() >= -options.feasibility_tol) {
      dir = r0;
    } else if (slack.maxCoeff() <= options.feasibility_tol) {
      dir = -r0;
    } else {
      return;
    }
    dir = polish(dir);
    if ((rows * dir).minCoeff() < -options.feasibility_tol) return;
    Vector e = data_map * dir;
    const double nrm = e.norm();
    if (nrm == 0.0) return;
    e /= nrm;
    for (const auto& seen : data_edges) {
      if ((seen - e).cwiseAbs().maxCoeff() < options.dedupe_tol) return;
    }
    data_edges.push_back(e);
    coeff_edges.push_back(row_basis * dir / nrm);
  };

  if (q == 1) {
    ++out.subsets_examined;
    consider(Vector::Ones(1));
  } else {
    std::vector<std::size_t> idx(choose);
    std::iota(idx.begin(), idx.end(), 0);
    Matrix sub(q, q - 1);
    while (true) {
      ++out.subsets_examined;
      for (std::size_t c = 0; c < idx.size(); ++c) {
        sub.col(static_cast<Eigen::Index>(c)) = rows.row(live[idx[c]]).transpose();
      }
      Eigen::HouseholderQR<Matrix> qr(sub);
      const Matrix& r = qr.matrixQR();
      bool independent = true;
      for (Eigen::Index d = 0; d < q - 1; ++d) {
        if (std::abs(r(d, d)) < 1e-9) {
          independent = false;
          break;
        }
      }
      if (independent) {
        const Vector r0 = qr.householderQ() * Vector::Unit(q, q - 1);
        consider(r0);
      }
      // Next combination in lexicographic order.
      std::size_t pos = idx.size();
      while (pos > 0 && idx[pos - 1] == n_live - choose + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t j = pos; j < idx.size(); ++j) idx[j] = idx[j - 1] + 1;
    }
  }

  const auto ne = static_cast<Eigen::Index>(data_edges.size());
  out.data.resize(basis.rows(), ne);
  out.coeffs.resize(basis.cols(), ne);
  for (Eigen::Index j = 0; j < ne; ++j) {
    out.data.col(j) = data_edges[static_cast<std::size_t>(j)];
    out.coeffs.col(j) = coeff_edges[static_cast<std::size_t>(j)];
  }
  return out;
}

}  // namespace shapereg
