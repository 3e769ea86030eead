#include "shapereg/projection.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace shapereg {

namespace {

// Thin QR of the face design matrix [V, delta_J] kept up to date as
// columns come and go.
class FaceQR {
 public:
  FaceQR(Eigen::Index n, Eigen::Index capacity)
      : q_(n, capacity), r_(Matrix::Zero(capacity, capacity)) {}

  Eigen::Index size() const { return p_; }

  // False when c is numerically inside the current span.
  bool append(const Vector& c) {
    if (p_ == q_.cols()) return false;
    Vector v = c;
    Vector h = Vector::Zero(p_);
    for (int pass = 0; pass < 2; ++pass) {
      const Vector hp = q_.leftCols(p_).transpose() * v;
      v -= q_.leftCols(p_) * hp;
      h += hp;
    }
    const double rnn = v.norm();
    if (!(rnn > 1e-10 * c.norm())) return false;
    q_.col(p_) = v / rnn;
    r_.col(p_).head(p_) = h;
    r_(p_, p_) = rnn;
    r_.col(p_).tail(r_.rows() - p_ - 1).setZero();
    cols_.push_back(c);
    ++p_;
    return true;
  }

  void remove(Eigen::Index pos) {
    for (Eigen::Index j = pos; j + 1 < p_; ++j) r_.col(j).head(p_) = r_.col(j + 1).head(p_);
    r_.col(p_ - 1).setZero();
    for (Eigen::Index j = pos; j + 1 < p_; ++j) {
      Eigen::JacobiRotation<double> g;
      g.makeGivens(r_(j, j), r_(j + 1, j));
      r_.block(0, 0, p_, p_).applyOnTheLeft(j, j + 1, g.adjoint());
      q_.leftCols(p_).applyOnTheRight(j, j + 1, g);
      r_(j + 1, j) = 0.0;
    }
    cols_.erase(cols_.begin() + pos);
    --p_;
    r_.row(p_).setZero();
    for (Eigen::Index j = 0; j < p_; ++j) {
      if (std::abs(q_.col(j).norm() - 1.0) > 1e-10) {
        rebuild();
        break;
      }
    }
  }

  Vector coefficients(const Vector& y) const {
    const Vector qty = q_.leftCols(p_).transpose() * y;
    return r_.topLeftCorner(p_, p_).triangularView<Eigen::Upper>().solve(qty);
  }

  Vector fitted(const Vector& y) const {
    return q_.leftCols(p_) * (q_.leftCols(p_).transpose() * y);
  }

 private:
  void rebuild() {
    auto cols = std::move(cols_);
    cols_.clear();
    p_ = 0;
    r_.setZero();
    for (const auto& c : cols) {
      if (!append(c)) throw NumericalError("face columns lost independence");
    }
  }

  Matrix q_;
  Matrix r_;
  Eigen::Index p_ = 0;
  std::vector<Vector> cols_;
};

void check_inputs(const Vector& y, const ConeBasis& cone) {
  if (!y.allFinite()) throw InvalidInput("data vector contains non-finite values");
  if (y.size() != cone.n()) throw InvalidInput("data length does not match cone");
}

}  // namespace

Vector project_linear(const Vector& y, const Matrix& linear) {
  if (linear.cols() == 0) return Vector::Zero(y.size());
  return linear * linear.colPivHouseholderQr().solve(y);
}

ProjectionResult project(const Vector& y, const ConeBasis& cone,
                         const ProjectionOptions& options) {
  check_inputs(y, cone);
  const Eigen::Index n = cone.n();
  const Eigen::Index m = cone.m();
  const Eigen::Index r = cone.r();
  const double tol = options.tol * std::max(y.norm(), 1e-300);
  const int max_iter =
      options.max_iterations > 0 ? options.max_iterations : 50 * static_cast<int>(m + 1);

  FaceQR qr(n, std::min(n, r + m));
  for (Eigen::Index j = 0; j < r; ++j) {
    if (!qr.append(cone.linear.col(j))) {
      throw NumericalError("linear-space basis is rank deficient");
    }
  }
  std::vector<int> face;  // edge index per QR column after the first r
  std::vector<char> in_face(static_cast<std::size_t>(m), 0);
  std::set<std::vector<int>> visited{{}};
  // After a revisit (possible when edges are linearly dependent) the search
  // switches to Lawson-Hanson steps, which decrease the SSE monotonically.
  bool stepping = false;
  std::vector<double> face_coef;
  std::vector<char> blocked(static_cast<std::size_t>(m), 0);

  auto drop = [&](std::size_t k) {
    in_face[static_cast<std::size_t>(face[k])] = 0;
    face.erase(face.begin() + static_cast<std::ptrdiff_t>(k));
    if (stepping) face_coef.erase(face_coef.begin() + static_cast<std::ptrdiff_t>(k));
    qr.remove(r + static_cast<Eigen::Index>(k));
  };

  Vector resid = y - qr.fitted(y);
  int iterations = 0;
  while (true) {
    const Vector dual = cone.edges.transpose() * resid;
    std::vector<char> refused(blocked);
    int added = -1;
    while (added < 0) {
      int best = -1;
      double best_val = tol;
      for (Eigen::Index j = 0; j < m; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (!in_face[ju] && !refused[ju] && dual(j) > best_val) {
          best_val = dual(j);
          best = static_cast<int>(j);
        }
      }
      if (best < 0) break;
      if (qr.append(cone.edges.col(best))) {
        added = best;
      } else {
        refused[static_cast<std::size_t>(best)] = 1;
      }
    }
    if (added < 0) break;
    face.push_back(added);
    in_face[static_cast<std::size_t>(added)] = 1;
    if (stepping) face_coef.push_back(0.0);
    ++iterations;

    while (true) {
      const Vector coef = qr.coefficients(y);
      if (!stepping) {
        Eigen::Index worst = -1;
        double worst_val = -tol;
        for (std::size_t k = 0; k < face.size(); ++k) {
          const double b = coef(r + static_cast<Eigen::Index>(k));
          if (b < worst_val) {
            worst_val = b;
            worst = static_cast<Eigen::Index>(k);
          }
        }
        if (worst < 0) break;
        drop(static_cast<std::size_t>(worst));
        ++iterations;
        continue;
      }
      double step = 1.0;
      for (std::size_t k = 0; k < face.size(); ++k) {
        const double z = coef(r + static_cast<Eigen::Index>(k));
        if (z <= tol) step = std::min(step, face_coef[k] / std::max(face_coef[k] - z, 1e-300));
      }
      for (std::size_t k = 0; k < face.size(); ++k) {
        face_coef[k] += step * (coef(r + static_cast<Eigen::Index>(k)) - face_coef[k]);
      }
      if (step >= 1.0) {
        std::fill(blocked.begin(), blocked.end(), 0);
        break;
      }
      if (step <= 0.0 && face.back() == added) blocked[static_cast<std::size_t>(added)] = 1;
      for (std::size_t k = face.size(); k-- > 0;) {
        if (face_coef[k] <= tol) {
          drop(k);
          ++iterations;
        }
      }
    }
    if (iterations > max_iter) {
      throw NumericalError("hinge algorithm exceeded " + std::to_string(max_iter) +
                           " iterations");
    }
    if (!stepping) {
      std::vector<int> key = face;
      std::sort(key.begin(), key.end());
      if (!visited.insert(key).second) {
        stepping = true;
        const Vector coef = qr.coefficients(y);
        face_coef.assign(face.size(), 0.0);
        for (std::size_t k = 0; k < face.size(); ++k) {
          face_coef[k] = std::max(coef(r + static_cast<Eigen::Index>(k)), 0.0);
        }
      }
    }
    resid = y - qr.fitted(y);
  }

  ProjectionResult out;
  const Vector coef = qr.coefficients(y);
  out.fitted = qr.fitted(y);
  out.linear_coef = coef.head(r);
  out.edge_coef = Vector::Zero(m);
  for (std::size_t k = 0; k < face.size(); ++k) {
    out.edge_coef(face[k]) = std::max(0.0, coef(r + static_cast<Eigen::Index>(k)));
  }
  out.active = face;
  std::sort(out.active.begin(), out.active.end());
  out.sse = (y - out.fitted).squaredNorm();
  out.iterations = iterations;
  return out;
}

ProjectionResult exhaustive_project(const Vector& y, const ConeBasis& cone,
                                    int* qualifying, int max_edges) {
  check_inputs(y, cone);
  const Eigen::Index m = cone.m();
  const Eigen::Index r = cone.r();
  if (m > max_edges) {
    throw NumericalError("exhaustive projection over 2^" + std::to_string(m) +
                         " faces exceeds the budget");
  }
  const double tol = 1e-10 * std::max(y.norm(), 1e-300);
  Matrix design(cone.n(), r + m);
  design << cone.linear, cone.edges;
  const Matrix gram = design.transpose() * design;
  const Vector rhs = design.transpose() * y;

  ProjectionResult best;
  int found = 0;
  const std::uint64_t faces = std::uint64_t{1} << m;
  std::vector<Eigen::Index> idx;
  for (std::uint64_t mask = 0; mask < faces; ++mask) {
    idx.clear();
    for (Eigen::Index j = 0; j < r; ++j) idx.push_back(j);
    for (Eigen::Index j = 0; j < m; ++j) {
      if (mask >> j & 1U) idx.push_back(r + j);
    }
    const auto p = static_cast<Eigen::Index>(idx.size());
    Matrix g(p, p);
    Vector b(p);
    for (Eigen::Index a = 0; a < p; ++a) {
      b(a) = rhs(idx[a]);
      for (Eigen::Index c = 0; c < p; ++c) g(a, c) = gram(idx[a], idx[c]);
    }
    Eigen::LDLT<Matrix> ldlt(g);
    const Vector coef = ldlt.solve(b);
    bool ok = true;
    for (Eigen::Index a = r; a < p && ok; ++a) ok = coef(a) > tol;
    if (!ok) continue;
    // Dual check: <y - fit, delta_j> <= 0 for every edge.
    Vector dual = rhs.tail(m);
    for (Eigen::Index a = 0; a < p; ++a) dual -= gram.block(r, idx[a], m, 1) * coef(a);
    if (m > 0 && dual.maxCoeff() > tol) continue;
    ++found;
    if (found == 1) {
      best.edge_coef = Vector::Zero(m);
      best.linear_coef = coef.head(r);
      best.fitted = cone.linear * coef.head(r);
      best.active.clear();
      for (Eigen::Index a = r; a < p; ++a) {
        const auto j = static_cast<int>(idx[a] - r);
        best.active.push_back(j);
        best.edge_coef(j) = coef(a);
        best.fitted += cone.edges.col(j) * coef(a);
      }
      best.sse = (y - best.fitted).squaredNorm();
      best.iterations = 0;
    }
  }
  if (qualifying != nullptr) *qualifying = found;
  if (found == 0) throw NumericalError("no face satisfied the optimality conditions");
  return best;
}

ProjectionResult weighted_project(const Vector& y, const ConeBasis& cone,
                                  const Matrix& cov,
                                  const ProjectionOptions& options) {
  check_inputs(y, cone);
  if (cov.rows() != cone.n() || cov.cols() != cone.n()) {
    throw InvalidInput("covariance dimensions do not match the data");
  }
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput("covariance matrix is not positive definite");
  }
  const auto lower = llt.matrixL();
  const Vector yt = lower.solve(y);
  const Matrix vt = lower.solve(cone.linear);
  const Matrix et = lower.solve(cone.edges);

  ConeBasis transformed;
  transformed.linear = vt;
  transformed.edges = edge_vectors(et, vt, &transformed.edge_scale);
  ProjectionResult inner = project(yt, transformed, options);

  ProjectionResult out;
  out.fitted = llt.matrixL() * inner.fitted;
  out.active = inner.active;
  out.edge_coef = inner.edge_coef.cwiseQuotient(transformed.edge_scale);
  out.linear_coef = cone.linear.colPivHouseholderQr().solve(
      out.fitted - cone.edges * out.edge_coef);
  out.sse = inner.sse;
  out.iterations = inner.iterations;
  return out;
}

ProjectionResult weighted_project_diag(const Vector& y, const ConeBasis& cone,
                                       const Vector& variances,
                                       const ProjectionOptions& options) {
  if (variances.size() != y.size()) {
    throw InvalidInput("variance vector length does not match the data");
  }
  if ((variances.array() <= 0.0).any() || !variances.allFinite()) {
    throw InvalidInput("variances must be positive and finite");
  }
  const Vector root = variances.cwiseSqrt();
  ConeBasis transformed;
  const Matrix vt = root.cwiseInverse().asDiagonal() * cone.linear;
  const Matrix et = root.cwiseInverse().asDiagonal() * cone.edges;
  transformed.linear = vt;
  transformed.edges = edge_vectors(et, vt, &transformed.edge_scale);
  ProjectionResult inner = project(y.cwiseQuotient(root), transformed, options);

  ProjectionResult out;
  out.fitted = inner.fitted.cwiseProduct(root);
  out.active = inner.active;
  out.edge_coef = inner.edge_coef.cwiseQuotient(transformed.edge_scale);
  out.linear_coef = cone.linear.colPivHouseholderQr().solve(
      out.fitted - cone.edges * out.edge_coef);
  out.sse = inner.sse;
  out.iterations = inner.iterations;
  return out;
}

SectorDecomposition sector_decompose(const Vector& y, const ConeBasis& cone) {
  return sector_decompose(y, cone, project(y, cone));
}

SectorDecomposition sector_decompose(const Vector& y, const ConeBasis& cone,
                                     const ProjectionResult& projection) {
  if (!cone.has_dual()) {
    throw InvalidInput("sector decomposition needs a cone built with its polar generators");
  }
  SectorDecomposition s;
  s.active = projection.active;
  const Vector resid = y - projection.fitted;
  s.coef = -(cone.edges.transpose() * resid);
  for (int j : projection.active) s.coef(j) = projection.edge_coef(j);
  s.complement_coef = cone.complement.transpose() * y;
  s.linear_part = project_linear(y, cone.linear);
  return s;
}

Vector reconstruct(const SectorDecomposition& s, const ConeBasis& cone) {
  Vector y = s.linear_part + cone.complement * s.complement_coef;
  std::vector<char> in_j(static_cast<std::size_t>(cone.m()), 0);
  for (int j : s.active) in_j[static_cast<std::size_t>(j)] = 1;
  for (Eigen::Index j = 0; j < cone.m(); ++j) {
    y += s.coef(j) * (in_j[static_cast<std::size_t>(j)] ? cone.edges.col(j)
                                                          : cone.polar.col(j));
  }
  return y;
}

}  // namespace shapereg
