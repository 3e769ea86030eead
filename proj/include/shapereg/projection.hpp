#pragma once

#include <vector>

#include "shapereg/cone.hpp"
#include "shapereg/types.hpp"

namespace shapereg {

/// Projection of y onto C = span(V) + cone(edges).
struct ProjectionResult {
  Vector fitted;
  /// Active edge indices J, ascending.
  std::vector<int> active;
  /// b_j for every edge; zero off the active set.
  Vector edge_coef;
  Vector linear_coef;
  double sse = 0.0;
  int iterations = 0;

  /// |J| + dim V.
  int effective_dim() const {
    return static_cast<int>(active.size() + linear_coef.size());
  }
};

struct ProjectionOptions {
  /// Relative tolerance; thresholds scale with max(||y||, 1e-300).
  double tol = 1e-10;
  /// Zero selects 50 * (m + 1).
  int max_iterations = 0;
};

/// Hinge algorithm. Starts from the projection onto V, adds the edge with
/// the largest positive inner product with the residual, and after each
/// addition drops the most negative face coefficient until all are
/// nonnegative. Face fits use a QR factorization updated on add and
/// downdated with Givens rotations on removal. Should an active set repeat
/// (only possible with linearly dependent edges, as in the cubic subcone),
/// the remaining steps follow Lawson-Hanson, which cannot cycle.
ProjectionResult project(const Vector& y, const ConeBasis& cone,
                         const ProjectionOptions& options = {});

/// Enumerates all 2^m faces and returns the one whose least-squares fit has
/// positive edge coefficients and satisfies the dual inequalities.
/// `qualifying` receives the number of faces that pass both checks.
ProjectionResult exhaustive_project(const Vector& y, const ConeBasis& cone,
                                    int* qualifying = nullptr,
                                    int max_edges = 20);

/// Generalized least squares through the inverse Cholesky factor of `cov`;
/// the returned SSE is in the transformed metric and the coefficients refer
/// to the original cone's edges.
ProjectionResult weighted_project(const Vector& y, const ConeBasis& cone,
                                  const Matrix& cov,
                                  const ProjectionOptions& options = {});

/// Diagonal covariance given as per-observation variances.
ProjectionResult weighted_project_diag(const Vector& y, const ConeBasis& cone,
                                       const Vector& variances,
                                       const ProjectionOptions& options = {});

/// y = v + sum_{J} b_j delta_j + sum_{not J} b_j gamma_j + sum c_j w_j.
struct SectorDecomposition {
  std::vector<int> active;
  /// Length m: delta coefficients on J, gamma coefficients off J.
  Vector coef;
  Vector complement_coef;
  Vector linear_part;
};

SectorDecomposition sector_decompose(const Vector& y, const ConeBasis& cone);
SectorDecomposition sector_decompose(const Vector& y, const ConeBasis& cone,
                                     const ProjectionResult& projection);
Vector reconstruct(const SectorDecomposition& s, const ConeBasis& cone);

/// Least-squares projection onto span(V).
Vector project_linear(const Vector& y, const Matrix& linear);

}  // namespace shapereg
