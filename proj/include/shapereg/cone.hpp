#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shapereg/spline.hpp"
#include "shapereg/types.hpp"

namespace shapereg {

/// Generators of the constraint set C = {v + sum b_j delta_j : b_j >= 0,
/// v in span(V)}.
///
/// `edges` holds unit-norm delta_j orthogonal to span(V). When the edges
/// are linearly independent the dual quantities are populated as well:
/// `polar` holds gamma_j with <gamma_j, delta_i> = -[i == j], and
/// `complement` an orthonormal basis of the orthogonal complement of
/// span(edges, V).
struct ConeBasis {
  Matrix edges;
  Matrix linear;
  Matrix polar;
  Matrix complement;
  /// Norm of sigma_j - P_V sigma_j before unit scaling, per edge.
  Vector edge_scale;
  std::vector<std::string> warnings;

  Eigen::Index n() const { return edges.rows() > 0 ? edges.rows() : linear.rows(); }
  Eigen::Index m() const { return edges.cols(); }
  Eigen::Index r() const { return linear.cols(); }
  bool has_dual() const { return polar.cols() == edges.cols(); }
};

/// span(1) for monotone and mixed shapes, span(1, x) for convex/concave.
Matrix linear_space(Shape shape, std::span<const double> x);

/// delta_j = sigma_j - P_V sigma_j, scaled to unit norm. Optionally reports
/// the pre-scaling norms.
Matrix edge_vectors(const Matrix& sigma, const Matrix& linear,
                    Vector* scales = nullptr);

/// Columns gamma_j of -Delta (Delta' Delta)^{-1}.
Matrix polar_generators(const Matrix& edges);

/// Orthonormal basis of the complement of span(edges, linear). Empty when
/// m + r >= n.
Matrix complement_basis(const Matrix& edges, const Matrix& linear);

/// Assembles a cone from raw generator columns and the linear space.
ConeBasis make_cone(const Matrix& sigma, const Matrix& linear,
                    bool with_dual = true);

/// Cone for a shape-restricted spline basis.
ConeBasis spline_cone(const BasisMatrix& basis, bool with_dual = true);

/// Unsmoothed shape cone in data space: step edges for monotone shapes,
/// hinge edges for curvature and mixed shapes.
ConeBasis classical_cone(Shape shape, std::span<const double> x,
                         bool with_dual = true);

/// (n-1) x n difference matrix, A(i,i) = -1, A(i,i+1) = 1.
struct ConstraintMatrix {
  Matrix a;
};

ConstraintMatrix monotone_constraint_matrix(int n);

struct SubconeOptions {
  std::uint64_t max_subsets = 20'000'000;
  double feasibility_tol = 1e-10;
  double dedupe_tol = 1e-8;
};

/// Extreme rays of {B c : A B c >= 0} modulo its lineality space.
struct SubconeEdges {
  /// Unit-norm data-space edges B c, one per column.
  Matrix data;
  /// Coefficient vectors c (columns), scaled consistently with `data`.
  Matrix coeffs;
  /// Dimension of the row space of A B.
  int row_rank = 0;
  std::uint64_t subsets_examined = 0;
};

/// Enumerates every (q-1)-subset of rows of A B (lexicographic order); the
/// direction orthogonal to a linearly independent subset is an edge when it
/// (or its negation) satisfies all constraints.
SubconeEdges subcone_edges(const Matrix& basis, const ConstraintMatrix& a,
                           const SubconeOptions& options = {});

}  // namespace shapereg
