#pragma once

#include <cstddef>
#include <memory>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "tasep/correlations.hpp"
#include "tasep/lattice.hpp"

namespace tasep {

/// Sparse constraint matrix C and right-hand side r of the consistency
/// equations C x = r for the given layout.
Eigen::SparseMatrix<double> consistency_matrix(const IndexLayout& layout);
Eigen::VectorXd consistency_rhs(const IndexLayout& layout);

/// Dimension of the null space of C, from the numerical rank of a sparse
/// rank-revealing QR factorisation of C^T.
std::size_t consistency_null_dimension(const IndexLayout& layout);

/// Orthonormal basis (columns) of the null space of C: the tangent space of
/// the consistent affine space. Throws std::logic_error if its dimension
/// disagrees with consistent_space_dimension(n, max_order).
struct ConsistencyBasis {
  IndexLayout layout;
  Eigen::MatrixXd basis;

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(basis.cols()); }
};

ConsistencyBasis consistency_basis(const IndexLayout& layout);

/// Process-wide cache keyed by (n, max_order); safe to call concurrently.
std::shared_ptr<const ConsistencyBasis> shared_consistency_basis(const IndexLayout& layout);

}  // namespace tasep
