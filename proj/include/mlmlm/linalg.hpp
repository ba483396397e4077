#pragma once

#include <cstddef>
#include <memory>

#include "mlmlm/matrix.hpp"

namespace mlmlm {

/// Euclidean distances between the rows of `a` (N x M) and `b` (K x M).
Matrix pairwise_distances(const Matrix& a, const Matrix& b);

/// a (N x K) times b (K x C).
Matrix multiply(const Matrix& a, const Matrix& b);

/// Transpose of a (N x K) times b (N x C), giving K x C.
Matrix transpose_multiply(const Matrix& a, const Matrix& b);

/// U = DxᵀDx + αI together with its factorization.
///
/// The symmetric positive-definite path uses a Cholesky factor. When U is
/// not numerically positive definite (α = 0 with a rank-deficient Dx) the
/// gram falls back to a complete orthogonal decomposition, whose solve gives
/// the minimum-norm solution U⁺b.
class RegularizedGram {
 public:
  RegularizedGram(const Matrix& dx, double alpha);

  const Matrix& base() const { return base_; }
  double alpha() const { return alpha_; }
  std::size_t dim() const { return base_.rows(); }
  bool used_fallback() const;

  /// U⁻¹ rhs for rhs of shape K x C.
  Matrix solve(const Matrix& rhs) const;
  Vector solve(std::span<const double> rhs) const;

 private:
  struct Factorization;
  Matrix base_;
  double alpha_ = 0.0;
  std::shared_ptr<const Factorization> factor_;
};

/// Minimizer of ‖DxB − Dy‖²_F + α‖B‖²_F.
Matrix solve_regularized_ls(const Matrix& dx, const Matrix& dy, double alpha);

/// Row i of the hat matrix H = Dx U⁻¹ Dxᵀ, computed without forming H.
Vector hat_matrix_row(const RegularizedGram& gram, const Matrix& dx, std::size_t i);

/// Diagonal of H (the leverages), one solve with N right-hand sides.
Vector leverages(const RegularizedGram& gram, const Matrix& dx);

}  // namespace mlmlm
