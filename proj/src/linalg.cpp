#include "mlmlm/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

#include "mlmlm/errors.hpp"
#include "mlmlm/kernels.hpp"
#include "mlmlm/parallel.hpp"

namespace mlmlm {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMajor>;

Matrix to_matrix(const Eigen::MatrixXd& m) {
  Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  Eigen::Map<RowMajor>(out.data(), m.rows(), m.cols()) = m;
  return out;
}

}  // namespace

Matrix pairwise_distances(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("pairwise_distances: column mismatch (" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.cols()) + ")");
  }
  Matrix out(a.rows(), b.rows());
  const auto& k = kernels::active();
  parallel_for(a.rows(), [&](std::size_t i) {
    const double* ai = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      out(i, j) = std::sqrt(k.squared_l2(ai, b.row(j).data(), a.cols()));
    }
  });
  return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  const auto& k = kernels::active();
  parallel_for(a.rows(), [&](std::size_t i) {
    double* oi = out.row(i).data();
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double s = a(i, j);
      if (s != 0.0) k.axpy(s, b.row(j).data(), oi, b.cols());
    }
  });
  return out;
}

Matrix transpose_multiply(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("transpose_multiply: row mismatch");
  const Matrix at = a.transposed();
  const bool same = &a == &b;
  const Matrix bt_storage = same ? Matrix() : b.transposed();
  const Matrix& bt = same ? at : bt_storage;
  Matrix out(at.rows(), bt.rows());
  const auto& k = kernels::active();
  parallel_for(at.rows(), [&](std::size_t i) {
    const double* ai = at.row(i).data();
    for (std::size_t j = same ? i : 0; j < bt.rows(); ++j) {
      out(i, j) = k.dot(ai, bt.row(j).data(), at.cols());
    }
  });
  if (same) {
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
  }
  return out;
}

struct RegularizedGram::Factorization {
  std::variant<Eigen::LLT<Eigen::MatrixXd>, Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>>
      solver;
};

RegularizedGram::RegularizedGram(const Matrix& dx, double alpha) : alpha_(alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("regularizer alpha must be finite and non-negative");
  }
  if (dx.rows() == 0 || dx.cols() == 0) throw std::invalid_argument("empty design matrix");
  base_ = transpose_multiply(dx, dx);
  for (std::size_t i = 0; i < base_.rows(); ++i) base_(i, i) += alpha;

  const Eigen::MatrixXd u = ConstRowMap(base_.data(), base_.rows(), base_.cols());
  auto factor = std::make_shared<Factorization>();

  Eigen::LLT<Eigen::MatrixXd> llt(u);
  bool spd = llt.info() == Eigen::Success;
  if (spd) {
    // A successful Cholesky can still carry pivots at rounding level when U
    // is singular in exact arithmetic; treat those as not positive definite.
    const double scale = u.diagonal().cwiseAbs().maxCoeff();
    const double tol = static_cast<double>(u.rows()) * std::numeric_limits<double>::epsilon() * scale;
    const Eigen::MatrixXd l = llt.matrixL();
    const double min_pivot = l.diagonal().cwiseAbs2().minCoeff();
    spd = scale > 0.0 && min_pivot > tol;
  }
  if (spd) {
    factor->solver = std::move(llt);
  } else {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(u);
    if (cod.rank() == 0) {
      throw NumericalError("singular system: the regularized gram matrix has rank 0");
    }
    factor->solver = std::move(cod);
  }
  factor_ = std::move(factor);
}

bool RegularizedGram::used_fallback() const { return factor_->solver.index() == 1; }

Matrix RegularizedGram::solve(const Matrix& rhs) const {
  if (rhs.rows() != dim()) throw std::invalid_argument("RegularizedGram::solve: row mismatch");
  const Eigen::MatrixXd b = ConstRowMap(rhs.data(), rhs.rows(), rhs.cols());
  return std::visit([&](const auto& s) { return to_matrix(s.solve(b)); }, factor_->solver);
}

Vector RegularizedGram::solve(std::span<const double> rhs) const {
  if (rhs.size() != dim()) throw std::invalid_argument("RegularizedGram::solve: size mismatch");
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size());
  const Eigen::VectorXd x = std::visit([&](const auto& s) -> Eigen::VectorXd { return s.solve(b); },
                                       factor_->solver);
  return Vector(x.data(), x.data() + x.size());
}

Matrix solve_regularized_ls(const Matrix& dx, const Matrix& dy, double alpha) {
  if (dx.rows() != dy.rows()) throw std::invalid_argument("solve_regularized_ls: row mismatch");
  const RegularizedGram gram(dx, alpha);
  return gram.solve(transpose_multiply(dx, dy));
}

Vector hat_matrix_row(const RegularizedGram& gram, const Matrix& dx, std::size_t i) {
  if (i >= dx.rows()) throw std::out_of_range("hat_matrix_row: row index out of range");
  if (dx.cols() != gram.dim()) throw std::invalid_argument("hat_matrix_row: gram/design mismatch");
  const Vector v = gram.solve(dx.row(i));
  Vector out(dx.rows());
  const auto& k = kernels::active();
  for (std::size_t n = 0; n < dx.rows(); ++n) out[n] = k.dot(dx.row(n).data(), v.data(), v.size());
  return out;
}

Vector leverages(const RegularizedGram& gram, const Matrix& dx) {
  if (dx.cols() != gram.dim()) throw std::invalid_argument("leverages: gram/design mismatch");
  const Matrix g = gram.solve(dx.transposed()).transposed();  // N x K, row i = U⁻¹ dxᵢ
  Vector out(dx.rows());
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < dx.rows(); ++i) out[i] = k.dot(dx.row(i).data(), g.row(i).data(), dx.cols());
  return out;
}

}  // namespace mlmlm
