#include "cab/numerics.hpp"

#include <cmath>
#include <string>

#include "cab/errors.hpp"

namespace cab {

namespace {

void check_square_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("PsdMatrix: matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected square");
  }
  if (m.size() > 0 && !((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12)) {
    throw ParameterError("PsdMatrix: matrix is not symmetric");
  }
}

}  // namespace

PsdMatrix::PsdMatrix(Index dim, double diagonal) : m_(Matrix::Identity(dim, dim) * diagonal) {}

PsdMatrix::PsdMatrix(Matrix m) : m_(std::move(m)) { check_square_symmetric(m_); }

void PsdMatrix::rank_one_add(const Eigen::Ref<const Vector>& x, double weight) {
  if (x.size() != dim()) {
    throw DimensionError("rank_one_add: vector has dimension " + std::to_string(x.size()) +
                         ", matrix has " + std::to_string(dim()));
  }
  m_.noalias() += weight * x * x.transpose();
  llt_.reset();
}

void PsdMatrix::assign(Matrix m) {
  check_square_symmetric(m);
  m_ = std::move(m);
  llt_.reset();
}

void PsdMatrix::factorize() const {
  if (llt_) return;
  Eigen::LLT<Matrix> llt(m_);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("Cholesky factorization failed: matrix is not positive definite");
  }
  llt_.emplace(std::move(llt));
}

const Eigen::LLT<Matrix>& PsdMatrix::cholesky() const {
  factorize();
  return *llt_;
}

double mahalanobis_inv_norm(const PsdMatrix& v, const Eigen::Ref<const Vector>& x) {
  if (x.size() != v.dim()) {
    throw DimensionError("mahalanobis_inv_norm: vector has dimension " +
                         std::to_string(x.size()) + ", matrix has " + std::to_string(v.dim()));
  }
  // x^T V^{-1} x = |L^{-1} x|^2.
  const Vector y = v.cholesky().matrixL().solve(x);
  return y.norm();
}

Vector solve_factor_transpose(const PsdMatrix& v, const Eigen::Ref<const Vector>& z) {
  if (z.size() != v.dim()) {
    throw DimensionError("solve_factor_transpose: dimension mismatch");
  }
  return v.cholesky().matrixU().solve(z);
}

Vector standard_normal_vector(Index dim, Rng& rng) {
  Vector z(dim);
  for (Index k = 0; k < dim; ++k) z[k] = standard_normal(rng);
  return z;
}

Vector uniform_on_sphere(Index dim, Rng& rng) {
  for (;;) {
    Vector z = standard_normal_vector(dim, rng);
    const double n = z.norm();
    if (n > 0.0) return z / n;
  }
}

Vector sample_scaled_inverse_gaussian(const PsdMatrix& h, double scale, Rng& rng) {
  if (!(scale >= 0.0)) throw ParameterError("sample_scaled_inverse_gaussian: scale must be >= 0");
  const Vector z = standard_normal_vector(h.dim(), rng);
  if (scale == 0.0) return Vector::Zero(h.dim());
  return scale * solve_factor_transpose(h, z);
}

}  // namespace cab
