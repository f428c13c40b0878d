#pragma once

#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "cab/rng.hpp"

namespace cab {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Symmetric positive-definite matrix with a lazily computed Cholesky factor.
///
/// Holds the design matrix V_t = lambda0 I + sum x x^T and the Laplace
/// precision H_t. Any mutation drops the cached factor. The cache is filled
/// on first use; call factorize() before sharing an instance across threads.
class PsdMatrix {
 public:
  PsdMatrix() = default;

  /// `diagonal` * I of size `dim`.
  explicit PsdMatrix(Index dim, double diagonal = 0.0);

  /// Takes ownership of `m`; throws DimensionError if it is not square and
  /// ParameterError if it is not symmetric to 1e-12.
  explicit PsdMatrix(Matrix m);

  Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }

  /// V += weight * x x^T.
  void rank_one_add(const Eigen::Ref<const Vector>& x, double weight = 1.0);

  /// Replaces the contents; same checks as the matrix constructor.
  void assign(Matrix m);

  /// Factorizes now if needed. Throws NumericalError when not PD.
  void factorize() const;

  /// Lower-triangular L with L L^T = V.
  const Eigen::LLT<Matrix>& cholesky() const;

  bool has_factor() const noexcept { return llt_.has_value(); }

 private:
  Matrix m_;
  mutable std::optional<Eigen::LLT<Matrix>> llt_;
};

/// sqrt(x^T V^{-1} x) through a triangular solve with the Cholesky factor.
double mahalanobis_inv_norm(const PsdMatrix& v, const Eigen::Ref<const Vector>& x);

/// Returns L^{-T} z for L L^T = V; if z ~ N(0, I) the result is N(0, V^{-1}).
Vector solve_factor_transpose(const PsdMatrix& v, const Eigen::Ref<const Vector>& z);

Vector standard_normal_vector(Index dim, Rng& rng);

/// Uniform draw from the unit sphere S^{dim-1}.
Vector uniform_on_sphere(Index dim, Rng& rng);

/// Draws `scale` * L^{-T} z, which is N(0, scale^2 H^{-1}). Always consumes
/// exactly `dim` normals from `rng`, including when scale is zero.
Vector sample_scaled_inverse_gaussian(const PsdMatrix& h, double scale, Rng& rng);

}  // namespace cab
