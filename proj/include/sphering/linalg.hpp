#pragma once

#include "sphering/errors.hpp"
#include "sphering/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace sphering {

/// Relative eigenvalue floor used by every symmetric root in the library.
inline constexpr double kEigenFloor = 1e-12;

template <typename Scalar>
struct SymmetricPower {
  MatrixX<Scalar> value;
  /// Number of eigenvalues raised to the floor before the power was applied.
  Index floored = 0;
};

/// P diag(lambda^power) P^T from the symmetric eigendecomposition of A.
/// Eigenvalues below kEigenFloor * lambda_max are raised to that threshold.
template <typename Derived>
SymmetricPower<typename Derived::Scalar> symmetric_power(const Eigen::MatrixBase<Derived>& a,
                                                         typename Derived::Scalar power) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) throw ParameterError("symmetric_power: matrix is not square");
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(a.derived());
  if (eig.info() != Eigen::Success) throw ParameterError("symmetric_power: eigendecomposition failed");
  VectorX<Scalar> lambda = eig.eigenvalues();
  const Scalar top = lambda.maxCoeff();
  if (!(top > Scalar(0))) throw ParameterError("symmetric_power: matrix has no positive eigenvalue");
  const Scalar floor = Scalar(kEigenFloor) * top;
  SymmetricPower<Scalar> out;
  for (Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < floor) {
      lambda(i) = floor;
      ++out.floored;
    }
    lambda(i) = std::pow(lambda(i), power);
  }
  const auto& vecs = eig.eigenvectors();
  out.value = vecs * lambda.asDiagonal() * vecs.transpose();
  return out;
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& a, double tol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, static_cast<double>(a.cwiseAbs().maxCoeff()));
  return static_cast<double>((a - a.transpose()).cwiseAbs().maxCoeff()) <= tol * scale;
}

template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& a) {
  Eigen::SelfAdjointEigenSolver<MatrixX<typename Derived::Scalar>> eig(a.derived(), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

/// Throws ParameterError unless `a` is symmetric (within 1e-10) and positive
/// definite.
template <typename Derived>
void require_spd(const Eigen::MatrixBase<Derived>& a, const char* what) {
  if (!is_symmetric(a)) throw ParameterError(std::string(what) + " is not symmetric");
  if (!(min_eigenvalue(a) > 0)) throw ParameterError(std::string(what) + " is not positive definite");
}

/// log|A| for SPD A via Cholesky; throws ParameterError when A is not PD.
template <typename Derived>
typename Derived::Scalar log_det_spd(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  Eigen::LLT<MatrixX<Scalar>> llt(a.derived());
  if (llt.info() != Eigen::Success) throw ParameterError("log_det_spd: matrix is not positive definite");
  return Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
}

template <typename Derived>
typename Derived::Scalar entrywise_l1(const Eigen::MatrixBase<Derived>& a) {
  return a.cwiseAbs().sum();
}

/// Inverse of an SPD matrix through Cholesky, symmetrized.
template <typename Derived>
MatrixX<typename Derived::Scalar> spd_inverse(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  Eigen::LLT<MatrixX<Scalar>> llt(a.derived());
  if (llt.info() != Eigen::Success) throw ParameterError("spd_inverse: matrix is not positive definite");
  MatrixX<Scalar> inv = llt.solve(MatrixX<Scalar>::Identity(a.rows(), a.cols()));
  return (inv + inv.transpose()) / Scalar(2);
}

}  // namespace sphering
