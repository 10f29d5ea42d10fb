#pragma once

#include "sphering/errors.hpp"
#include "sphering/linalg.hpp"
#include "sphering/rng.hpp"
#include "sphering/types.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

namespace sphering {

/// Mean-restricted matrix-variate normal: X - S ~ N_{m,n}(nu, mu, Sigma, Delta),
/// i.e. E(X_ij) = nu_i + mu_j + S_ij and Cov(vec X) = Delta (x) Sigma.
struct MatrixNormalParams {
  Vector nu;
  Vector mu;
  Matrix sigma;
  Matrix delta;

  /// Zero means with the given covariances.
  static MatrixNormalParams centered(Matrix sigma, Matrix delta);

  Index rows() const { return sigma.rows(); }
  Index cols() const { return delta.rows(); }

  /// Throws ParameterError on size mismatch or non-SPD covariances.
  void validate() const;
};

/// Per-class row means. Class one is the first n1 columns.
struct SignalSpec {
  Vector psi1;
  Vector psi2;
  Index n1 = 0;

  /// The m x n signal matrix [psi1 1^T, psi2 1^T].
  Matrix matrix(Index n) const;
  /// Rows with psi1 != psi2.
  std::vector<Index> non_null_rows() const;
};

/// Draws X = M + S + Sigma^{1/2} Z Delta^{1/2}. The covariance roots are
/// computed once, so repeated draws only cost two matrix products.
class MatrixNormalSampler {
public:
  explicit MatrixNormalSampler(MatrixNormalParams params, std::optional<SignalSpec> signal = std::nullopt);

  /// Deterministic in `seed`; labels are contiguous when a signal is present.
  DataMatrix sample(std::uint64_t seed) const;
  /// Same, drawing from an explicit stream path under `seed`.
  DataMatrix sample(std::uint64_t seed, std::initializer_list<std::uint64_t> path) const;

  const MatrixNormalParams& params() const { return params_; }

private:
  DataMatrix draw(Engine& engine) const;

  MatrixNormalParams params_;
  std::optional<SignalSpec> signal_;
  Matrix sigma_root_;
  Matrix delta_root_;
  Matrix mean_;
};

DataMatrix sample_matrix_normal(const MatrixNormalParams& params, const std::optional<SignalSpec>& signal,
                                std::uint64_t seed);

/// X = M_hat + S_hat + N with the column-mean / row-mean / class-mean
/// estimator chain.
struct DecompositionFit {
  Matrix meanMatrix;
  Matrix signalMatrix;
  Matrix noise;
  Vector nuHat;
  Vector muHat;
  Vector psi1Hat;
  Vector psi2Hat;
  ClassLabels labels;
};

/// Requires labels with at least two columns per class (DegenerateError).
DecompositionFit decompose(const DataMatrix& x);

enum class CovKind { identity, ar1, block_ar1 };

/// ar1: rho^{|i-j|}; block_ar1: the same inside diagonal blocks of size
/// `block`, zero elsewhere.
template <typename Scalar = double>
MatrixX<Scalar> make_structured_cov(CovKind kind, Index dim, Scalar rho, std::optional<Index> block = std::nullopt) {
  if (dim < 1) throw ParameterError("make_structured_cov: dim must be positive");
  if (kind == CovKind::identity) return MatrixX<Scalar>::Identity(dim, dim);
  if (!(std::abs(rho) < Scalar(1))) throw ParameterError("make_structured_cov: |rho| must be < 1");
  Index width = dim;
  if (kind == CovKind::block_ar1) {
    if (!block || *block < 1 || dim % *block != 0)
      throw ParameterError("make_structured_cov: block size must divide dim");
    width = *block;
  }
  MatrixX<Scalar> cov = MatrixX<Scalar>::Zero(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) {
      if (i / width != j / width) continue;
      cov(i, j) = std::pow(rho, static_cast<Scalar>(std::abs(i - j)));
    }
  }
  return cov;
}

/// (X X^T / m, X^T X / n) for a centered m x n matrix.
template <typename Derived>
std::pair<MatrixX<typename Derived::Scalar>, MatrixX<typename Derived::Scalar>> empirical_cov_pair(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = static_cast<Scalar>(x.rows());
  const Scalar n = static_cast<Scalar>(x.cols());
  MatrixX<Scalar> row_cov = (x * x.transpose()) / m;
  MatrixX<Scalar> col_cov = (x.transpose() * x) / n;
  return {std::move(row_cov), std::move(col_cov)};
}

/// Subtracts column means then row means.
Matrix double_center(const Matrix& x);

/// Block-diagonal concatenation.
Matrix block_diagonal(const Matrix& a, const Matrix& b);

}  // namespace sphering
