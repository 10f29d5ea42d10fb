#pragma once

#include "sphering/glasso.hpp"
#include "sphering/linalg.hpp"
#include "sphering/types.hpp"

#include <cstdint>
#include <vector>

namespace sphering {

/// Penalized matrix-normal log-likelihood of the noise N (constants dropped):
///   (n/2) log|SigmaInv| + (m/2) log|DeltaInv| - 1/2 tr(SigmaInv N DeltaInv N^T)
///   - lambda m |SigmaInv|_1 - lambda n |DeltaInv|_1
/// where |A|_1 sums absolute values of all entries, diagonal included.
template <typename DN, typename DS, typename DD>
typename DN::Scalar penalized_loglik(const Eigen::MatrixBase<DN>& noise, const Eigen::MatrixBase<DS>& sigma_inv,
                                     const Eigen::MatrixBase<DD>& delta_inv, typename DN::Scalar lambda) {
  using Scalar = typename DN::Scalar;
  const Index m = noise.rows();
  const Index n = noise.cols();
  if (sigma_inv.rows() != m || sigma_inv.cols() != m || delta_inv.rows() != n || delta_inv.cols() != n)
    throw ParameterError("penalized_loglik: dimension mismatch");
  if (!(lambda >= 0)) throw ParameterError("penalized_loglik: lambda must be nonnegative");
  if (!is_symmetric(sigma_inv) || !is_symmetric(delta_inv))
    throw ParameterError("penalized_loglik: concentration matrices must be symmetric");
  const Scalar ms = static_cast<Scalar>(m);
  const Scalar ns = static_cast<Scalar>(n);
  const Scalar logdet_s = log_det_spd(sigma_inv);
  const Scalar logdet_d = log_det_spd(delta_inv);
  // tr(A N B N^T) = sum((A N) .* (N B))
  const MatrixX<Scalar> left = sigma_inv * noise;
  const MatrixX<Scalar> right = noise * delta_inv;
  const Scalar trace = left.cwiseProduct(right).sum();
  return ns / 2 * logdet_s + ms / 2 * logdet_d - trace / 2 - lambda * ms * entrywise_l1(sigma_inv) -
         lambda * ns * entrywise_l1(delta_inv);
}

struct TrcmOptions {
  /// Stop when |objective change| / (m n / 2) falls below this.
  double tol = 1e-5;
  int maxIter = 100;
  GlassoOptions glasso{};
  /// Each glasso input gets loading * trace(S) / d added to its diagonal.
  double loading = 1e-8;
};

/// Penalized estimates of the row and column covariances. The pair is
/// reported with trace(DeltaHat) = n; only the Kronecker product is
/// identified, so the scale moves into SigmaHat.
struct TrcmFit {
  Matrix SigmaHat;
  Matrix DeltaHat;
  Matrix SigmaInvHat;
  Matrix DeltaInvHat;
  double lambda = 0.0;
  int iterations = 0;
  double finalObjective = 0.0;
  /// Penalized objective after each full flip-flop iteration, evaluated at
  /// the unnormalized iterates.
  std::vector<double> objectiveTrace;
  bool deltaIsDiagonal = false;
  bool sigmaIsDiagonal = false;
  bool converged = false;

  Index rows() const { return SigmaHat.rows(); }
  Index cols() const { return DeltaHat.rows(); }

  /// Fit with Sigma and Delta supplied directly (e.g. the true covariances).
  static TrcmFit from_covariances(const Matrix& sigma, const Matrix& delta);
};

/// Alternates Sigma^{-1} <- glasso(N DeltaInv N^T / n, 2 lambda m / n) and
/// DeltaInv <- glasso(N^T SigmaInv N / m, 2 lambda n / m), starting from
/// DeltaInv = I. Returns with converged = false if maxIter is reached.
/// Throws ConvergenceError if an inner glasso solve fails.
TrcmFit fit_trcm(const Matrix& noise, double lambda, const TrcmOptions& options = {});

/// Smallest lambda for which both first-iteration glasso solves return
/// diagonal estimates.
double lambda_max(const Matrix& noise);

/// `points` log-spaced values from lambda_max / 10^decades to lambda_max.
std::vector<double> default_lambda_grid(const Matrix& noise, int points = 6, double decades = 1.0);

struct CvResult {
  double bestLambda = 0.0;
  std::vector<double> grid;
  std::vector<double> cvScores;
  std::vector<int> foldOf;  ///< fold index of each column
  Warnings warnings;
};

/// K-fold cross-validation over columns. Each held-out column is scored by
/// the Gaussian log-likelihood N(0, SigmaHat) of the training fit (held-out
/// columns treated as independent with unit scale, matching the trace(DeltaHat)
/// = n normalization). Ties break toward the larger lambda.
CvResult cross_validate_lambda(const Matrix& noise, const std::vector<double>& grid, int folds, std::uint64_t seed,
                               const TrcmOptions& options = {}, int threads = 1);

}  // namespace sphering
