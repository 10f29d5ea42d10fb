#pragma once

#include "sphering/core.hpp"
#include "sphering/stats.hpp"
#include "sphering/trcm.hpp"
#include "sphering/types.hpp"

#include <utility>

namespace sphering {

struct InverseRoot {
  Matrix value;
  Warnings warnings;
};

/// P Lambda^{-1/2} P^T of an SPD matrix. Eigenvalues below 1e-12 lambda_max
/// are floored and a conditioning warning is recorded.
InverseRoot sym_inv_sqrt(const Matrix& a);

/// Sphered data X~ = S_hat + N~ where N~ = SigmaHat^{-1/2} N DeltaHat^{-1/2}
/// re-centered within each class of every row.
///
/// The re-centering keeps the per-row class contrast of X~ equal to
/// psi1Hat - psi2Hat of the original decomposition; it only removes the two
/// class-mean directions that DeltaHat^{-1/2} mixes back into the noise.
struct SpheredData {
  Matrix values;
  Matrix signalMatrix;
  Matrix noise;
  ClassLabels labels;
  TrcmFit fit;
  Warnings warnings;

  DataMatrix data() const { return DataMatrix(values, labels); }
};

/// Throws ParameterError when the fit dimensions do not match x.
SpheredData sphere(const DataMatrix& x, const TrcmFit& fit);

/// Removes per-row class means in place.
void center_within_classes(Matrix& x, const ClassLabels& labels);

/// Type-7 (linear interpolation) sample quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double prob);

/// Variance of t_df restricted to its central mass `pi0`, i.e. to
/// [q_{(1-pi0)/2}, q_{(1+pi0)/2}], by adaptive Gauss-Kronrod quadrature.
double t_central_variance(double df, double pi0);

struct CentralMatchResult {
  TestStatVector scaledStats;
  double pi0 = 0.8;
  double sigmaCentralObserved = 0.0;
  double sigmaCentralReference = 0.0;
  Index windowCount = 0;

  double scale_factor() const { return sigmaCentralReference / sigmaCentralObserved; }
};

/// Rescales statistics so the variance of their central pi0 window matches
/// that of t_df. Requires 0 < pi0 <= 1, m >= 20 and at least ten statistics
/// inside the (closed) window.
CentralMatchResult central_match(const TestStatVector& stats, double pi0 = 0.8);

/// Ranking of rows by decreasing |stat|, ties broken by row index.
std::vector<Index> rank_by_magnitude(const Vector& stats);

struct FilteredRows {
  DataMatrix data;
  /// indexMap[i] = original row of filtered row i; increasing.
  std::vector<Index> indexMap;
  /// All original rows by decreasing un-sphered |T|.
  std::vector<Index> ranking;
};

/// Keeps the `keep` rows with the largest un-sphered |T|, preserving their
/// original order.
FilteredRows filter_rows(const DataMatrix& x, Index keep);

}  // namespace sphering
