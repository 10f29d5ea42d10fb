#pragma once

#include "sphering/errors.hpp"
#include "sphering/types.hpp"

#include <cstdint>
#include <string>

namespace sphering {

enum class StatKind { z, t, t_sphered, t_central_matched };

std::string to_string(StatKind kind);
StatKind stat_kind_from_string(const std::string& name);

/// Per-row two-sample statistics.
///
/// A row whose pooled standard deviation is zero is flagged. Its value is
/// +inf or -inf with the sign of the mean difference; a zero difference
/// (0/0) is stored as +inf. Flagged rows keep their index so alignment with
/// ground truth survives the whole pipeline.
struct TestStatVector {
  Vector values;
  std::vector<std::uint8_t> flagged;
  StatKind kind = StatKind::t;
  int df = 0;
  double c_n = 0.0;

  Index size() const { return values.size(); }
  Index flagged_count() const;
};

/// Pooled two-sample T (divisor n1 + n2 - 2) for every row.
TestStatVector row_t_stats(const Matrix& x, const ClassLabels& labels);
TestStatVector row_t_stats(const DataMatrix& x);

/// Two-sample Z with known per-row standard deviation sigma.
TestStatVector row_z_stats(const DataMatrix& x, const Vector& sigma);

/// Per-row mean difference x1bar - x2bar.
Vector mean_difference(const Matrix& x, const ClassLabels& labels);

/// Contrast weights: 1/n1 on class one, -1/n2 on class two.
Vector contrast_weights(const ClassLabels& labels);

/// w^T Delta w: the variance factor of the mean difference under column
/// covariance Delta. Var(Z) = eta / c_n.
template <typename Derived>
typename Derived::Scalar eta(const Eigen::MatrixBase<Derived>& delta, const ClassLabels& labels) {
  using Scalar = typename Derived::Scalar;
  if (delta.rows() != delta.cols() || delta.rows() != labels.n())
    throw ParameterError("eta: Delta dimension does not match the class labels");
  const VectorX<Scalar> w = contrast_weights(labels).template cast<Scalar>();
  return w.dot(delta * w);
}

/// eta1 + eta2 for block-diagonal Delta with one block per class;
/// eta_k = sum(Delta_k) / n_k^2.
template <typename D1, typename D2>
typename D1::Scalar eta_blocked(const Eigen::MatrixBase<D1>& delta1, const Eigen::MatrixBase<D2>& delta2) {
  using Scalar = typename D1::Scalar;
  if (delta1.rows() != delta1.cols() || delta2.rows() != delta2.cols())
    throw ParameterError("eta_blocked: blocks must be square");
  const Scalar n1 = static_cast<Scalar>(delta1.rows());
  const Scalar n2 = static_cast<Scalar>(delta2.rows());
  return delta1.sum() / (n1 * n1) + delta2.sum() / (n2 * n2);
}

struct VarianceEstimate {
  double variance = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo variance of the pooled T for null rows x ~ N_{1,n}(0, 0, 1, Delta).
VarianceEstimate t_null_variance_mc(const Matrix& delta, const ClassLabels& labels, Index reps, std::uint64_t seed);

/// Reference distribution for two-sided p-values: t_df of `stats.df`,
/// optionally scaled so that p = 2 (1 - F(|T| / scale)).
struct Reference {
  double scale = 1.0;

  static Reference t_df() { return {}; }
  static Reference scaled_t(double scale) { return {scale}; }
};

struct PValues {
  Vector p;
  Warnings warnings;
};

/// Two-sided p-values. Z statistics use the standard normal, t kinds the
/// central t with stats.df degrees of freedom. Flagged rows map to p = 0.
PValues p_values(const TestStatVector& stats, Reference reference = Reference::t_df());

/// Central t cumulative distribution function.
double t_cdf(double x, double df);
/// Central t quantile.
double t_quantile(double prob, double df);

/// Sample variance (divisor n - 1).
double sample_variance(const Vector& v);

}  // namespace sphering
