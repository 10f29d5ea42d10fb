#include "sphering/fdr.hpp"

#include "sphering/sphere.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sphering {

namespace {

constexpr int kBins = 60;
constexpr int kDegree = 7;

/// Legendre polynomials P_0..P_degree at t in [-1, 1].
Eigen::RowVectorXd legendre_row(double t, int degree) {
  Eigen::RowVectorXd row(degree + 1);
  row(0) = 1.0;
  if (degree >= 1) row(1) = t;
  for (int k = 2; k <= degree; ++k)
    row(k) = ((2.0 * k - 1.0) * t * row(k - 1) - (k - 1.0) * row(k - 2)) / static_cast<double>(k);
  return row;
}

/// Poisson log-linear regression by iteratively reweighted least squares.
Vector poisson_fit(const Matrix& design, const Vector& counts) {
  Vector eta = (counts.array() + 0.5).log().matrix();
  Vector coef = Vector::Zero(design.cols());
  for (int it = 0; it < 100; ++it) {
    const Vector mu = eta.array().exp().matrix();
    const Vector sqrt_w = mu.array().sqrt().matrix();
    const Vector working = eta + (counts - mu).cwiseQuotient(mu);
    const Matrix weighted = sqrt_w.asDiagonal() * design;
    const Vector fresh = weighted.colPivHouseholderQr().solve(sqrt_w.cwiseProduct(working));
    const double change = (fresh - coef).cwiseAbs().maxCoeff();
    coef = fresh;
    eta = design * coef;
    eta = eta.cwiseMin(700.0);
    if (change < 1e-10) break;
  }
  return coef;
}

}  // namespace

Vector to_z_scores(const TestStatVector& stats) {
  if (stats.kind == StatKind::z) return stats.values;
  if (stats.df <= 0) throw ParameterError("to_z_scores: degrees of freedom must be positive");
  const boost::math::students_t tdist(static_cast<double>(stats.df));
  const boost::math::normal ndist;
  Vector z(stats.size());
  for (Index i = 0; i < stats.size(); ++i) {
    const double v = stats.values(i);
    if (std::isinf(v)) {
      z(i) = v;
      continue;
    }
    const double lower = boost::math::cdf(tdist, -std::abs(v));
    const double magnitude = lower > 0.0 ? -boost::math::quantile(ndist, lower) : std::numeric_limits<double>::infinity();
    z(i) = v < 0 ? -magnitude : magnitude;
  }
  return z;
}

double EmpiricalNull::tail_fdr(double threshold) const {
  double sum = 0.0;
  Index count = 0;
  for (Index i = 0; i < z.size(); ++i) {
    if (std::abs(z(i)) > threshold) {
      sum += localFdr(i);
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

EmpiricalNull empirical_null_fdr(const TestStatVector& stats, double pi0_window) {
  if (stats.size() < 100) throw ParameterError("empirical_null_fdr: need at least 100 statistics");
  if (!(pi0_window > 0.0 && pi0_window < 1.0)) throw ParameterError("empirical_null_fdr: window must lie in (0, 1)");

  EmpiricalNull out;
  out.z = to_z_scores(stats);
  const Index m = out.z.size();
  std::vector<double> finite;
  for (Index i = 0; i < m; ++i)
    if (std::isfinite(out.z(i))) finite.push_back(out.z(i));
  std::sort(finite.begin(), finite.end());
  if (finite.size() < 100 || finite.back() - finite.front() <= 0.0)
    throw DegenerateError("empirical_null_fdr: statistics are constant; density is degenerate");

  // Null: moments of the central window, corrected for symmetric truncation.
  const boost::math::normal ndist;
  const double lo = quantile_sorted(finite, (1.0 - pi0_window) / 2.0);
  const double hi = quantile_sorted(finite, (1.0 + pi0_window) / 2.0);
  double sum = 0.0, sum_sq = 0.0;
  Index inside = 0;
  for (double v : finite) {
    if (v < lo || v > hi) continue;
    sum += v;
    sum_sq += v * v;
    ++inside;
  }
  if (inside < 10) throw DegenerateError("empirical_null_fdr: central window too small");
  const double mean = sum / static_cast<double>(inside);
  const double var = (sum_sq - static_cast<double>(inside) * mean * mean) / static_cast<double>(inside - 1);
  const double edge = boost::math::quantile(ndist, 0.5 + pi0_window / 2.0);
  const double truncated_fraction = 1.0 - 2.0 * edge * boost::math::pdf(ndist, edge) / pi0_window;
  if (!(var > 0.0)) throw DegenerateError("empirical_null_fdr: central window has zero variance");
  out.delta = mean;
  out.sigma = std::sqrt(var / truncated_fraction);

  // pi0 from the null mass within the central half of the fitted null.
  const double half = boost::math::quantile(ndist, 0.75);
  Index near = 0;
  for (double v : finite) near += std::abs(v - out.delta) <= half * out.sigma;
  out.pi0 = std::min(1.0, static_cast<double>(near) / (0.5 * static_cast<double>(m)));

  // Mixture density: Poisson regression on a fixed histogram.
  const double zmin = finite.front();
  const double zmax = finite.back();
  const double width = (zmax - zmin) / kBins;
  Vector counts = Vector::Zero(kBins);
  for (double v : finite) {
    const int bin = std::min(kBins - 1, static_cast<int>((v - zmin) / width));
    counts(bin) += 1.0;
  }
  const double mid = 0.5 * (zmin + zmax);
  const double half_range = 0.5 * (zmax - zmin);
  Matrix design(kBins, kDegree + 1);
  for (int b = 0; b < kBins; ++b) {
    const double center = zmin + (b + 0.5) * width;
    design.row(b) = legendre_row((center - mid) / half_range, kDegree);
  }
  const Vector coef = poisson_fit(design, counts);
  const Index empty_bins = (counts.array() == 0.0).count();
  if (empty_bins > kBins / 2)
    out.warnings.push_back("empirical_null_fdr: " + std::to_string(empty_bins) + " of " + std::to_string(kBins) +
                           " histogram bins are empty; tail density is clamped");

  const double norm = static_cast<double>(finite.size()) * width;
  out.localFdr.resize(m);
  for (Index i = 0; i < m; ++i) {
    const double z = out.z(i);
    if (!std::isfinite(z)) {
      out.localFdr(i) = 0.0;
      continue;
    }
    const double t = std::clamp((z - mid) / half_range, -1.0, 1.0);
    const double mixture = std::exp(std::min(700.0, legendre_row(t, kDegree).dot(coef))) / norm;
    const double null = boost::math::pdf(ndist, (z - out.delta) / out.sigma) / out.sigma;
    const double fdr = mixture > 0.0 ? out.pi0 * null / mixture : 1.0;
    out.localFdr(i) = std::isfinite(fdr) ? std::min(1.0, fdr) : 1.0;
  }
  return out;
}

}  // namespace sphering
