#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library except for plain types.

#include "sphering/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using sphering::Index;
using sphering::Matrix;
using sphering::Vector;

/// Composite Simpson rule with `intervals` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals = 20000) {
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

inline double t_density(double x, double df) {
  const double c = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  return std::exp(c - (df + 1) / 2 * std::log1p(x * x / df));
}

/// Two-sided tail P(|T| > t) by integrating the density over [0, t].
inline double t_two_sided(double t, double df) {
  return 1.0 - 2.0 * simpson([df](double x) { return t_density(x, df); }, 0.0, std::abs(t));
}

/// Kolmogorov-Smirnov distance of a sample to a continuous cdf.
inline double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// Asymptotic KS critical value at level 0.01.
inline double ks_critical_01(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

/// Graphical lasso through projected gradient ascent on the dual
///   max log det(S + U)  s.t. |U_ij| <= rho,
/// returning Theta = (S + U)^{-1}.
inline Matrix glasso_dual(const Matrix& s, double rho, double tol = 1e-12, int maxIter = 200000) {
  const Index d = s.rows();
  Matrix u = Matrix::Zero(d, d);
  u.diagonal().setConstant(rho);
  auto clip = [rho](Matrix v) { return v.cwiseMax(-rho).cwiseMin(rho); };
  auto value = [&](const Matrix& uu) {
    Eigen::LLT<Matrix> llt(s + uu);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  };
  double step = 1.0;
  double f = value(u);
  for (int it = 0; it < maxIter; ++it) {
    const Matrix grad = (s + u).inverse();
    Matrix next = clip(u + step * grad);
    double fn = value(next);
    while (!(fn >= f) && step > 1e-14) {
      step *= 0.5;
      next = clip(u + step * grad);
      fn = value(next);
    }
    const double moved = (next - u).cwiseAbs().maxCoeff();
    u = next;
    f = fn;
    step = std::min(step * 2.0, 1e3);
    if (moved < tol) break;
  }
  Matrix theta = (s + u).inverse();
  return 0.5 * (theta + theta.transpose());
}

inline double glasso_primal(const Matrix& s, const Matrix& theta, double rho) {
  Eigen::LLT<Matrix> llt(theta);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return logdet - (s * theta).trace() - rho * theta.cwiseAbs().sum();
}

inline Matrix random_spd(Index d, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> z;
  Matrix a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = z(rng);
  Matrix s = a * a.transpose() / static_cast<double>(d);
  s.diagonal().array() += ridge;
  return s;
}

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = z(rng);
  return a;
}

/// Welch-free pooled two-sample t by direct summation.
inline double pooled_t(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / v.size();
  };
  const double ma = mean(a), mb = mean(b);
  double ss = 0;
  for (double x : a) ss += (x - ma) * (x - ma);
  for (double x : b) ss += (x - mb) * (x - mb);
  const double na = a.size(), nb = b.size();
  const double s2 = ss / (na + nb - 2);
  return (ma - mb) / std::sqrt(s2 * (1 / na + 1 / nb));
}

}  // namespace oracle

namespace oracle {

/// Largest |mean correlation| over lags 1..maxLag, where the mean runs over
/// all pairs (i, i + lag) of the correlation matrix of the rows of `x`.
inline double max_lag_mean_correlation(const Matrix& x, Index maxLag) {
  Matrix c = x.colwise() - x.rowwise().mean();
  const Vector norms = c.rowwise().norm();
  for (Index i = 0; i < c.rows(); ++i) c.row(i) /= norms(i);
  const Matrix r = c * c.transpose();
  double worst = 0;
  for (Index lag = 1; lag <= maxLag; ++lag) {
    double s = 0;
    for (Index i = 0; i + lag < r.rows(); ++i) s += r(i, i + lag);
    worst = std::max(worst, std::abs(s / static_cast<double>(r.rows() - lag)));
  }
  return worst;
}

/// Largest absolute off-diagonal correlation between rows of `x`.
inline double max_offdiag_correlation(const Matrix& x) {
  Matrix c = x.colwise() - x.rowwise().mean();
  const Vector norms = c.rowwise().norm();
  for (Index i = 0; i < c.rows(); ++i) c.row(i) /= norms(i);
  Matrix r = c * c.transpose();
  r.diagonal().setZero();
  return r.cwiseAbs().maxCoeff();
}

}  // namespace oracle
