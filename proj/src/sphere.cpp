#include "sphering/sphere.hpp"

#include "sphering/linalg.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sphering {

namespace {

InverseRoot root_with_warning(const Matrix& a, double power, const char* what) {
  if (!is_symmetric(a)) throw ParameterError(std::string(what) + " is not symmetric");
  auto root = symmetric_power(a, power);
  InverseRoot out{std::move(root.value), {}};
  if (root.floored > 0)
    out.warnings.push_back(std::string(what) + ": " + std::to_string(root.floored) +
                           " eigenvalue(s) floored at 1e-12 * lambda_max (ill-conditioned)");
  return out;
}

}  // namespace

InverseRoot sym_inv_sqrt(const Matrix& a) { return root_with_warning(a, -0.5, "sym_inv_sqrt"); }

void center_within_classes(Matrix& x, const ClassLabels& labels) {
  for (const auto* set : {&labels.class1, &labels.class2}) {
    if (set->empty()) continue;
    Vector mean = Vector::Zero(x.rows());
    for (Index j : *set) mean += x.col(j);
    mean /= static_cast<double>(set->size());
    for (Index j : *set) x.col(j) -= mean;
  }
}

SpheredData sphere(const DataMatrix& x, const TrcmFit& fit) {
  if (fit.rows() != x.rows() || fit.cols() != x.cols())
    throw ParameterError("sphere: fit is " + std::to_string(fit.rows()) + " x " + std::to_string(fit.cols()) +
                         " but data is " + std::to_string(x.rows()) + " x " + std::to_string(x.cols()));
  const DecompositionFit dec = decompose(x);

  // Sigma^{-1/2} is the symmetric root of the concentration matrix.
  InverseRoot row_root = root_with_warning(fit.SigmaInvHat, 0.5, "SigmaHat^{-1/2}");
  InverseRoot col_root = root_with_warning(fit.DeltaInvHat, 0.5, "DeltaHat^{-1/2}");

  SpheredData out;
  out.labels = dec.labels;
  out.noise = row_root.value * dec.noise * col_root.value;
  center_within_classes(out.noise, out.labels);
  out.signalMatrix = dec.signalMatrix;
  out.values = out.signalMatrix + out.noise;
  out.fit = fit;
  out.warnings = std::move(row_root.warnings);
  out.warnings.insert(out.warnings.end(), col_root.warnings.begin(), col_root.warnings.end());
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw ParameterError("quantile of empty data");
  if (!(prob >= 0.0 && prob <= 1.0)) throw ParameterError("quantile probability outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double t_central_variance(double df, double pi0) {
  if (!(pi0 > 0.0 && pi0 <= 1.0)) throw ParameterError("t_central_variance: pi0 must lie in (0, 1]");
  if (!(df > 2.0)) throw ParameterError("t_central_variance: df must exceed 2");
  if (pi0 == 1.0) return df / (df - 2.0);
  const boost::math::students_t dist(df);
  const double edge = boost::math::quantile(dist, 0.5 + pi0 / 2.0);
  auto integrand = [&](double x) { return x * x * boost::math::pdf(dist, x); };
  double error = 0.0;
  const double second_moment =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -edge, edge, 20, 1e-12, &error);
  return second_moment / pi0;
}

CentralMatchResult central_match(const TestStatVector& stats, double pi0) {
  if (!(pi0 > 0.0 && pi0 <= 1.0)) throw ParameterError("central_match: pi0 must lie in (0, 1]");
  if (stats.size() < 20) throw ParameterError("central_match: need at least 20 statistics");
  std::vector<double> sorted;
  sorted.reserve(static_cast<std::size_t>(stats.size()));
  for (Index i = 0; i < stats.size(); ++i)
    if (std::isfinite(stats.values(i))) sorted.push_back(stats.values(i));
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty()) throw DegenerateError("central_match: no finite statistics");

  const double lo = quantile_sorted(sorted, (1.0 - pi0) / 2.0);
  const double hi = quantile_sorted(sorted, (1.0 + pi0) / 2.0);
  std::vector<double> window;
  for (double v : sorted)
    if (v >= lo && v <= hi) window.push_back(v);
  if (window.size() < 10) throw DegenerateError("central_match: fewer than 10 statistics in the central window");

  const Vector w = Eigen::Map<const Vector>(window.data(), static_cast<Index>(window.size()));
  const double observed = std::sqrt(sample_variance(w));
  if (!(observed > 0.0)) throw DegenerateError("central_match: central window has zero variance");

  const double df = stats.df > 0 ? static_cast<double>(stats.df) : 0.0;
  CentralMatchResult out;
  out.pi0 = pi0;
  out.windowCount = static_cast<Index>(window.size());
  out.sigmaCentralObserved = observed;
  out.sigmaCentralReference = std::sqrt(t_central_variance(df, pi0));
  out.scaledStats = stats;
  out.scaledStats.kind = StatKind::t_central_matched;
  out.scaledStats.values = stats.values * (out.sigmaCentralReference / observed);
  return out;
}

std::vector<Index> rank_by_magnitude(const Vector& stats) {
  std::vector<Index> order(static_cast<std::size_t>(stats.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(stats(a)) > std::abs(stats(b)); });
  return order;
}

FilteredRows filter_rows(const DataMatrix& x, Index keep) {
  if (keep < 2) throw ParameterError("filter_rows: keep must be at least 2");
  if (keep > x.rows()) throw ParameterError("filter_rows: keep exceeds the number of rows");
  const TestStatVector t = row_t_stats(x);
  FilteredRows out;
  out.ranking = rank_by_magnitude(t.values);
  out.indexMap.assign(out.ranking.begin(), out.ranking.begin() + keep);
  std::sort(out.indexMap.begin(), out.indexMap.end());
  out.data = DataMatrix(x.values()(out.indexMap, Eigen::all), x.labels());
  return out;
}

}  // namespace sphering
