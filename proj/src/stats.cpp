#include "sphering/stats.hpp"

#include "sphering/linalg.hpp"
#include "sphering/rng.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <random>

namespace sphering {

std::string to_string(StatKind kind) {
  switch (kind) {
    case StatKind::z: return "z";
    case StatKind::t: return "t";
    case StatKind::t_sphered: return "t_sphered";
    case StatKind::t_central_matched: return "t_central_matched";
  }
  return "t";
}

StatKind stat_kind_from_string(const std::string& name) {
  if (name == "z") return StatKind::z;
  if (name == "t") return StatKind::t;
  if (name == "t_sphered") return StatKind::t_sphered;
  if (name == "t_central_matched") return StatKind::t_central_matched;
  throw ParameterError("unknown statistic kind '" + name + "'");
}

Index TestStatVector::flagged_count() const {
  Index count = 0;
  for (auto f : flagged) count += f != 0;
  return count;
}

Vector contrast_weights(const ClassLabels& labels) {
  Vector w(labels.n());
  for (Index j : labels.class1) w(j) = 1.0 / static_cast<double>(labels.n1());
  for (Index j : labels.class2) w(j) = -1.0 / static_cast<double>(labels.n2());
  return w;
}

Vector mean_difference(const Matrix& x, const ClassLabels& labels) {
  if (x.cols() != labels.n()) throw ParameterError("mean_difference: labels do not match columns");
  return x * contrast_weights(labels);
}

namespace {

double flagged_value(double numerator) {
  return numerator < 0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
}

}  // namespace

TestStatVector row_t_stats(const Matrix& x, const ClassLabels& labels) {
  labels.validate(x.cols());
  labels.require_pooled_variance();
  const Index m = x.rows();
  const double n1 = static_cast<double>(labels.n1());
  const double n2 = static_cast<double>(labels.n2());

  TestStatVector out;
  out.kind = StatKind::t;
  out.df = static_cast<int>(labels.n() - 2);
  out.c_n = labels.c_n();
  out.values.resize(m);
  out.flagged.assign(static_cast<std::size_t>(m), 0);

  for (Index i = 0; i < m; ++i) {
    double mean1 = 0.0, mean2 = 0.0, scale = 0.0;
    for (Index j : labels.class1) mean1 += x(i, j);
    for (Index j : labels.class2) mean2 += x(i, j);
    mean1 /= n1;
    mean2 /= n2;
    double ss = 0.0;
    for (Index j : labels.class1) {
      ss += (x(i, j) - mean1) * (x(i, j) - mean1);
      scale = std::max(scale, std::abs(x(i, j)));
    }
    for (Index j : labels.class2) {
      ss += (x(i, j) - mean2) * (x(i, j) - mean2);
      scale = std::max(scale, std::abs(x(i, j)));
    }
    const double s = std::sqrt(ss / (n1 + n2 - 2.0));
    const double diff = mean1 - mean2;
    if (!(s > 1e-14 * scale) || s == 0.0) {
      out.values(i) = flagged_value(diff);
      out.flagged[static_cast<std::size_t>(i)] = 1;
    } else {
      out.values(i) = diff / (s * std::sqrt(out.c_n));
    }
  }
  return out;
}

TestStatVector row_t_stats(const DataMatrix& x) { return row_t_stats(x.values(), x.labels()); }

TestStatVector row_z_stats(const DataMatrix& x, const Vector& sigma) {
  const ClassLabels& labels = x.labels();
  if (sigma.size() != x.rows()) throw ParameterError("row_z_stats: sigma length does not match rows");
  if (!(sigma.array() > 0).all()) throw ParameterError("row_z_stats: sigma must be positive");
  TestStatVector out;
  out.kind = StatKind::z;
  out.df = static_cast<int>(labels.n() - 2);
  out.c_n = labels.c_n();
  out.values = mean_difference(x.values(), labels).cwiseQuotient(sigma) / std::sqrt(out.c_n);
  out.flagged.assign(static_cast<std::size_t>(x.rows()), 0);
  return out;
}

double sample_variance(const Vector& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

VarianceEstimate t_null_variance_mc(const Matrix& delta, const ClassLabels& labels, Index reps, std::uint64_t seed) {
  if (reps < 10000) throw ParameterError("t_null_variance_mc: reps must be at least 1e4");
  require_spd(delta, "Delta");
  labels.validate(delta.rows());
  const Index n = delta.rows();
  const Matrix root = symmetric_power(delta, 0.5).value;

  Engine engine = make_stream(seed);
  std::normal_distribution<double> normal;
  constexpr Index kBatch = 4096;
  Vector all(reps);
  Index done = 0;
  while (done < reps) {
    const Index rows = std::min(kBatch, reps - done);
    Matrix z(rows, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < rows; ++i) z(i, j) = normal(engine);
    const Matrix x = z * root;
    const TestStatVector t = row_t_stats(x, labels);
    all.segment(done, rows) = t.values;
    done += rows;
  }
  const double mean = all.mean();
  const Eigen::ArrayXd centered = all.array() - mean;
  const double r = static_cast<double>(reps);
  const double variance = centered.square().sum() / (r - 1.0);
  const double m4 = centered.square().square().sum() / r;
  VarianceEstimate out;
  out.variance = variance;
  out.std_error = std::sqrt(std::max(0.0, m4 - variance * variance) / r);
  return out;
}

double t_cdf(double x, double df) {
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  boost::math::students_t dist(df);
  return boost::math::cdf(dist, x);
}

double t_quantile(double prob, double df) {
  boost::math::students_t dist(df);
  return boost::math::quantile(dist, prob);
}

PValues p_values(const TestStatVector& stats, Reference reference) {
  if (!(reference.scale > 0)) throw ParameterError("p_values: scale must be positive");
  const bool normal_ref = stats.kind == StatKind::z;
  if (!normal_ref && stats.df <= 0) throw ParameterError("p_values: degrees of freedom must be positive");
  PValues out;
  out.p.resize(stats.size());
  const boost::math::students_t tdist(normal_ref ? 1.0 : static_cast<double>(stats.df));
  const boost::math::normal ndist;
  Index flagged = 0;
  for (Index i = 0; i < stats.size(); ++i) {
    const bool is_flagged = !stats.flagged.empty() && stats.flagged[static_cast<std::size_t>(i)];
    const double v = stats.values(i);
    if (is_flagged || std::isinf(v)) {
      out.p(i) = 0.0;
      flagged += is_flagged;
      continue;
    }
    if (std::isnan(v)) throw ParameterError("p_values: NaN statistic in row " + std::to_string(i));
    const double a = std::abs(v) / reference.scale;
    const double tail = normal_ref ? boost::math::cdf(boost::math::complement(ndist, a))
                                   : boost::math::cdf(boost::math::complement(tdist, a));
    out.p(i) = std::min(1.0, 2.0 * tail);
  }
  if (flagged > 0)
    out.warnings.push_back(std::to_string(flagged) + " flagged statistic(s) (zero pooled variance) assigned p = 0");
  return out;
}

}  // namespace sphering
