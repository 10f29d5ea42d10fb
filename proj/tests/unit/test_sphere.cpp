#include "oracles.hpp"
#include "sphering/core.hpp"
#include "sphering/errors.hpp"
#include "sphering/sphere.hpp"
#include "sphering/stats.hpp"

#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>

using namespace sphering;

namespace {

TestStatVector t_stats_from(const Vector& v, int df) {
  TestStatVector t;
  t.values = v;
  t.flagged.assign(static_cast<std::size_t>(v.size()), 0);
  t.df = df;
  return t;
}

Vector t_draws(Index count, double df, std::uint64_t seed) {
  Engine e = make_stream(seed);
  std::student_t_distribution<double> dist(df);
  Vector v(count);
  for (Index i = 0; i < count; ++i) v(i) = dist(e);
  return v;
}

}  // namespace

TEST_CASE("inverse square roots") {
  CHECK(sym_inv_sqrt(Matrix::Identity(4, 4)).value.isIdentity(1e-14));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 4, 9;
  const Matrix r = sym_inv_sqrt(d).value;
  CHECK(r(0, 0) == doctest::Approx(0.5));
  CHECK(r(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(r(0, 1) == 0.0);
  std::mt19937_64 rng(1);
  const Matrix a = oracle::random_spd(5, rng);
  const Matrix ra = sym_inv_sqrt(a).value;
  CHECK((ra * a * ra - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(sym_inv_sqrt(a).warnings.empty());
}

TEST_CASE("identity sphering keeps signal plus noise") {
  std::mt19937_64 rng(2);
  const DataMatrix x(oracle::gaussian(12, 8, rng), ClassLabels::contiguous(4, 4));
  const SpheredData s = sphere(x, TrcmFit::from_covariances(Matrix::Identity(12, 12), Matrix::Identity(8, 8)));
  const DecompositionFit d = decompose(x);
  CHECK((s.values - (d.signalMatrix + d.noise)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sphering preserves the class contrast") {
  SignalSpec signal{Vector::Zero(40), Vector::Zero(40), 10};
  signal.psi1.head(8).setConstant(0.7);
  signal.psi2.head(8).setConstant(-0.7);
  const Matrix sigma = make_structured_cov(CovKind::block_ar1, 40, 0.8, Index{10});
  const Matrix delta = make_structured_cov(CovKind::ar1, 20, 0.6);
  const DataMatrix x = MatrixNormalSampler(MatrixNormalParams::centered(sigma, delta), signal).sample(3);
  const DecompositionFit d = decompose(x);
  std::mt19937_64 rng(3);
  const TrcmFit fit = TrcmFit::from_covariances(oracle::random_spd(40, rng), oracle::random_spd(20, rng));
  const SpheredData s = sphere(x, fit);
  const Vector contrast = mean_difference(s.values, s.labels);
  CHECK((contrast - (d.psi1Hat - d.psi2Hat)).cwiseAbs().maxCoeff() < 1e-10);
  for (const auto* cls : {&s.labels.class1, &s.labels.class2}) {
    Vector sums = Vector::Zero(40);
    for (Index j : *cls) sums += s.noise.col(j);
    CHECK(sums.cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("oracle sphering whitens rows and columns") {
  const Index m = 250, n = 50;
  const Matrix sigma = make_structured_cov(CovKind::block_ar1, m, 0.9, Index{10});
  const Matrix delta = make_structured_cov(CovKind::block_ar1, n, 0.5, Index{10});
  const MatrixNormalSampler sampler(MatrixNormalParams::centered(sigma, delta));
  const TrcmFit oracleFit = TrcmFit::from_covariances(sigma, delta);
  double rowsBefore = 0, rowsAfter = 0, colsAfter = 0;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    const DataMatrix x(sampler.sample(5, {rep}).values(), ClassLabels::contiguous(25, 25));
    const SpheredData s = sphere(x, oracleFit);
    rowsBefore += oracle::max_lag_mean_correlation(decompose(x).noise, 9) / 10;
    rowsAfter += oracle::max_lag_mean_correlation(s.noise, 9) / 10;
    colsAfter += oracle::max_lag_mean_correlation(s.noise.transpose(), 9) / 10;
  }
  CHECK(rowsBefore > 0.3);
  CHECK(rowsAfter < 0.1);
  CHECK(colsAfter < 0.1);
}

TEST_CASE("sphering checks dimensions") {
  const DataMatrix x(Matrix::Zero(5, 4), ClassLabels::contiguous(2, 2));
  CHECK_THROWS_AS(sphere(x, TrcmFit::from_covariances(Matrix::Identity(4, 4), Matrix::Identity(4, 4))),
                  ParameterError);
}

TEST_CASE("type-7 quantiles") {
  const std::vector<double> v = {1, 2, 3, 4};
  CHECK(quantile_sorted(v, 0.0) == 1.0);
  CHECK(quantile_sorted(v, 1.0) == 4.0);
  CHECK(quantile_sorted(v, 0.5) == 2.5);
  CHECK(quantile_sorted(v, 0.25) == doctest::Approx(1.75));
  CHECK_THROWS_AS(quantile_sorted({}, 0.5), ParameterError);
}

TEST_CASE("central t variance") {
  CHECK(t_central_variance(48, 1.0) == doctest::Approx(48.0 / 46.0));
  const boost::math::students_t dist(48);
  const double q = boost::math::quantile(dist, 0.9);
  const double direct =
      oracle::simpson([](double x) { return x * x * oracle::t_density(x, 48); }, -q, q) / 0.8;
  CHECK(t_central_variance(48, 0.8) == doctest::Approx(direct).epsilon(1e-8));
  CHECK_THROWS_AS(t_central_variance(2, 0.8), ParameterError);
  CHECK_THROWS_AS(t_central_variance(10, 0.0), ParameterError);
}

TEST_CASE("central matching recovers scale") {
  const Vector base = t_draws(100000, 48, 17);
  const CentralMatchResult same = central_match(t_stats_from(base, 48), 0.8);
  CHECK(std::abs(same.scale_factor() - 1.0) < 0.01);
  const CentralMatchResult wide = central_match(t_stats_from(3.0 * t_draws(100000, 48, 18), 48), 0.8);
  CHECK(std::abs(wide.scale_factor() * 3.0 - 1.0) < 0.02);
  CHECK(wide.scaledStats.kind == StatKind::t_central_matched);
  CHECK(wide.windowCount == doctest::Approx(80000).epsilon(0.001));
}

TEST_CASE("central matching over the full sample is variance matching") {
  const Vector v = 2.0 * t_draws(1000, 20, 19);
  const CentralMatchResult r = central_match(t_stats_from(v, 20), 1.0);
  CHECK(r.scale_factor() == doctest::Approx(std::sqrt(20.0 / 18.0) / std::sqrt(sample_variance(v))));
  CHECK((r.scaledStats.values - v * r.scale_factor()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("central matching guards") {
  CHECK_THROWS_AS(central_match(t_stats_from(Vector::Ones(10), 8)), ParameterError);
  CHECK_THROWS_AS(central_match(t_stats_from(Vector::Ones(30), 28)), DegenerateError);
  CHECK_THROWS_AS(central_match(t_stats_from(t_draws(30, 5, 1), 28), 1.5), ParameterError);
}

TEST_CASE("ranking by magnitude breaks ties by index") {
  Vector v(5);
  v << 1, -3, 3, 0.5, -1;
  CHECK(rank_by_magnitude(v) == std::vector<Index>{1, 2, 0, 4, 3});
  Vector w = Vector::Zero(10);
  w(7) = 9;
  CHECK(rank_by_magnitude(w).front() == 7);
}

TEST_CASE("row filtering") {
  SignalSpec signal{Vector::Zero(250), Vector::Zero(250), 25};
  signal.psi1.head(20).setConstant(1.0);
  const Matrix sigma = make_structured_cov(CovKind::block_ar1, 250, 0.5, Index{10});
  const Matrix delta = make_structured_cov(CovKind::ar1, 50, 0.3);
  const DataMatrix x = MatrixNormalSampler(MatrixNormalParams::centered(sigma, delta), signal).sample(4);

  const FilteredRows all = filter_rows(x, 250);
  for (Index i = 0; i < 250; ++i) CHECK(all.indexMap[static_cast<std::size_t>(i)] == i);
  CHECK(all.data.values() == x.values());

  const FilteredRows top = filter_rows(x, 100);
  CHECK(top.indexMap.size() == 100);
  CHECK(std::is_sorted(top.indexMap.begin(), top.indexMap.end()));
  const TestStatVector t = row_t_stats(x);
  CHECK(top.ranking == rank_by_magnitude(t.values));

  const Matrix sSub = make_structured_cov(CovKind::block_ar1, 100, 0.5, Index{10});
  const SpheredData s = sphere(top.data, TrcmFit::from_covariances(sSub, delta));
  const DecompositionFit sub = decompose(top.data);
  const DecompositionFit full = decompose(x);
  const Vector sphered = mean_difference(s.values, s.labels);
  CHECK((sphered - (sub.psi1Hat - sub.psi2Hat)).cwiseAbs().maxCoeff() < 1e-10);
  Vector shift(100);
  for (Index i = 0; i < 100; ++i) {
    const Index r = top.indexMap[static_cast<std::size_t>(i)];
    shift(i) = sphered(i) - (full.psi1Hat(r) - full.psi2Hat(r));
  }
  CHECK((shift.array() - shift(0)).abs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(filter_rows(x, 1), ParameterError);
  CHECK_THROWS_AS(filter_rows(x, 251), ParameterError);
}
