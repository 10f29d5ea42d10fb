#include "oracles.hpp"
#include "sphering/core.hpp"
#include "sphering/errors.hpp"
#include "sphering/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace sphering;

namespace {

Matrix ar(Index n, double rho) { return make_structured_cov(CovKind::ar1, n, rho); }
Matrix blocked(Index n, double rho) { return make_structured_cov(CovKind::block_ar1, n, rho, Index{10}); }

}  // namespace

TEST_CASE("pooled T on a hand-computed row") {
  Matrix x(1, 6);
  x << 1, 2, 3, 2, 3, 4;
  const TestStatVector t = row_t_stats(x, ClassLabels::contiguous(3, 3));
  CHECK(t.values(0) == doctest::Approx(-1.0 / std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(t.df == 4);
  CHECK(t.c_n == doctest::Approx(2.0 / 3.0));
  CHECK(t.flagged_count() == 0);
}

TEST_CASE("pooled T matches direct summation") {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::gaussian(20, 13, rng);
  const ClassLabels labels = ClassLabels::contiguous(6, 7);
  const TestStatVector t = row_t_stats(x, labels);
  for (Index i = 0; i < 20; ++i) {
    std::vector<double> a, b;
    for (Index j = 0; j < 6; ++j) a.push_back(x(i, j));
    for (Index j = 6; j < 13; ++j) b.push_back(x(i, j));
    CHECK(t.values(i) == doctest::Approx(oracle::pooled_t(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("constant rows are flagged with signed infinities") {
  Matrix x(3, 4);
  x << 1, 1, 1, 1, 2, 2, 1, 1, 1, 1, 2, 2;
  const TestStatVector t = row_t_stats(x, ClassLabels::contiguous(2, 2));
  CHECK(t.flagged_count() == 3);
  CHECK(t.values(0) == INFINITY);
  CHECK(t.values(1) == INFINITY);
  CHECK(t.values(2) == -INFINITY);
  const Vector p = p_values(t).p;
  CHECK(p.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("known-sigma Z has unit variance under independent columns") {
  const Index m = 100000, n = 50;
  Matrix x(m, n);
  Engine e = make_stream(8);
  std::normal_distribution<double> z;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) x(i, j) = z(e);
  const TestStatVector zs = row_z_stats(DataMatrix(x, ClassLabels::contiguous(25, 25)), Vector::Ones(m));
  CHECK(std::abs(sample_variance(zs.values) - 1.0) < 0.01);
}

TEST_CASE("known-sigma Z mean follows the contrast") {
  const Index m = 20000, n = 10;
  Engine e = make_stream(9);
  std::normal_distribution<double> z;
  Matrix x(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) x(i, j) = 2.0 * z(e) + (j < 4 ? 0.7 : 0.0);
  const TestStatVector zs = row_z_stats(DataMatrix(x, ClassLabels::contiguous(4, 6)), Vector::Constant(m, 2.0));
  const double cn = 1.0 / 4 + 1.0 / 6;
  CHECK(zs.values.mean() == doctest::Approx(0.7 / (2.0 * std::sqrt(cn))).epsilon(0.03));
}

TEST_CASE("eta reduces to c_n under identity") {
  const ClassLabels l = ClassLabels::contiguous(7, 11);
  CHECK(eta(Matrix::Identity(18, 18), l) == doctest::Approx(l.c_n()).epsilon(1e-14));
  CHECK(eta_blocked(Matrix::Identity(7, 7), Matrix::Identity(11, 11)) == doctest::Approx(l.c_n()).epsilon(1e-14));
  CHECK(eta_blocked(Matrix::Ones(7, 7), Matrix::Ones(11, 11)) == doctest::Approx(2.0));
}

TEST_CASE("Z variance ratios for the four reference column structures") {
  const ClassLabels l = ClassLabels::contiguous(25, 25);
  CHECK(std::round(eta(ar(50, 0.9), l) / l.c_n() * 1000) / 1000 == doctest::Approx(9.215));
  CHECK(std::round(eta(blocked(50, 0.9), l) / l.c_n() * 1000) / 1000 == doctest::Approx(6.069));
  CHECK(std::round(eta(ar(50, 0.5), l) / l.c_n() * 100) / 100 == doctest::Approx(2.76));
  CHECK(std::round(eta(blocked(50, 0.5), l) / l.c_n() * 100) / 100 == doctest::Approx(2.45));
}

TEST_CASE("eta equals the explicit square-root form") {
  std::mt19937_64 rng(21);
  const ClassLabels l = ClassLabels::contiguous(3, 5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix delta = oracle::random_spd(8, rng);
    const Matrix root = Eigen::LLT<Matrix>(delta).matrixL();
    double explicit_form = 0;
    for (Index j = 0; j < 8; ++j) {
      double a = 0, b = 0;
      for (Index i = 0; i < 3; ++i) a += root(i, j);
      for (Index i = 3; i < 8; ++i) b += root(i, j);
      explicit_form += (a / 3 - b / 5) * (a / 3 - b / 5);
    }
    CHECK(std::abs(eta(delta, l) - explicit_form) < 1e-10);
  }
}

TEST_CASE("eta of a block-diagonal structure equals the blocked form") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix d1 = oracle::random_spd(4, rng), d2 = oracle::random_spd(6, rng);
    const double general = eta(block_diagonal(d1, d2), ClassLabels::contiguous(4, 6));
    CHECK(std::abs(general - eta_blocked(d1, d2)) < 1e-12);
  }
}

TEST_CASE("eta is invariant to permuting columns within a class") {
  std::mt19937_64 rng(6);
  const Matrix delta = oracle::random_spd(7, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(7);
  perm.indices() << 2, 0, 1, 6, 3, 5, 4;
  const Matrix permuted = perm * delta * perm.transpose();
  const ClassLabels l = ClassLabels::contiguous(3, 4);
  CHECK(std::abs(eta(delta, l) - eta(permuted, l)) < 1e-13);
}

TEST_CASE("eta rejects mismatched dimensions") {
  CHECK_THROWS_AS(eta(Matrix::Identity(5, 5), ClassLabels::contiguous(2, 2)), ParameterError);
}

TEST_CASE("null T variance under independent columns is the t second moment") {
  const auto est = t_null_variance_mc(Matrix::Identity(50, 50), ClassLabels::contiguous(25, 25), 100000, 1);
  CHECK(std::abs(est.variance / (48.0 / 46.0) - 1.0) < 0.01);
  CHECK(est.std_error > 0);
}

TEST_CASE("null T variance under strong correlation") {
  const auto est = t_null_variance_mc(ar(50, 0.5), ClassLabels::contiguous(25, 25), 100000, 2);
  CHECK(std::abs(est.variance - 3.197) < 5 * 0.00472 * std::sqrt(10.0));
}

TEST_CASE("two-sided p-values") {
  TestStatVector t;
  t.values = Vector(3);
  t.values << 0.0, 2.0106, -2.0106;
  t.flagged = {0, 0, 0};
  t.df = 48;
  const Vector p = p_values(t).p;
  CHECK(p(0) == doctest::Approx(1.0));
  CHECK(std::round(p(1) * 1e4) / 1e4 == doctest::Approx(0.0500));
  CHECK(p(1) == doctest::Approx(oracle::t_two_sided(2.0106, 48)).epsilon(1e-7));
  CHECK(p(2) == p(1));
  const Vector scaled = p_values(t, Reference::scaled_t(2.0)).p;
  CHECK(scaled(1) == doctest::Approx(oracle::t_two_sided(2.0106 / 2.0, 48)).epsilon(1e-7));

  TestStatVector z = t;
  z.kind = StatKind::z;
  CHECK(p_values(z).p(1) == doctest::Approx(std::erfc(2.0106 / std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("t distribution helpers invert each other") {
  for (double prob : {0.01, 0.3, 0.5, 0.9, 0.999}) CHECK(t_cdf(t_quantile(prob, 12), 12) == doctest::Approx(prob));
  CHECK(t_cdf(1.5, 30) - t_cdf(-1.5, 30) ==
        doctest::Approx(1.0 - oracle::t_two_sided(1.5, 30)).epsilon(1e-7));
}

TEST_CASE("stat kind names round trip") {
  for (StatKind k : {StatKind::z, StatKind::t, StatKind::t_sphered, StatKind::t_central_matched})
    CHECK(stat_kind_from_string(to_string(k)) == k);
  CHECK_THROWS(stat_kind_from_string("w"));
}
