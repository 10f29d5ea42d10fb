#include "oracles.hpp"
#include "sphering/core.hpp"
#include "sphering/errors.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace sphering;

TEST_CASE("structured covariances expand the formula") {
  const Matrix ar = make_structured_cov(CovKind::ar1, 3, 0.5);
  Matrix expected(3, 3);
  expected << 1, .5, .25, .5, 1, .5, .25, .5, 1;
  CHECK((ar - expected).cwiseAbs().maxCoeff() < 1e-15);

  const Matrix blocks = make_structured_cov(CovKind::block_ar1, 4, 0.9, Index{2});
  Matrix b(4, 4);
  b << 1, .9, 0, 0, .9, 1, 0, 0, 0, 0, 1, .9, 0, 0, .9, 1;
  CHECK((blocks - b).cwiseAbs().maxCoeff() < 1e-15);

  const Matrix neg = make_structured_cov(CovKind::block_ar1, 20, -0.9, Index{10});
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 10; ++j) CHECK(neg(i, j) == doctest::Approx(std::pow(-0.9, std::abs(i - j))));
  CHECK(neg(3, 13) == 0.0);

  CHECK(make_structured_cov(CovKind::identity, 5, 0.0).isIdentity());
  CHECK_THROWS_AS(make_structured_cov(CovKind::ar1, 3, 1.0), ParameterError);
  CHECK_THROWS_AS(make_structured_cov(CovKind::block_ar1, 5, 0.5, Index{2}), ParameterError);
  CHECK_THROWS_AS(make_structured_cov(CovKind::ar1, 0, 0.5), ParameterError);
}

TEST_CASE("structured covariances are available in single precision") {
  const Eigen::MatrixXf f = make_structured_cov<float>(CovKind::ar1, 4, 0.5f);
  CHECK(f(0, 3) == doctest::Approx(0.125f));
}

TEST_CASE("empirical pair shares nonzero spectrum") {
  std::mt19937_64 rng(7);
  const Matrix x = oracle::gaussian(6, 4, rng);
  const auto [row, col] = empirical_cov_pair(x);
  Eigen::SelfAdjointEigenSolver<Matrix> er(x * x.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> ec(x.transpose() * x);
  const Vector top = er.eigenvalues().tail(4);
  CHECK((top - ec.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((row - x * x.transpose() / 6.0).norm() < 1e-14);
  CHECK((col - x.transpose() * x / 4.0).norm() < 1e-14);
}

TEST_CASE("empirical pair of a rank one matrix has rank one") {
  Vector u(5), v(4);
  u << 1, -2, 0.5, 3, 1;
  v << 2, 1, -1, 0.5;
  const Matrix x = u * v.transpose();
  const auto [row, col] = empirical_cov_pair(x);
  Eigen::SelfAdjointEigenSolver<Matrix> er(row), ec(col);
  CHECK(er.eigenvalues()(3) < 1e-10 * er.eigenvalues()(4));
  CHECK(ec.eigenvalues()(2) < 1e-10 * ec.eigenvalues()(3));
}

TEST_CASE("empirical column covariance of a scaled orthogonal matrix is a multiple of identity") {
  std::mt19937_64 rng(11);
  Eigen::HouseholderQR<Matrix> qr(oracle::gaussian(6, 6, rng));
  const Matrix q = 3.0 * Matrix(qr.householderQ());
  const auto pair = empirical_cov_pair(q);
  CHECK((pair.second - 9.0 / 6.0 * Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("identity matrix normal draws are standard normal") {
  const auto params = MatrixNormalParams::centered(Matrix::Identity(200, 200), Matrix::Identity(100, 100));
  const DataMatrix x = sample_matrix_normal(params, std::nullopt, 42);
  const double mean = x.values().mean();
  const double var = (x.values().array() - mean).square().sum() / (x.values().size() - 1);
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("sampling is deterministic in the seed") {
  const auto params = MatrixNormalParams::centered(make_structured_cov(CovKind::ar1, 8, 0.5),
                                                   make_structured_cov(CovKind::ar1, 6, 0.3));
  const MatrixNormalSampler sampler(params);
  CHECK(sampler.sample(5).values() == sampler.sample(5).values());
  CHECK(sampler.sample(5).values() != sampler.sample(6).values());
  CHECK(sampler.sample(5, {1, 2}).values() == sampler.sample(5, {1, 2}).values());
  CHECK(sampler.sample(5, {1, 2}).values() != sampler.sample(5, {1, 3}).values());
}

TEST_CASE("row covariance of replicate columns approaches the block AR structure") {
  const Matrix sigma = make_structured_cov(CovKind::block_ar1, 250, 0.9, Index{10});
  const MatrixNormalSampler sampler(MatrixNormalParams::centered(sigma, Matrix::Identity(50, 50)));
  Matrix acc = Matrix::Zero(250, 250);
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    const Matrix x = sampler.sample(99, {static_cast<std::uint64_t>(r)}).values();
    acc.noalias() += x * x.transpose();
  }
  acc /= 50.0 * reps;
  CHECK((acc - sigma).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("vectorized samples have Kronecker covariance") {
  Matrix sigma(3, 3), delta(2, 2);
  sigma << 2, 0.6, 0.2, 0.6, 1, -0.3, 0.2, -0.3, 1.5;
  delta << 1, 0.4, 0.4, 0.8;
  const MatrixNormalSampler sampler(MatrixNormalParams::centered(sigma, delta));
  Engine base = make_stream(3);
  Matrix acc = Matrix::Zero(6, 6);
  const int reps = 100000;
  for (int r = 0; r < reps; ++r) {
    const Matrix x = sampler.sample(base()).values();
    const Eigen::Map<const Vector> v(x.data(), 6);
    acc.noalias() += v * v.transpose();
  }
  acc /= reps;
  Matrix kron(6, 6);
  for (Index a = 0; a < 2; ++a)
    for (Index b = 0; b < 2; ++b) kron.block(3 * a, 3 * b, 3, 3) = delta(a, b) * sigma;
  CHECK((acc - kron).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("invalid parameters are rejected") {
  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(MatrixNormalParams::centered(bad, Matrix::Identity(3, 3)).validate(), ParameterError);
  auto params = MatrixNormalParams::centered(Matrix::Identity(3, 3), Matrix::Identity(4, 4));
  params.nu = Vector::Zero(2);
  CHECK_THROWS_AS(params.validate(), ParameterError);
  SignalSpec signal{Vector::Zero(4), Vector::Zero(4), 2};
  CHECK_THROWS_AS(MatrixNormalSampler(MatrixNormalParams::centered(Matrix::Identity(3, 3), Matrix::Identity(4, 4)),
                                      signal),
                  ParameterError);
}

TEST_CASE("decomposition reconstructs the data and centers the noise") {
  std::mt19937_64 rng(5);
  const DataMatrix x(oracle::gaussian(7, 9, rng), ClassLabels::contiguous(4, 5));
  const DecompositionFit fit = decompose(x);
  CHECK((fit.meanMatrix + fit.signalMatrix + fit.noise - x.values()).cwiseAbs().maxCoeff() < 1e-12);
  for (const auto* cls : {&x.labels().class1, &x.labels().class2}) {
    Vector sums = Vector::Zero(7);
    for (Index j : *cls) sums += fit.noise.col(j);
    CHECK(sums.cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(fit.noise.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(fit.psi1Hat.sum() * 4 + fit.psi2Hat.sum() * 5) < 1e-10);
}

TEST_CASE("decomposition of mean plus signal leaves no noise") {
  Vector nu(3), mu(6), psi1(3), psi2(3);
  nu << 1, -2, 0.5;
  mu << 0.3, -0.1, 0.2, 0.0, -0.4, 0.5;
  mu.array() -= mu.mean();
  psi1 << 0.5, 0.5, -1;
  psi2 = -0.5 * psi1;
  Matrix x(3, 6);
  for (Index j = 0; j < 6; ++j) x.col(j) = nu + Vector::Constant(3, mu(j)) + (j < 3 ? psi1 : psi2);
  const DecompositionFit fit = decompose(DataMatrix(x, ClassLabels::contiguous(3, 3)));
  CHECK(fit.noise.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(((fit.psi1Hat - fit.psi2Hat) - (psi1 - psi2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constant rows carry no signal") {
  Matrix x(3, 5);
  x.row(0).setConstant(2.0);
  x.row(1).setConstant(-1.0);
  x.row(2).setConstant(7.5);
  const DecompositionFit fit = decompose(DataMatrix(x, ClassLabels::contiguous(2, 3)));
  CHECK(fit.psi1Hat.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fit.psi2Hat.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("signal estimate is unbiased under correlated columns") {
  const Index m = 10, n = 20;
  SignalSpec signal{Vector::Zero(m), Vector::Zero(m), 10};
  signal.psi1(1) = 0.5;
  signal.psi1(2) = -0.5;
  signal.psi2 = -signal.psi1;
  const MatrixNormalSampler sampler(
      MatrixNormalParams::centered(Matrix::Identity(m, m), make_structured_cov(CovKind::ar1, n, 0.5)), signal);
  double acc = 0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    const DecompositionFit fit = decompose(sampler.sample(17, {static_cast<std::uint64_t>(r)}));
    acc += fit.psi1Hat(1) - fit.psi2Hat(1);
  }
  CHECK(std::abs(acc / reps - 1.0) < 0.02);
}

TEST_CASE("labels must partition the columns and support pooled variance") {
  ClassLabels bad{{0, 1}, {1, 2}};
  CHECK_THROWS_AS(bad.validate(3), ParameterError);
  CHECK_THROWS_AS(ClassLabels::contiguous(1, 4).require_pooled_variance(), DegenerateError);
  CHECK_THROWS_AS(decompose(DataMatrix(Matrix::Zero(3, 5), ClassLabels::contiguous(1, 4))), DegenerateError);
  CHECK_THROWS_AS(decompose(DataMatrix(Matrix::Zero(3, 5))), ParameterError);
  const ClassLabels l = ClassLabels::contiguous(2, 3);
  CHECK(ClassLabels::from_tags(l.tags()) == l);
}

TEST_CASE("double centering and block diagonal") {
  std::mt19937_64 rng(1);
  const Matrix c = double_center(oracle::gaussian(5, 4, rng));
  CHECK(c.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  CHECK(c.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  const Matrix bd = block_diagonal(Matrix::Constant(2, 2, 1.0), Matrix::Constant(3, 3, 2.0));
  CHECK(bd.rows() == 5);
  CHECK(bd(1, 1) == 1.0);
  CHECK(bd(4, 4) == 2.0);
  CHECK(bd(0, 4) == 0.0);
}

TEST_CASE("signal with nonzero class sums is recovered up to a constant") {
  Vector psi1(4), psi2(4);
  psi1 << 1, 0, 0, 0;
  psi2 << 0, 0, 0, 0;
  Matrix x(4, 6);
  for (Index j = 0; j < 6; ++j) x.col(j) = j < 3 ? psi1 : psi2;
  const DecompositionFit fit = decompose(DataMatrix(x, ClassLabels::contiguous(3, 3)));
  const Vector shift = (fit.psi1Hat - fit.psi2Hat) - (psi1 - psi2);
  CHECK((shift.array() - shift(0)).abs().maxCoeff() < 1e-12);
  CHECK(shift(0) == doctest::Approx(-0.25));
}
