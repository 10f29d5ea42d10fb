#include "sphering/core.hpp"

#include "sphering/rng.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace sphering {

ClassLabels ClassLabels::contiguous(Index n1, Index n2) {
  ClassLabels labels;
  labels.class1.resize(static_cast<std::size_t>(n1));
  labels.class2.resize(static_cast<std::size_t>(n2));
  std::iota(labels.class1.begin(), labels.class1.end(), Index{0});
  std::iota(labels.class2.begin(), labels.class2.end(), n1);
  return labels;
}

std::vector<std::uint8_t> ClassLabels::tags() const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n()), 0);
  for (Index j : class2) out[static_cast<std::size_t>(j)] = 1;
  return out;
}

ClassLabels ClassLabels::from_tags(const std::vector<std::uint8_t>& tags) {
  ClassLabels labels;
  for (std::size_t j = 0; j < tags.size(); ++j)
    (tags[j] == 0 ? labels.class1 : labels.class2).push_back(static_cast<Index>(j));
  return labels;
}

void ClassLabels::validate(Index n) const {
  if (this->n() != n) throw ParameterError("class labels do not cover every column");
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  for (const auto* set : {&class1, &class2}) {
    if (!std::is_sorted(set->begin(), set->end())) throw ParameterError("class index sets must be sorted");
    for (Index j : *set) {
      if (j < 0 || j >= n) throw ParameterError("class index out of range");
      if (seen[static_cast<std::size_t>(j)]++) throw ParameterError("class index sets overlap");
    }
  }
}

void ClassLabels::require_pooled_variance() const {
  if (n1() < 2 || n2() < 2) throw DegenerateError("each class needs at least two columns");
}

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {}

DataMatrix::DataMatrix(Matrix values, ClassLabels labels) : values_(std::move(values)), labels_(std::move(labels)) {
  labels_->validate(values_.cols());
}

const ClassLabels& DataMatrix::labels() const {
  if (!labels_) throw ParameterError("data matrix has no class labels");
  return *labels_;
}

MatrixNormalParams MatrixNormalParams::centered(Matrix sigma, Matrix delta) {
  MatrixNormalParams p;
  p.nu = Vector::Zero(sigma.rows());
  p.mu = Vector::Zero(delta.rows());
  p.sigma = std::move(sigma);
  p.delta = std::move(delta);
  return p;
}

void MatrixNormalParams::validate() const {
  if (sigma.rows() < 1 || delta.rows() < 1) throw ParameterError("matrix normal: empty covariance");
  if (nu.size() != sigma.rows()) throw ParameterError("matrix normal: nu length does not match Sigma");
  if (mu.size() != delta.rows()) throw ParameterError("matrix normal: mu length does not match Delta");
  require_spd(sigma, "Sigma");
  require_spd(delta, "Delta");
}

Matrix SignalSpec::matrix(Index n) const {
  if (psi1.size() != psi2.size()) throw ParameterError("signal: psi1 and psi2 lengths differ");
  if (n1 < 0 || n1 > n) throw ParameterError("signal: n1 out of range");
  Matrix s(psi1.size(), n);
  s.leftCols(n1) = psi1.replicate(1, n1);
  s.rightCols(n - n1) = psi2.replicate(1, n - n1);
  return s;
}

std::vector<Index> SignalSpec::non_null_rows() const {
  std::vector<Index> rows;
  for (Index i = 0; i < psi1.size(); ++i)
    if (psi1(i) != psi2(i)) rows.push_back(i);
  return rows;
}

MatrixNormalSampler::MatrixNormalSampler(MatrixNormalParams params, std::optional<SignalSpec> signal)
    : params_(std::move(params)), signal_(std::move(signal)) {
  params_.validate();
  const Index m = params_.rows();
  const Index n = params_.cols();
  sigma_root_ = symmetric_power(params_.sigma, 0.5).value;
  delta_root_ = symmetric_power(params_.delta, 0.5).value;
  mean_ = params_.nu.replicate(1, n) + params_.mu.transpose().replicate(m, 1);
  if (signal_) {
    if (signal_->psi1.size() != m) throw ParameterError("signal length does not match Sigma");
    mean_ += signal_->matrix(n);
  }
}

DataMatrix MatrixNormalSampler::draw(Engine& engine) const {
  const Index m = params_.rows();
  const Index n = params_.cols();
  std::normal_distribution<double> normal;
  Matrix z(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) z(i, j) = normal(engine);
  Matrix x = mean_ + sigma_root_ * z * delta_root_;
  if (signal_) return DataMatrix(std::move(x), ClassLabels::contiguous(signal_->n1, n - signal_->n1));
  return DataMatrix(std::move(x));
}

DataMatrix MatrixNormalSampler::sample(std::uint64_t seed) const {
  Engine engine = make_stream(seed);
  return draw(engine);
}

DataMatrix MatrixNormalSampler::sample(std::uint64_t seed, std::initializer_list<std::uint64_t> path) const {
  Engine engine = make_stream(seed, path);
  return draw(engine);
}

DataMatrix sample_matrix_normal(const MatrixNormalParams& params, const std::optional<SignalSpec>& signal,
                                std::uint64_t seed) {
  return MatrixNormalSampler(params, signal).sample(seed);
}

DecompositionFit decompose(const DataMatrix& x) {
  const ClassLabels& labels = x.labels();
  labels.require_pooled_variance();
  const Matrix& values = x.values();
  const Index m = values.rows();
  const Index n = values.cols();

  DecompositionFit fit;
  fit.labels = labels;
  fit.muHat = values.colwise().mean().transpose();
  const Matrix col_centered = values.rowwise() - fit.muHat.transpose();
  fit.nuHat = col_centered.rowwise().mean();
  const Matrix centered = col_centered.colwise() - fit.nuHat;

  fit.psi1Hat = Vector::Zero(m);
  fit.psi2Hat = Vector::Zero(m);
  for (Index j : labels.class1) fit.psi1Hat += centered.col(j);
  for (Index j : labels.class2) fit.psi2Hat += centered.col(j);
  fit.psi1Hat /= static_cast<double>(labels.n1());
  fit.psi2Hat /= static_cast<double>(labels.n2());

  fit.meanMatrix = fit.nuHat.replicate(1, n) + fit.muHat.transpose().replicate(m, 1);
  fit.signalMatrix.resize(m, n);
  for (Index j : labels.class1) fit.signalMatrix.col(j) = fit.psi1Hat;
  for (Index j : labels.class2) fit.signalMatrix.col(j) = fit.psi2Hat;
  fit.noise = values - fit.meanMatrix - fit.signalMatrix;
  return fit;
}

Matrix double_center(const Matrix& x) {
  Matrix out = x.rowwise() - x.colwise().mean();
  out.colwise() -= out.rowwise().mean();
  return out;
}

Matrix block_diagonal(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace sphering
