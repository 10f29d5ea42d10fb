#include "sphering/trcm.hpp"

#include "parallel.hpp"
#include "sphering/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace sphering {

namespace {

Matrix symmetrized(const Matrix& a) { return (a + a.transpose()) / 2.0; }

Matrix loaded(Matrix s, double loading) {
  const double d = static_cast<double>(s.rows());
  s.diagonal().array() += loading * s.trace() / d;
  return s;
}

double max_off_diagonal(const Matrix& a) {
  double worst = 0.0;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (i != j) worst = std::max(worst, std::abs(a(i, j)));
  return worst;
}

bool is_diagonal(const Matrix& a) {
  return max_off_diagonal(a) <= 1e-12 * a.diagonal().cwiseAbs().maxCoeff();
}

void normalize_trace(TrcmFit& fit) {
  const double c = static_cast<double>(fit.DeltaHat.rows()) / fit.DeltaHat.trace();
  fit.DeltaHat *= c;
  fit.DeltaInvHat /= c;
  fit.SigmaHat /= c;
  fit.SigmaInvHat *= c;
}

}  // namespace

TrcmFit TrcmFit::from_covariances(const Matrix& sigma, const Matrix& delta) {
  require_spd(sigma, "Sigma");
  require_spd(delta, "Delta");
  TrcmFit fit;
  fit.SigmaHat = sigma;
  fit.DeltaHat = delta;
  fit.SigmaInvHat = spd_inverse(sigma);
  fit.DeltaInvHat = spd_inverse(delta);
  fit.converged = true;
  fit.deltaIsDiagonal = is_diagonal(fit.DeltaInvHat);
  fit.sigmaIsDiagonal = is_diagonal(fit.SigmaInvHat);
  normalize_trace(fit);
  return fit;
}

TrcmFit fit_trcm(const Matrix& noise, double lambda, const TrcmOptions& options) {
  const Index m = noise.rows();
  const Index n = noise.cols();
  if (m < 2 || n < 2) throw ParameterError("fit_trcm: noise must be at least 2 x 2");
  if (!(lambda >= 0)) throw ParameterError("fit_trcm: lambda must be nonnegative");
  if (!noise.allFinite()) throw ParameterError("fit_trcm: noise contains non-finite values");
  if (options.maxIter < 1) throw ParameterError("fit_trcm: maxIter must be positive");

  const double ms = static_cast<double>(m);
  const double ns = static_cast<double>(n);
  const double rho_sigma = 2.0 * lambda * ms / ns;
  const double rho_delta = 2.0 * lambda * ns / ms;

  TrcmFit fit;
  fit.lambda = lambda;
  Matrix delta_inv = Matrix::Identity(n, n);
  Matrix sigma_inv;
  GlassoResult<double> sigma_state, delta_state;
  bool warm = false;
  double previous = -std::numeric_limits<double>::infinity();

  for (int it = 1; it <= options.maxIter; ++it) {
    const Matrix s_sigma = loaded(symmetrized(noise * delta_inv * noise.transpose() / ns), options.loading);
    sigma_state = glasso_or_throw(s_sigma, rho_sigma, options.glasso, warm ? &sigma_state : nullptr);
    sigma_inv = sigma_state.theta;

    const Matrix s_delta = loaded(symmetrized(noise.transpose() * sigma_inv * noise / ms), options.loading);
    delta_state = glasso_or_throw(s_delta, rho_delta, options.glasso, warm ? &delta_state : nullptr);
    delta_inv = delta_state.theta;
    warm = true;

    const double objective = penalized_loglik(noise, sigma_inv, delta_inv, lambda);
    fit.objectiveTrace.push_back(objective);
    fit.iterations = it;
    if (it > 1 && std::abs(objective - previous) / (ms * ns / 2.0) < options.tol) {
      fit.converged = true;
      break;
    }
    previous = objective;
  }

  fit.finalObjective = fit.objectiveTrace.back();
  fit.SigmaInvHat = sigma_inv;
  fit.DeltaInvHat = delta_inv;
  fit.SigmaHat = spd_inverse(sigma_inv);
  fit.DeltaHat = spd_inverse(delta_inv);
  fit.deltaIsDiagonal = is_diagonal(delta_inv);
  fit.sigmaIsDiagonal = is_diagonal(sigma_inv);
  normalize_trace(fit);
  return fit;
}

double lambda_max(const Matrix& noise) {
  const double ms = static_cast<double>(noise.rows());
  const double ns = static_cast<double>(noise.cols());
  const double off_sigma = max_off_diagonal(noise * noise.transpose() / ns);
  const double off_delta = max_off_diagonal(noise.transpose() * noise / ms);
  return std::max(ns * off_sigma / (2.0 * ms), ms * off_delta / (2.0 * ns));
}

std::vector<double> default_lambda_grid(const Matrix& noise, int points, double decades) {
  if (points < 1) throw ParameterError("lambda grid needs at least one point");
  const double top = lambda_max(noise);
  if (!(top > 0)) throw DegenerateError("lambda grid: noise has no off-diagonal covariance");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    const double frac = points == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(points - 1);
    grid[static_cast<std::size_t>(k)] = top * std::pow(10.0, -decades * (1.0 - frac));
  }
  return grid;
}

CvResult cross_validate_lambda(const Matrix& noise, const std::vector<double>& grid, int folds, std::uint64_t seed,
                               const TrcmOptions& options, int threads) {
  const Index m = noise.rows();
  const Index n = noise.cols();
  if (folds < 2) throw ParameterError("cross_validate_lambda: need at least two folds");
  if (folds > n) throw ParameterError("cross_validate_lambda: more folds than columns");
  if (grid.empty()) throw ParameterError("cross_validate_lambda: empty lambda grid");
  for (double l : grid)
    if (!(l > 0)) throw ParameterError("cross_validate_lambda: grid values must be positive");

  CvResult out;
  out.grid = grid;
  if (grid.size() == 1) out.warnings.push_back("lambda grid has a single value; cross-validation is a forced choice");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Engine engine = make_stream(seed, {stream::kFolds});
  std::shuffle(order.begin(), order.end(), engine);
  out.foldOf.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < order.size(); ++i)
    out.foldOf[static_cast<std::size_t>(order[i])] = static_cast<int>(i % static_cast<std::size_t>(folds));

  const double log2pi = std::log(2.0 * std::numbers::pi);
  const std::size_t tasks = grid.size() * static_cast<std::size_t>(folds);
  std::vector<double> partial(tasks, 0.0);
  std::vector<std::string> failures(tasks);

  detail::parallel_for(tasks, threads, [&](std::size_t task) {
    const double lambda = grid[task / static_cast<std::size_t>(folds)];
    const int fold = static_cast<int>(task % static_cast<std::size_t>(folds));
    std::vector<Index> train, test;
    for (Index j = 0; j < n; ++j) (out.foldOf[static_cast<std::size_t>(j)] == fold ? test : train).push_back(j);
    const Matrix train_noise = noise(Eigen::all, train);
    try {
      const TrcmFit fit = fit_trcm(train_noise, lambda, options);
      const double logdet = log_det_spd(fit.SigmaHat);
      double score = 0.0;
      for (Index j : test) {
        const Vector col = noise.col(j);
        score -= 0.5 * (logdet + col.dot(fit.SigmaInvHat * col) + static_cast<double>(m) * log2pi);
      }
      partial[task] = score;
    } catch (const ConvergenceError& e) {
      partial[task] = -std::numeric_limits<double>::infinity();
      failures[task] = e.what();
    }
  });

  out.cvScores.assign(grid.size(), 0.0);
  for (std::size_t task = 0; task < tasks; ++task) {
    out.cvScores[task / static_cast<std::size_t>(folds)] += partial[task];
    if (!failures[task].empty())
      out.warnings.push_back("lambda " + std::to_string(grid[task / static_cast<std::size_t>(folds)]) +
                             ": " + failures[task]);
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double s = out.cvScores[k];
    const double b = out.cvScores[best];
    if (s > b || (s == b && grid[k] > grid[best])) best = k;
  }
  out.bestLambda = grid[best];
  if (grid.size() > 1) {
    const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
    if (out.bestLambda == *lo || out.bestLambda == *hi)
      out.warnings.push_back("cross-validated lambda " + std::to_string(out.bestLambda) + " lies on the grid edge");
  }
  return out;
}

}  // namespace sphering
