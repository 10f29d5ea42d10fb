#pragma once

#include "sphering/errors.hpp"
#include "sphering/linalg.hpp"
#include "sphering/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace sphering {

struct GlassoOptions {
  /// KKT tolerance, in units of mean(diag S).
  double tol = 1e-6;
  int maxSweeps = 500;
  int maxInner = 100000;
};

template <typename Scalar>
struct GlassoResult {
  MatrixX<Scalar> theta;  ///< inverse-covariance estimate
  MatrixX<Scalar> w;      ///< working covariance, ~theta^{-1}
  MatrixX<Scalar> beta;   ///< column j holds the lasso coefficients of column j (entry j unused)
  int sweeps = 0;
  Scalar kkt = 0;         ///< max KKT residual of theta, absolute units
  bool converged = false;
};

namespace detail {

template <typename Scalar>
Scalar soft_threshold(Scalar z, Scalar t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return Scalar(0);
}

}  // namespace detail

/// Max violation of the stationarity condition
///   theta^{-1} - S - rho * Gamma = 0,  Gamma in the subdifferential of |theta|_1
/// for the objective log|theta| - tr(theta S) - rho |theta|_1 (diagonal included).
template <typename D1, typename D2>
typename D1::Scalar glasso_kkt_residual(const Eigen::MatrixBase<D1>& s, const Eigen::MatrixBase<D2>& theta,
                                        typename D1::Scalar rho) {
  using Scalar = typename D1::Scalar;
  const MatrixX<Scalar> inv = spd_inverse(theta);
  Scalar worst = 0;
  for (Index j = 0; j < s.cols(); ++j) {
    for (Index i = 0; i < s.rows(); ++i) {
      const Scalar g = inv(i, j) - s(i, j);
      Scalar r;
      if (theta(i, j) > 0)
        r = std::abs(g - rho);
      else if (theta(i, j) < 0)
        r = std::abs(g + rho);
      else
        r = std::max(Scalar(0), std::abs(g) - rho);
      worst = std::max(worst, r);
    }
  }
  return worst;
}

/// log|theta| - tr(theta S) - rho |theta|_1
template <typename D1, typename D2>
typename D1::Scalar glasso_objective(const Eigen::MatrixBase<D1>& s, const Eigen::MatrixBase<D2>& theta,
                                     typename D1::Scalar rho) {
  return log_det_spd(theta) - (theta.cwiseProduct(s.transpose())).sum() - rho * entrywise_l1(theta);
}

/// L1-penalized Gaussian likelihood maximizer (graphical lasso): block
/// coordinate descent over columns of the working covariance W, each column
/// solving a lasso by cyclic coordinate descent with an active set. The
/// penalty covers the diagonal, so W_jj = S_jj + rho throughout.
///
/// Does not throw on the sweep cap; check `converged` (see glasso_or_throw).
/// `warm` may carry a previous solution of the same dimension.
template <typename Derived>
GlassoResult<typename Derived::Scalar> glasso(const Eigen::MatrixBase<Derived>& s_in, typename Derived::Scalar rho,
                                              const GlassoOptions& options = {},
                                              const GlassoResult<typename Derived::Scalar>* warm = nullptr) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> s = s_in.derived();
  const Index d = s.rows();
  if (d != s.cols() || d == 0) throw ParameterError("glasso: S must be square and non-empty");
  if (!is_symmetric(s)) throw ParameterError("glasso: S is not symmetric");
  if (!(rho >= 0)) throw ParameterError("glasso: rho must be nonnegative");
  for (Index i = 0; i < d; ++i)
    if (!(s(i, i) + rho > 0)) throw ParameterError("glasso: S_ii + rho must be positive");

  const Scalar scale = s.diagonal().mean();
  const Scalar tol = static_cast<Scalar>(options.tol) * scale;

  GlassoResult<Scalar> out;
  MatrixX<Scalar>& w = out.w;
  MatrixX<Scalar>& beta = out.beta;
  if (warm && warm->w.rows() == d && warm->beta.rows() == d) {
    w = warm->w;
    beta = warm->beta;
  } else {
    w = s;
    beta = MatrixX<Scalar>::Zero(d, d);
  }
  w.diagonal() = s.diagonal().array() + rho;

  if (d == 1) {
    out.theta = MatrixX<Scalar>::Constant(1, 1, Scalar(1) / w(0, 0));
    out.kkt = glasso_kkt_residual(s, out.theta, rho);
    out.converged = true;
    return out;
  }

  // Warm starts must be positive definite; fall back to a cold start otherwise.
  if (warm) {
    Eigen::LLT<MatrixX<Scalar>> llt(w);
    if (llt.info() != Eigen::Success) {
      w = s;
      w.diagonal().array() += rho;
      beta.setZero();
    }
  }

  VectorX<Scalar> resid(d);
  std::vector<Index> active;
  active.reserve(static_cast<std::size_t>(d));
  Scalar sweep_tol = tol;

  auto solve_column = [&](Index j) {
    // resid_k = s_kj - sum_{l != j} W_kl beta_lj, for k != j
    resid = s.col(j);
    for (Index l = 0; l < d; ++l) {
      const Scalar b = beta(l, j);
      if (l != j && b != 0) resid.noalias() -= w.col(l) * b;
    }
    const Scalar inner_tol =
        std::max(Scalar(1e-3) * sweep_tol, Scalar(16) * std::numeric_limits<Scalar>::epsilon() * scale);
    auto pass = [&](bool full) {
      Scalar biggest = 0;
      auto visit = [&](Index k) {
        const Scalar wkk = w(k, k);
        const Scalar old = beta(k, j);
        const Scalar fresh = detail::soft_threshold(resid(k) + wkk * old, rho) / wkk;
        if (fresh == old) return;
        const Scalar delta = fresh - old;
        resid.noalias() -= w.col(k) * delta;
        beta(k, j) = fresh;
        biggest = std::max(biggest, std::abs(delta) * wkk);
      };
      if (full) {
        for (Index k = 0; k < d; ++k)
          if (k != j) visit(k);
      } else {
        for (Index k : active) visit(k);
      }
      return biggest;
    };
    int passes = 0;
    while (passes++ < options.maxInner) {
      if (pass(true) <= inner_tol) break;
      active.clear();
      for (Index k = 0; k < d; ++k)
        if (k != j && beta(k, j) != 0) active.push_back(k);
      while (passes++ < options.maxInner)
        if (pass(false) <= inner_tol) break;
    }
    // W11 beta = s12 - resid
    Scalar change = 0;
    for (Index k = 0; k < d; ++k) {
      if (k == j) continue;
      const Scalar value = s(k, j) - resid(k);
      change = std::max(change, std::abs(value - w(k, j)));
      w(k, j) = value;
      w(j, k) = value;
    }
    return change;
  };

  auto assemble_theta = [&]() {
    MatrixX<Scalar> theta(d, d);
    for (Index j = 0; j < d; ++j) {
      Scalar dot = 0;
      for (Index k = 0; k < d; ++k)
        if (k != j) dot += w(k, j) * beta(k, j);
      const Scalar tjj = Scalar(1) / (w(j, j) - dot);
      for (Index k = 0; k < d; ++k) theta(k, j) = k == j ? tjj : -beta(k, j) * tjj;
    }
    return MatrixX<Scalar>((theta + theta.transpose()) / Scalar(2));
  };

  auto checked_kkt = [&](const MatrixX<Scalar>& theta) {
    if (!theta.allFinite()) return std::numeric_limits<Scalar>::infinity();
    Eigen::LLT<MatrixX<Scalar>> llt(theta);
    if (llt.info() != Eigen::Success) return std::numeric_limits<Scalar>::infinity();
    const Scalar r = glasso_kkt_residual(s, theta, rho);
    return std::isfinite(r) ? r : std::numeric_limits<Scalar>::infinity();
  };

  bool cold = !warm;
  for (out.sweeps = 1; out.sweeps <= options.maxSweeps; ++out.sweeps) {
    Scalar change = 0;
    for (Index j = 0; j < d; ++j) {
      const Scalar c = solve_column(j);
      change = std::isfinite(c) && std::isfinite(change) ? std::max(change, c)
                                                         : std::numeric_limits<Scalar>::infinity();
    }
    if (!std::isfinite(change) || !w.allFinite() || !beta.allFinite()) {
      if (cold) break;
      // A diverging warm start is abandoned for a cold start.
      cold = true;
      w = s;
      w.diagonal().array() += rho;
      beta.setZero();
      sweep_tol = tol;
      continue;
    }
    if (change > sweep_tol) continue;
    out.theta = assemble_theta();
    out.kkt = checked_kkt(out.theta);
    if (out.kkt <= tol) {
      out.converged = true;
      return out;
    }
    sweep_tol /= Scalar(10);
  }
  out.sweeps = std::min(out.sweeps, options.maxSweeps);
  out.theta = assemble_theta();
  out.kkt = checked_kkt(out.theta);
  out.converged = false;
  return out;
}

/// glasso() that throws ConvergenceError (carrying the KKT residual) when the
/// sweep cap is reached.
template <typename Derived>
GlassoResult<typename Derived::Scalar> glasso_or_throw(const Eigen::MatrixBase<Derived>& s,
                                                       typename Derived::Scalar rho,
                                                       const GlassoOptions& options = {},
                                                       const GlassoResult<typename Derived::Scalar>* warm = nullptr) {
  auto result = glasso(s, rho, options, warm);
  if (!result.converged)
    throw ConvergenceError("glasso did not converge in " + std::to_string(options.maxSweeps) +
                               " sweeps (KKT residual " + std::to_string(static_cast<double>(result.kkt)) + ")",
                           static_cast<double>(result.kkt));
  return result;
}

}  // namespace sphering
