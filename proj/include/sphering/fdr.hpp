#pragma once

#include "sphering/stats.hpp"
#include "sphering/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sphering {

/// Benjamini-Hochberg step-up: rejects the k smallest p-values,
/// k = max{i : p_(i) <= i q / m}. Returns sorted row indices.
std::vector<Index> bh_stepup(const Vector& p, double q);

/// Benjamini-Yekutieli: BH at level q / H_m.
std::vector<Index> by_stepup(const Vector& p, double q);

/// BH adjusted p-values min_{j >= rank} m p_(j) / j, capped at 1.
Vector bh_adjust(const Vector& p);
/// BY adjusted p-values (BH times H_m), capped at 1.
Vector by_adjust(const Vector& p);

/// Harmonic number H_m.
double harmonic(Index m);

struct PermutationFdr {
  Vector p;
  Vector q;
  double pi0Hat = 1.0;
  Warnings warnings;
};

/// Pooled-null permutation p-values and q-values. Each of B permutations of
/// the column labels recomputes every row T; the B m null |T*| are pooled:
///   p_i = (1 + #{|T*| >= |T_i|} / m) / (B + 1)
/// pi0Hat = clamp(2 * fraction(p > 0.5), 0.05, 1) and
/// q_(i) = min_{j >= i} pi0Hat m p_(j) / j.
/// Permutation b draws from the stream (seed, b).
PermutationFdr permutation_fdr(const DataMatrix& x, int permutations, std::uint64_t seed);

/// Converts statistics to z-scores: t kinds through Phi^{-1}(F_t(T)),
/// z kind unchanged.
Vector to_z_scores(const TestStatVector& stats);

struct EmpiricalNull {
  double delta = 0.0;  ///< null mean
  double sigma = 1.0;  ///< null standard deviation
  double pi0 = 1.0;
  Vector z;
  Vector localFdr;
  Warnings warnings;

  /// Average local fdr over rows with |z| > threshold (0 when none).
  double tail_fdr(double threshold) const;
};

/// Empirical-null local fdr. The null N(delta, sigma^2) is matched to the
/// mean and variance of the central `pi0Window` mass of z; the mixture
/// density is a Poisson regression of 60 histogram counts on a degree-7
/// polynomial (Lindsey's method). localFdr = min(1, pi0 f0 / f).
/// Requires m >= 100; throws DegenerateError on constant statistics.
EmpiricalNull empirical_null_fdr(const TestStatVector& stats, double pi0Window = 0.8);

/// Per-procedure FDR estimates against rejection count and, when the truth is
/// known, the true false discovery proportion.
struct FdrReport {
  std::vector<Index> ranking;
  /// procedure -> estimate at k = 1..m (entry k-1), clamped to [0, 1]
  std::map<std::string, Vector> perProcedure;
  std::optional<Vector> trueFdp;
  std::optional<std::vector<Index>> truthSet;  ///< non-null rows, sorted

  Index size() const { return static_cast<Index>(ranking.size()); }
};

/// Estimate at each rejection count k: value of the k-th ranked row.
Vector curve_from_adjusted(const std::vector<Index>& ranking, const Vector& adjusted);
/// Estimate at each rejection count k: mean local fdr of the top k rows.
Vector curve_from_local_fdr(const std::vector<Index>& ranking, const Vector& localFdr);

/// trueFdp[k-1] = |top-k \ truth| / k.
Vector true_fdp_curve(const std::vector<Index>& ranking, const std::vector<Index>& truthSet);

/// Assembles an FdrReport; throws ParameterError if `ranking` is not a
/// permutation or a curve has the wrong length.
FdrReport fdr_curve(std::vector<Index> ranking, std::map<std::string, Vector> estimates,
                    std::optional<std::vector<Index>> truthSet);

}  // namespace sphering
