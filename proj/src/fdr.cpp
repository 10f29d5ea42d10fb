#include "sphering/fdr.hpp"

#include "sphering/rng.hpp"

#include <algorithm>
#include <numeric>

namespace sphering {

namespace {

void validate_p(const Vector& p) {
  for (Index i = 0; i < p.size(); ++i)
    if (!(p(i) >= 0.0 && p(i) <= 1.0)) throw ParameterError("p-values must lie in [0, 1]");
}

void validate_q(double q) {
  if (!(q > 0.0 && q < 1.0)) throw ParameterError("FDR level q must lie in (0, 1)");
}

std::vector<Index> ascending_order(const Vector& p) {
  std::vector<Index> order(static_cast<std::size_t>(p.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return p(a) < p(b); });
  return order;
}

std::vector<Index> step_up(const Vector& p, double level) {
  const std::vector<Index> order = ascending_order(p);
  const double m = static_cast<double>(p.size());
  std::size_t k = 0;
  for (std::size_t i = order.size(); i > 0; --i) {
    if (p(order[i - 1]) <= static_cast<double>(i) * level / m) {
      k = i;
      break;
    }
  }
  std::vector<Index> rejected(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(rejected.begin(), rejected.end());
  return rejected;
}

/// min_{j >= rank} factor * p_(j) / j, capped at 1.
Vector running_min_adjust(const Vector& p, double factor) {
  const std::vector<Index> order = ascending_order(p);
  Vector out(p.size());
  double running = 1.0;
  for (std::size_t i = order.size(); i > 0; --i) {
    running = std::min(running, factor * p(order[i - 1]) / static_cast<double>(i));
    out(order[i - 1]) = running;
  }
  return out;
}

}  // namespace

double harmonic(Index m) {
  double h = 0.0;
  for (Index i = m; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

std::vector<Index> bh_stepup(const Vector& p, double q) {
  validate_p(p);
  validate_q(q);
  return step_up(p, q);
}

std::vector<Index> by_stepup(const Vector& p, double q) {
  validate_p(p);
  validate_q(q);
  return step_up(p, q / harmonic(p.size()));
}

Vector bh_adjust(const Vector& p) {
  validate_p(p);
  return running_min_adjust(p, static_cast<double>(p.size()));
}

Vector by_adjust(const Vector& p) {
  validate_p(p);
  return running_min_adjust(p, static_cast<double>(p.size()) * harmonic(p.size()));
}

PermutationFdr permutation_fdr(const DataMatrix& x, int permutations, std::uint64_t seed) {
  if (permutations < 100) throw ParameterError("permutation_fdr: need at least 100 permutations");
  const ClassLabels& labels = x.labels();
  const Index m = x.rows();
  const TestStatVector observed = row_t_stats(x);

  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(permutations) * static_cast<std::size_t>(m));
  const std::vector<std::uint8_t> tags = labels.tags();
  for (int b = 0; b < permutations; ++b) {
    std::vector<std::uint8_t> shuffled = tags;
    Engine engine = make_stream(seed, {stream::kPermutation, static_cast<std::uint64_t>(b)});
    std::shuffle(shuffled.begin(), shuffled.end(), engine);
    const TestStatVector null = row_t_stats(x.values(), ClassLabels::from_tags(shuffled));
    for (Index i = 0; i < m; ++i) pooled.push_back(std::abs(null.values(i)));
  }
  std::sort(pooled.begin(), pooled.end());

  PermutationFdr out;
  out.p.resize(m);
  const double md = static_cast<double>(m);
  for (Index i = 0; i < m; ++i) {
    const auto first = std::lower_bound(pooled.begin(), pooled.end(), std::abs(observed.values(i)));
    const double exceed = static_cast<double>(pooled.end() - first);
    out.p(i) = (1.0 + exceed / md) / (static_cast<double>(permutations) + 1.0);
  }
  const double above_half = static_cast<double>((out.p.array() > 0.5).count()) / md;
  out.pi0Hat = std::clamp(2.0 * above_half, 0.05, 1.0);
  out.q = running_min_adjust(out.p, out.pi0Hat * md);
  if (permutations < 1000)
    out.warnings.push_back("permutation_fdr: " + std::to_string(permutations) +
                           " permutations give p-value resolution coarser than 1/(1000 m)");
  return out;
}

Vector curve_from_adjusted(const std::vector<Index>& ranking, const Vector& adjusted) {
  if (static_cast<Index>(ranking.size()) != adjusted.size())
    throw ParameterError("curve_from_adjusted: ranking and values differ in length");
  Vector curve(adjusted.size());
  for (std::size_t k = 0; k < ranking.size(); ++k) curve(static_cast<Index>(k)) = adjusted(ranking[k]);
  return curve;
}

Vector curve_from_local_fdr(const std::vector<Index>& ranking, const Vector& local_fdr) {
  if (static_cast<Index>(ranking.size()) != local_fdr.size())
    throw ParameterError("curve_from_local_fdr: ranking and values differ in length");
  Vector curve(local_fdr.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    sum += local_fdr(ranking[k]);
    curve(static_cast<Index>(k)) = sum / static_cast<double>(k + 1);
  }
  return curve;
}

Vector true_fdp_curve(const std::vector<Index>& ranking, const std::vector<Index>& truth_set) {
  std::vector<std::uint8_t> non_null(ranking.size(), 0);
  for (Index i : truth_set) {
    if (i < 0 || i >= static_cast<Index>(ranking.size())) throw ParameterError("truth set index out of range");
    non_null[static_cast<std::size_t>(i)] = 1;
  }
  Vector curve(static_cast<Index>(ranking.size()));
  Index false_hits = 0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    false_hits += non_null[static_cast<std::size_t>(ranking[k])] ? 0 : 1;
    curve(static_cast<Index>(k)) = static_cast<double>(false_hits) / static_cast<double>(k + 1);
  }
  return curve;
}

FdrReport fdr_curve(std::vector<Index> ranking, std::map<std::string, Vector> estimates,
                    std::optional<std::vector<Index>> truth_set) {
  const Index m = static_cast<Index>(ranking.size());
  std::vector<std::uint8_t> seen(ranking.size(), 0);
  for (Index i : ranking) {
    if (i < 0 || i >= m || seen[static_cast<std::size_t>(i)]++) throw ParameterError("ranking is not a permutation");
  }
  FdrReport report;
  for (auto& [name, curve] : estimates) {
    if (curve.size() != m) throw ParameterError("estimate curve '" + name + "' has the wrong length");
    curve = curve.cwiseMax(0.0).cwiseMin(1.0);
  }
  if (truth_set) {
    std::sort(truth_set->begin(), truth_set->end());
    report.trueFdp = true_fdp_curve(ranking, *truth_set);
  }
  report.ranking = std::move(ranking);
  report.perProcedure = std::move(estimates);
  report.truthSet = std::move(truth_set);
  return report;
}

}  // namespace sphering
