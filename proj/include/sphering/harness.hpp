#pragma once

#include "sphering/core.hpp"
#include "sphering/fdr.hpp"
#include "sphering/io.hpp"
#include "sphering/sphere.hpp"
#include "sphering/stats.hpp"
#include "sphering/trcm.hpp"
#include "sphering/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sphering {

enum class Generator { matrix_normal, latent_variable, random_effects };
enum class Pipeline { standard, sphered };

std::string to_string(Generator g);
std::string to_string(Pipeline p);
Generator generator_from_string(const std::string& name);
Pipeline pipeline_from_string(const std::string& name);

/// Structured covariance or "empirical" (estimated from a source matrix).
struct CovSpec {
  enum class Kind { identity, ar1, block_ar1, empirical };
  Kind kind = Kind::identity;
  double rho = 0.0;
  Index block = 0;

  std::string kind_name() const;
  /// Materializes a structured covariance; throws ConfigError for `empirical`.
  Matrix materialize(Index dim) const;
};

struct Scenario {
  std::string name = "custom";
  Index m = 250;
  Index n = 50;
  Index n1 = 25;
  Index n2 = 25;
  /// The first `nonNull` rows carry psi1 = +effect (first half) / -effect
  /// (second half) and psi2 = -psi1; the rest are null.
  Index nonNull = 50;
  double effect = 0.5;
  CovSpec rowCov;
  CovSpec colCov;
  std::string empiricalFile;
  double empiricalLoading = 1e-3;
  Generator generator = Generator::matrix_normal;
  /// Latent-variable model: number of Bernoulli factors and loading scale.
  Index latentFactors = 2;
  double latentScale = 1.0;
  /// Random-effects model: batch width, batch variance and cycled batch means.
  Index batchSize = 5;
  double batchVariance = 0.5;
  std::vector<double> batchMeans = {-0.5, -0.25, 0.0, 0.25, 0.5};
  int reps = 10;
  std::uint64_t seed = 20100101;
  Pipeline pipeline = Pipeline::standard;
  double pi0 = 0.8;
  int permutations = 1000;
  int folds = 5;
  int lambdaPoints = 6;
  double lambdaDecades = 1.0;

  /// Throws ConfigError when the invariants (n1 + n2 = n, sizes, ranges) fail.
  void validate() const;
  SignalSpec signal() const;
  std::vector<Index> truth_set() const;
};

/// Names accepted by preset().
std::vector<std::string> preset_names();
/// Paper-scale scenarios: sigma{1,2}_{identity,delta1,delta2}, latent,
/// random_effects. Throws ConfigError for unknown names.
Scenario preset(const std::string& name);
/// 3 replicates and 200 permutations.
Scenario desk(Scenario scenario);

/// Applies key=value pairs; a `preset` key is applied first. Unknown keys and
/// malformed values throw ConfigError.
Scenario scenario_from_key_values(const io::KeyValues& values);
io::KeyValues scenario_to_key_values(const Scenario& scenario);
Scenario read_scenario(const std::filesystem::path& path);
void write_scenario(const std::filesystem::path& path, const Scenario& scenario);

/// Covariance truth estimated from a source matrix.
struct CovariancePair {
  Matrix sigma;
  Matrix delta;
};

/// Subsamples mSub rows and nSub columns (stream (seed, kSubsample)),
/// double-centers, forms the empirical pair and adds `loading` times the mean
/// diagonal to each diagonal. Throws ConfigError if the file is too small or
/// the loaded pair is still not positive definite.
CovariancePair empirical_cov_scenario(const std::filesystem::path& matrixFile, Index mSub, Index nSub,
                                      std::uint64_t seed, double loading = 1e-3);

/// Draws replicate data for a scenario; covariance roots are computed once.
class ScenarioGenerator {
public:
  explicit ScenarioGenerator(const Scenario& scenario);

  /// Deterministic in (scenario.seed, rep).
  DataMatrix operator()(int rep) const;

  const Scenario& scenario() const { return scenario_; }
  const Matrix& sigma() const { return sigma_; }
  const Matrix& delta() const { return delta_; }

private:
  Scenario scenario_;
  Matrix sigma_;
  Matrix delta_;
  Matrix sigma_root_;
  std::optional<MatrixNormalSampler> sampler_;
  Matrix signal_;
};

DataMatrix generate(const Scenario& scenario, int rep);

struct AnalysisOptions {
  Pipeline pipeline = Pipeline::standard;
  double pi0 = 0.8;
  int permutations = 1000;
  int folds = 5;
  int lambdaPoints = 6;
  double lambdaDecades = 1.0;
  /// Procedures to run, a subset of io::kProcedures.
  std::vector<std::string> procedures = io::kProcedures;
  TrcmOptions trcm{};
  int threads = 1;

  static AnalysisOptions from_scenario(const Scenario& scenario);
};

struct Analysis {
  /// Data the statistics were computed from (centered or sphered).
  DataMatrix data;
  /// Final statistics (central-matched in the sphered pipeline).
  TestStatVector stats;
  Vector p;
  std::vector<Index> ranking;
  std::map<std::string, Vector> estimates;
  std::optional<TrcmFit> fit;
  std::optional<CvResult> cv;
  std::optional<CentralMatchResult> centralMatch;
  /// psi1Hat - psi2Hat of the input decomposition.
  Vector contrast;
  Warnings warnings;
};

/// standard: double-center, row T statistics, p-values against t_{n-2}.
/// sphered: decompose, fit the TRCM (cross-validated unless `fit` is given),
/// sphere, row T statistics, central matching, p-values against t_{n-2}.
/// Leaves `estimates` empty.
Analysis compute_statistics(const DataMatrix& x, const AnalysisOptions& options, std::uint64_t seed,
                            const TrcmFit* fit = nullptr);

/// compute_statistics followed by the requested FDR procedures, each giving an
/// estimate curve over the |T| ranking.
Analysis analyze(const DataMatrix& x, const AnalysisOptions& options, std::uint64_t seed);


struct RepOutcome {
  int rep = 0;
  std::optional<FdrReport> report;
  std::string error;
  Warnings warnings;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double scaleFactor = std::numeric_limits<double>::quiet_NaN();

  bool ok() const { return report.has_value(); }
};

inline constexpr std::array<Index, 5> kSummaryCounts = {40, 45, 50, 55, 60};

struct MeanSe {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
};

/// Rows: kSummaryCounts. Columns: "true_fdp" and each procedure.
struct Summary {
  std::vector<Index> counts;
  std::map<std::string, std::vector<MeanSe>> columns;
  int reps = 0;

  const MeanSe& at(const std::string& column, Index k) const;
};

/// Mean and standard error (sd / sqrt(reps)) over the reports, in rep order.
Summary summarize(const std::vector<FdrReport>& reports);

struct RunResult {
  Scenario scenario;
  std::vector<RepOutcome> perRep;
  Summary summary;

  std::vector<FdrReport> reports() const;
};

/// Replicates run on `threads` workers; every replicate draws from streams
/// keyed by (scenario.seed, rep), so the result does not depend on threads.
/// A failing replicate is recorded and the rest continue.
RunResult run_scenario(const Scenario& scenario, int threads = 1);

/// Writes summary.csv, fdr_curve.csv and fdr_curve.svg (first successful
/// replicate), reps/rep_NNN.csv, diagnostics.csv and scenario.cfg. Throws
/// ParameterError when no replicate succeeded and IoError on write failure.
void emit_tables(const RunResult& result, const std::filesystem::path& outDir);

void write_summary_csv(const std::filesystem::path& path, const Summary& summary);
Summary read_summary_csv(const std::filesystem::path& path);

/// Rebuilds summary.csv and fdr_curve.svg from the per-replicate curves of an
/// emit_tables directory.
Summary rebuild_report(const std::filesystem::path& dir);

}  // namespace sphering
