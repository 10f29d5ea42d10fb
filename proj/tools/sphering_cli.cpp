#include "sphering/errors.hpp"
#include "sphering/harness.hpp"
#include "sphering/io.hpp"
#include "sphering/sphere.hpp"
#include "sphering/svg.hpp"
#include "sphering/trcm.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace sphering;

namespace {

struct Global {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out = ".";
  bool quiet = false;

  std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }
};

constexpr std::uint64_t kDefaultSeed = 20100101;

void report_warnings(const Global& g, const Warnings& warnings) {
  if (g.quiet) return;
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Scenario load_scenario(const std::string& file, const std::string& presetName, bool deskScale) {
  if (!file.empty() && !presetName.empty()) throw ConfigError("give either --scenario or --preset, not both");
  Scenario s;
  if (!file.empty())
    s = read_scenario(file);
  else if (!presetName.empty())
    s = preset(presetName);
  else
    throw ConfigError("a scenario file (--scenario) or preset (--preset) is required");
  if (deskScale) s = desk(s);
  return s;
}

void print_summary(const Summary& s) {
  std::vector<std::string> order;
  if (s.columns.count("true_fdp")) order.push_back("true_fdp");
  for (const auto& name : io::kProcedures)
    if (s.columns.count(name)) order.push_back(name);
  std::cout << fmt::format("{:>6}", "k");
  for (const auto& name : order) std::cout << fmt::format("  {:>18}", name);
  std::cout << '\n';
  for (std::size_t row = 0; row < s.counts.size(); ++row) {
    std::cout << fmt::format("{:>6}", s.counts[row]);
    for (const auto& name : order) {
      const MeanSe& c = s.columns.at(name)[row];
      std::cout << fmt::format("  {:>8.4f} ({:>7.4f})", c.mean, c.se);
    }
    std::cout << '\n';
  }
  std::cout << "replicates: " << s.reps << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-sample large-scale inference on matrices with correlated rows and columns"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "Root random seed");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--quiet", g.quiet, "Suppress warnings on stderr");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Draw one replicate of a scenario");
  std::string sim_scenario, sim_preset;
  int sim_rep = 0;
  simulate->add_option("--scenario", sim_scenario, "Scenario file (key=value)");
  simulate->add_option("--preset", sim_preset, "Built-in scenario name");
  simulate->add_option("--rep", sim_rep, "Replicate index")->check(CLI::NonNegativeNumber);

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Fit the penalized row/column covariance model");
  std::string est_data;
  std::optional<double> est_lambda;
  int est_folds = 5, est_points = 6;
  double est_decades = 1.0;
  estimate->add_option("--data", est_data, "Labeled data CSV")->required();
  estimate->add_option("--lambda", est_lambda, "Penalty (cross-validated when omitted)");
  estimate->add_option("--folds", est_folds, "Cross-validation folds");
  estimate->add_option("--lambda-points", est_points, "Grid size");
  estimate->add_option("--lambda-decades", est_decades, "Grid span in decades below lambda_max");

  // sphere
  auto* sphere_cmd = app.add_subcommand("sphere", "Sphere data with a fitted covariance pair");
  std::string sph_data, sph_fit;
  sphere_cmd->add_option("--data", sph_data, "Labeled data CSV")->required();
  sphere_cmd->add_option("--fit", sph_fit, "Fit directory written by estimate")->required();

  // test
  auto* test = app.add_subcommand("test", "Row-wise two-sample statistics and p-values");
  std::string test_data, test_fit;
  bool test_sphered = false;
  double test_pi0 = 0.8;
  Index test_filter = 0;
  test->add_option("--data", test_data, "Labeled data CSV")->required();
  test->add_flag("--sphered", test_sphered, "Sphere before testing and central-match the statistics");
  test->add_option("--fit", test_fit, "Use this fit instead of cross-validating (with --sphered)");
  test->add_option("--pi0", test_pi0, "Central-matching null proportion");
  test->add_option("--filter", test_filter, "Keep the K rows with largest un-sphered |T| first");

  // fdr
  auto* fdr = app.add_subcommand("fdr", "False discovery rate estimates over the |T| ranking");
  std::string fdr_stats, fdr_data, fdr_truth, fdr_methods = "bh,by,perm,enull";
  int fdr_perms = 1000;
  double fdr_q = 0.1, fdr_pi0 = 0.8;
  fdr->add_option("--stats", fdr_stats, "Statistics CSV written by test")->required();
  fdr->add_option("--data", fdr_data, "Data the statistics came from (needed for perm)");
  fdr->add_option("--truth", fdr_truth, "Non-null row indices, one per line");
  fdr->add_option("--methods", fdr_methods, "Comma-separated subset of bh,by,perm,enull");
  fdr->add_option("--perms", fdr_perms, "Permutations for perm");
  fdr->add_option("--q", fdr_q, "Target FDR level for rejection counts");
  fdr->add_option("--pi0", fdr_pi0, "Central window for the empirical null");

  // study
  auto* study = app.add_subcommand("study", "Run a replicated simulation scenario and emit tables");
  std::string study_scenario, study_preset, study_pipeline;
  bool study_desk = false;
  std::optional<int> study_reps;
  study->add_option("--scenario", study_scenario, "Scenario file (key=value)");
  study->add_option("--preset", study_preset, "Built-in scenario name");
  study->add_flag("--desk", study_desk, "3 replicates and 200 permutations");
  study->add_option("--pipeline", study_pipeline, "standard or sphered (overrides the scenario)");
  study->add_option("--reps", study_reps, "Replicates (overrides the scenario)");

  // report
  auto* report = app.add_subcommand("report", "Rebuild summary.csv and fdr_curve.svg from a study directory");
  std::string report_dir;
  report->add_option("--dir", report_dir, "Study output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const fs::path out(g.out);
  try {
    if (*simulate) {
      Scenario s = load_scenario(sim_scenario, sim_preset, false);
      if (g.seed) s.seed = *g.seed;
      const ScenarioGenerator gen(s);
      io::write_data_csv(out / "data.csv", gen(sim_rep));
      io::write_index_list(out / "truth.txt", s.truth_set());
      io::write_matrix_csv(out / "sigma_true.csv", gen.sigma());
      io::write_matrix_csv(out / "delta_true.csv", gen.delta());
      write_scenario(out / "scenario.cfg", s);
      std::cout << "wrote " << (out / "data.csv").string() << '\n';
    } else if (*estimate) {
      const DataMatrix x = io::read_data_csv(est_data);
      const DecompositionFit dec = decompose(x);
      double lambda = 0.0;
      if (est_lambda) {
        lambda = *est_lambda;
      } else {
        const auto grid = default_lambda_grid(dec.noise, est_points, est_decades);
        const CvResult cv = cross_validate_lambda(dec.noise, grid, est_folds, g.seed_or(kDefaultSeed), {}, g.threads);
        report_warnings(g, cv.warnings);
        lambda = cv.bestLambda;
      }
      const TrcmFit fit = fit_trcm(dec.noise, lambda);
      if (!fit.converged)
        report_warnings(g, {fmt::format("flip-flop stopped after {} iterations without converging", fit.iterations)});
      io::write_fit(out / "fit", fit);
      std::cout << fmt::format("lambda={:.6g} iterations={} objective={:.10g}\n", fit.lambda, fit.iterations,
                               fit.finalObjective);
    } else if (*sphere_cmd) {
      const DataMatrix x = io::read_data_csv(sph_data);
      const SpheredData s = sphere(x, io::read_fit(sph_fit));
      report_warnings(g, s.warnings);
      io::write_data_csv(out / "sphered.csv", s.data());
      std::cout << "wrote " << (out / "sphered.csv").string() << '\n';
    } else if (*test) {
      DataMatrix x = io::read_data_csv(test_data);
      if (test_filter > 0) {
        FilteredRows f = filter_rows(x, test_filter);
        io::write_index_list(out / "index_map.txt", f.indexMap);
        x = std::move(f.data);
      }
      AnalysisOptions options;
      options.pipeline = test_sphered ? Pipeline::sphered : Pipeline::standard;
      options.pi0 = test_pi0;
      options.threads = g.threads;
      std::optional<TrcmFit> fit;
      if (!test_fit.empty()) {
        if (!test_sphered) throw ConfigError("--fit only applies with --sphered");
        fit = io::read_fit(test_fit);
      }
      const Analysis a = compute_statistics(x, options, g.seed_or(kDefaultSeed), fit ? &*fit : nullptr);
      report_warnings(g, a.warnings);
      io::KeyValues extra;
      if (a.centralMatch) {
        extra["pi0"] = io::format_double(a.centralMatch->pi0);
        extra["sigma_central_observed"] = io::format_double(a.centralMatch->sigmaCentralObserved);
        extra["sigma_central_reference"] = io::format_double(a.centralMatch->sigmaCentralReference);
        extra["scale_factor"] = io::format_double(a.centralMatch->scale_factor());
      }
      if (a.fit) extra["lambda"] = io::format_double(a.fit->lambda);
      io::write_stats_csv(out / "stats.csv", a.stats, a.p, extra);
      if (test_sphered) io::write_data_csv(out / "tested.csv", a.data);
      std::cout << "wrote " << (out / "stats.csv").string() << '\n';
    } else if (*fdr) {
      const io::StatsFile sf = io::read_stats_csv(fdr_stats);
      const auto methods = split_list(fdr_methods);
      if (methods.empty()) throw ConfigError("--methods is empty");
      const auto ranking = rank_by_magnitude(sf.stats.values);
      std::map<std::string, Vector> estimates;
      for (const auto& method : methods) {
        if (method == "bh") {
          estimates["bh"] = curve_from_adjusted(ranking, bh_adjust(sf.p));
        } else if (method == "by") {
          estimates["by"] = curve_from_adjusted(ranking, by_adjust(sf.p));
        } else if (method == "perm") {
          if (fdr_data.empty()) throw ConfigError("perm needs --data");
          const DataMatrix x = io::read_data_csv(fdr_data);
          if (x.rows() != sf.stats.size()) throw ConfigError("--data rows do not match the statistics");
          const PermutationFdr perm = permutation_fdr(x, fdr_perms, g.seed_or(kDefaultSeed));
          report_warnings(g, perm.warnings);
          estimates["perm"] = curve_from_adjusted(ranking, perm.q);
        } else if (method == "enull") {
          const EmpiricalNull en = empirical_null_fdr(sf.stats, fdr_pi0);
          report_warnings(g, en.warnings);
          estimates["enull"] = curve_from_local_fdr(ranking, en.localFdr);
        } else {
          throw ConfigError("unknown method '" + method + "' (bh, by, perm, enull)");
        }
      }
      std::optional<std::vector<Index>> truth;
      if (!fdr_truth.empty()) truth = io::read_index_list(fdr_truth);
      const FdrReport rep = fdr_curve(ranking, estimates, truth);
      io::write_fdr_curve_csv(out / "fdr_curve.csv", rep);
      std::map<std::string, Vector> curves = rep.perProcedure;
      if (rep.trueFdp) curves["true_fdp"] = *rep.trueFdp;
      io::write_text(out / "fdr_curve.svg", fdr_curve_svg(curves, "FDR estimates", 100));
      std::string rejections = "method,q,rejections\n";
      for (const auto& [name, curve] : rep.perProcedure) {
        Index count = 0;
        for (Index k = 0; k < curve.size(); ++k)
          if (curve(k) <= fdr_q) count = k + 1;
        if (name == "bh") count = static_cast<Index>(bh_stepup(sf.p, fdr_q).size());
        if (name == "by") count = static_cast<Index>(by_stepup(sf.p, fdr_q).size());
        rejections += fmt::format("{},{},{}\n", name, io::format_double(fdr_q), count);
        std::cout << fmt::format("{:>6}: {} rejections at q = {}\n", name, count, fdr_q);
      }
      io::write_text(out / "rejections.csv", rejections);
    } else if (*study) {
      Scenario s = load_scenario(study_scenario, study_preset, study_desk);
      if (g.seed) s.seed = *g.seed;
      if (!study_pipeline.empty()) s.pipeline = pipeline_from_string(study_pipeline);
      if (study_reps) s.reps = *study_reps;
      s.validate();
      const RunResult result = run_scenario(s, g.threads);
      for (const auto& r : result.perRep) {
        if (!r.ok()) std::cerr << "replicate " << r.rep << " failed: " << r.error << '\n';
        if (!g.quiet && !r.warnings.empty())
          std::cerr << "replicate " << r.rep << ": " << r.warnings.size() << " warning(s), first: " << r.warnings.front()
                    << '\n';
      }
      emit_tables(result, out);
      std::cout << s.name << " (" << to_string(s.pipeline) << ")\n";
      print_summary(result.summary);
    } else if (*report) {
      print_summary(rebuild_report(report_dir));
    }
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
