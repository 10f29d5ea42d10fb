#include "sphering/harness.hpp"

#include "parallel.hpp"
#include "sphering/errors.hpp"
#include "sphering/rng.hpp"
#include "sphering/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace sphering {

AnalysisOptions AnalysisOptions::from_scenario(const Scenario& scenario) {
  AnalysisOptions o;
  o.pipeline = scenario.pipeline;
  o.pi0 = scenario.pi0;
  o.permutations = scenario.permutations;
  o.folds = scenario.folds;
  o.lambdaPoints = scenario.lambdaPoints;
  o.lambdaDecades = scenario.lambdaDecades;
  return o;
}

namespace {

void append(Warnings& to, const Warnings& from) { to.insert(to.end(), from.begin(), from.end()); }

void check_procedures(const std::vector<std::string>& procedures) {
  if (procedures.empty()) throw ParameterError("analyze: no FDR procedures requested");
  for (const auto& name : procedures)
    if (std::find(io::kProcedures.begin(), io::kProcedures.end(), name) == io::kProcedures.end())
      throw ParameterError("analyze: unknown FDR procedure '" + name + "' (bh, by, perm, enull)");
}

bool wants(const std::vector<std::string>& procedures, const std::string& name) {
  return std::find(procedures.begin(), procedures.end(), name) != procedures.end();
}

}  // namespace

Analysis compute_statistics(const DataMatrix& x, const AnalysisOptions& options, std::uint64_t seed,
                            const TrcmFit* fit_in) {
  const ClassLabels& labels = x.labels();
  labels.require_pooled_variance();

  Analysis out;
  const DecompositionFit dec = decompose(x);
  out.contrast = dec.psi1Hat - dec.psi2Hat;

  if (options.pipeline == Pipeline::standard) {
    out.data = DataMatrix(double_center(x.values()), labels);
    out.stats = row_t_stats(out.data);
  } else {
    TrcmFit fit;
    if (fit_in) {
      fit = *fit_in;
    } else {
      const std::vector<double> grid = default_lambda_grid(dec.noise, options.lambdaPoints, options.lambdaDecades);
      CvResult cv = cross_validate_lambda(dec.noise, grid, options.folds, seed, options.trcm, options.threads);
      append(out.warnings, cv.warnings);
      fit = fit_trcm(dec.noise, cv.bestLambda, options.trcm);
      out.cv = std::move(cv);
      if (!fit.converged)
        out.warnings.push_back(fmt::format("TRCM fit at lambda {:.4g} stopped after {} iterations without converging",
                                           fit.lambda, fit.iterations));
    }
    SpheredData sphered = sphere(x, fit);
    append(out.warnings, sphered.warnings);
    out.data = sphered.data();
    TestStatVector raw = row_t_stats(out.data);
    raw.kind = StatKind::t_sphered;
    CentralMatchResult matched = central_match(raw, options.pi0);
    out.stats = matched.scaledStats;
    out.centralMatch = std::move(matched);
    out.fit = std::move(fit);
  }

  PValues p = p_values(out.stats);
  append(out.warnings, p.warnings);
  out.p = std::move(p.p);
  out.ranking = rank_by_magnitude(out.stats.values);
  return out;
}

Analysis analyze(const DataMatrix& x, const AnalysisOptions& options, std::uint64_t seed) {
  check_procedures(options.procedures);
  Analysis out = compute_statistics(x, options, seed);
  if (wants(options.procedures, "bh")) out.estimates["bh"] = curve_from_adjusted(out.ranking, bh_adjust(out.p));
  if (wants(options.procedures, "by")) out.estimates["by"] = curve_from_adjusted(out.ranking, by_adjust(out.p));
  if (wants(options.procedures, "perm")) {
    PermutationFdr perm = permutation_fdr(out.data, options.permutations, seed);
    append(out.warnings, perm.warnings);
    out.estimates["perm"] = curve_from_adjusted(out.ranking, perm.q);
  }
  if (wants(options.procedures, "enull")) {
    EmpiricalNull en = empirical_null_fdr(out.stats, options.pi0);
    append(out.warnings, en.warnings);
    out.estimates["enull"] = curve_from_local_fdr(out.ranking, en.localFdr);
  }
  return out;
}

const MeanSe& Summary::at(const std::string& column, Index k) const {
  const auto col = columns.find(column);
  if (col == columns.end()) throw ParameterError("summary has no column '" + column + "'");
  const auto row = std::find(counts.begin(), counts.end(), k);
  if (row == counts.end()) throw ParameterError("summary has no row for k = " + std::to_string(k));
  return col->second[static_cast<std::size_t>(row - counts.begin())];
}

namespace {

using Curves = std::map<std::string, Vector>;

Curves curves_of(const FdrReport& report) {
  Curves c = report.perProcedure;
  if (report.trueFdp) c["true_fdp"] = *report.trueFdp;
  return c;
}

std::vector<std::string> column_order(const std::vector<Curves>& reps) {
  std::vector<std::string> order;
  auto present = [&](const std::string& name) {
    return std::all_of(reps.begin(), reps.end(), [&](const Curves& c) { return c.count(name) > 0; });
  };
  if (present("true_fdp")) order.push_back("true_fdp");
  for (const auto& name : io::kProcedures)
    if (present(name)) order.push_back(name);
  return order;
}

Summary summarize_curves(const std::vector<Curves>& reps) {
  if (reps.empty()) throw ParameterError("summarize: no replicate results");
  Summary s;
  s.counts.assign(kSummaryCounts.begin(), kSummaryCounts.end());
  s.reps = static_cast<int>(reps.size());
  const double r = static_cast<double>(reps.size());
  for (const auto& name : column_order(reps)) {
    std::vector<MeanSe> cells;
    for (Index k : s.counts) {
      MeanSe cell;
      double sum = 0.0;
      bool complete = true;
      for (const auto& c : reps) {
        const Vector& v = c.at(name);
        if (v.size() < k) {
          complete = false;
          break;
        }
        sum += v(k - 1);
      }
      if (complete) {
        cell.mean = sum / r;
        if (reps.size() > 1) {
          double ss = 0.0;
          for (const auto& c : reps) ss += (c.at(name)(k - 1) - cell.mean) * (c.at(name)(k - 1) - cell.mean);
          cell.se = std::sqrt(ss / (r - 1.0)) / std::sqrt(r);
        }
      }
      cells.push_back(cell);
    }
    s.columns[name] = std::move(cells);
  }
  return s;
}

std::vector<std::string> summary_columns(const Summary& s) {
  std::vector<std::string> order;
  if (s.columns.count("true_fdp")) order.push_back("true_fdp");
  for (const auto& name : io::kProcedures)
    if (s.columns.count(name)) order.push_back(name);
  return order;
}

std::string plot_title(const Scenario& s) { return s.name + " (" + to_string(s.pipeline) + ")"; }

constexpr Index kPlotMaxK = 100;

}  // namespace

Summary summarize(const std::vector<FdrReport>& reports) {
  std::vector<Curves> reps;
  reps.reserve(reports.size());
  for (const auto& r : reports) reps.push_back(curves_of(r));
  return summarize_curves(reps);
}

std::vector<FdrReport> RunResult::reports() const {
  std::vector<FdrReport> out;
  for (const auto& r : perRep)
    if (r.report) out.push_back(*r.report);
  return out;
}

RunResult run_scenario(const Scenario& scenario, int threads) {
  const ScenarioGenerator generator(scenario);
  const std::vector<Index> truth = scenario.truth_set();
  const int workers = std::max(1, threads);
  AnalysisOptions options = AnalysisOptions::from_scenario(scenario);
  options.threads = std::max(1, workers / std::min(workers, scenario.reps));

  RunResult result;
  result.scenario = scenario;
  result.perRep.resize(static_cast<std::size_t>(scenario.reps));
  detail::parallel_for(result.perRep.size(), workers, [&](std::size_t i) {
    RepOutcome& outcome = result.perRep[i];
    outcome.rep = static_cast<int>(i);
    try {
      const DataMatrix x = generator(outcome.rep);
      Analysis a = analyze(x, options, derive_key(scenario.seed, {static_cast<std::uint64_t>(i)}));
      outcome.warnings = std::move(a.warnings);
      if (a.fit) outcome.lambda = a.fit->lambda;
      if (a.centralMatch) outcome.scaleFactor = a.centralMatch->scale_factor();
      outcome.report = fdr_curve(std::move(a.ranking), std::move(a.estimates), truth);
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
  });
  const auto ok = result.reports();
  if (!ok.empty()) result.summary = summarize(ok);
  return result;
}

void write_summary_csv(const std::filesystem::path& path, const Summary& summary) {
  const auto order = summary_columns(summary);
  std::string text = "k";
  for (const auto& name : order) text += "," + name + "_mean," + name + "_se";
  text += "\n";
  for (std::size_t row = 0; row < summary.counts.size(); ++row) {
    text += std::to_string(summary.counts[row]);
    for (const auto& name : order) {
      const MeanSe& cell = summary.columns.at(name)[row];
      text += "," + io::format_double(cell.mean) + "," + io::format_double(cell.se);
    }
    text += "\n";
  }
  text += "# reps=" + std::to_string(summary.reps) + "\n";
  io::write_text(path, text);
}

Summary read_summary_csv(const std::filesystem::path& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path.string() + "' is empty");
  std::vector<std::string> header;
  {
    std::istringstream h(line);
    std::string field;
    while (std::getline(h, field, ',')) header.push_back(field);
  }
  if (header.empty() || header[0] != "k" || header.size() % 2 != 1)
    throw IoError("'" + path.string() + "': malformed summary header");
  std::vector<std::string> names;
  for (std::size_t c = 1; c < header.size(); c += 2) {
    const std::string& mean = header[c];
    if (mean.size() < 6 || mean.substr(mean.size() - 5) != "_mean")
      throw IoError("'" + path.string() + "': unexpected column '" + mean + "'");
    names.push_back(mean.substr(0, mean.size() - 5));
  }
  Summary s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# reps=", 0) == 0) {
      s.reps = std::stoi(line.substr(7));
      continue;
    }
    std::vector<std::string> fields;
    std::istringstream l(line);
    std::string field;
    while (std::getline(l, field, ',')) fields.push_back(field);
    if (fields.size() != header.size()) throw IoError("'" + path.string() + "': malformed summary row");
    s.counts.push_back(std::stol(fields[0]));
    for (std::size_t i = 0; i < names.size(); ++i)
      s.columns[names[i]].push_back({io::parse_double(fields[1 + 2 * i]), io::parse_double(fields[2 + 2 * i])});
  }
  return s;
}

void emit_tables(const RunResult& result, const std::filesystem::path& outDir) {
  const auto reports = result.reports();
  if (reports.empty()) throw ParameterError("emit_tables: no successful replicates to report");
  std::filesystem::create_directories(outDir);
  write_summary_csv(outDir / "summary.csv", summarize(reports));
  io::write_fdr_curve_csv(outDir / "fdr_curve.csv", reports.front());
  io::write_text(outDir / "fdr_curve.svg",
                 fdr_curve_svg(curves_of(reports.front()), plot_title(result.scenario), kPlotMaxK));
  for (const auto& r : result.perRep)
    if (r.report) io::write_fdr_curve_csv(outDir / "reps" / fmt::format("rep_{:03d}.csv", r.rep), *r.report);

  std::string diag = "rep,status,lambda,scale_factor,warnings,error\n";
  for (const auto& r : result.perRep) {
    std::string error = r.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    diag += fmt::format("{},{},{},{},{},{}\n", r.rep, r.ok() ? "ok" : "failed", io::format_double(r.lambda),
                        io::format_double(r.scaleFactor), r.warnings.size(), error);
  }
  io::write_text(outDir / "diagnostics.csv", diag);
  write_scenario(outDir / "scenario.cfg", result.scenario);
}

Summary rebuild_report(const std::filesystem::path& dir) {
  const std::filesystem::path reps_dir = dir / "reps";
  if (!std::filesystem::is_directory(reps_dir))
    throw IoError("'" + dir.string() + "' has no reps/ directory of replicate curves");
  std::set<std::filesystem::path> files;
  const std::regex pattern("rep_[0-9]+\\.csv");
  for (const auto& entry : std::filesystem::directory_iterator(reps_dir))
    if (entry.is_regular_file() && std::regex_match(entry.path().filename().string(), pattern))
      files.insert(entry.path());
  if (files.empty()) throw IoError("'" + reps_dir.string() + "' contains no replicate curves");
  std::vector<Curves> reps;
  for (const auto& f : files) reps.push_back(io::read_fdr_curve_csv(f));
  const Summary s = summarize_curves(reps);
  write_summary_csv(dir / "summary.csv", s);
  std::string title = "FDR curves";
  if (std::filesystem::exists(dir / "scenario.cfg")) title = plot_title(read_scenario(dir / "scenario.cfg"));
  io::write_text(dir / "fdr_curve.svg", fdr_curve_svg(reps.front(), title, kPlotMaxK));
  return s;
}

}  // namespace sphering
