#pragma once

#include "sphering/fdr.hpp"
#include "sphering/stats.hpp"
#include "sphering/trcm.hpp"
#include "sphering/types.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sphering::io {

namespace fs = std::filesystem;

/// Formats a double with 17 significant digits ("%.17g").
std::string format_double(double v);
/// Parses a double written by format_double (also accepts inf / nan / NA).
double parse_double(const std::string& token);

/// Pure matrix CSV: row-major, no header.
void write_matrix_csv(const fs::path& path, const Matrix& values);
Matrix read_matrix_csv(const fs::path& path);

/// Data CSV. Labeled data starts with `class,<c1|c2>,...` (one tag per
/// column); unlabeled data is a pure matrix CSV.
void write_data_csv(const fs::path& path, const DataMatrix& data);
DataMatrix read_data_csv(const fs::path& path);

/// key=value text, one pair per line; '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;
void write_key_values(const fs::path& path, const KeyValues& values);
KeyValues read_key_values(const fs::path& path);

/// Fit directory: sigma.csv, delta.csv and meta (lambda, iterations,
/// converged, objective).
void write_fit(const fs::path& dir, const TrcmFit& fit);
TrcmFit read_fit(const fs::path& dir);

/// Statistics CSV with columns row,stat,flag,p. Statistic kind, df and c_n
/// travel in a key=value sidecar (`<path>.meta`) together with any extra
/// metadata such as central-matching scalars.
void write_stats_csv(const fs::path& path, const TestStatVector& stats, const Vector& p, KeyValues extra = {});
struct StatsFile {
  TestStatVector stats;
  Vector p;
  KeyValues meta;
};
StatsFile read_stats_csv(const fs::path& path);

/// One 0-based row index per line.
void write_index_list(const fs::path& path, const std::vector<Index>& rows);
std::vector<Index> read_index_list(const fs::path& path);

/// fdr_curve.csv: k,true_fdp,bh,by,perm,enull; missing columns are "NA".
inline const std::vector<std::string> kProcedures = {"bh", "by", "perm", "enull"};
void write_fdr_curve_csv(const fs::path& path, const FdrReport& report);
/// Curves keyed by column name ("true_fdp", "bh", ...); NA columns omitted.
std::map<std::string, Vector> read_fdr_curve_csv(const fs::path& path);

/// Writes `text` to `path`, throwing IoError on failure.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace sphering::io
