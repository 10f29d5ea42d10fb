#include "sphering/io.hpp"

#include "sphering/errors.hpp"
#include "sphering/linalg.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sphering::io {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<std::vector<std::string>> read_rows(std::istream& in, const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv(line));
  }
  (void)path;
  return rows;
}

Matrix rows_to_matrix(const std::vector<std::vector<std::string>>& rows, std::size_t first, const fs::path& path) {
  if (rows.size() <= first) throw IoError("'" + path.string() + "' contains no matrix rows");
  const std::size_t cols = rows[first].size();
  Matrix out(static_cast<Index>(rows.size() - first), static_cast<Index>(cols));
  for (std::size_t r = first; r < rows.size(); ++r) {
    if (rows[r].size() != cols)
      throw IoError("'" + path.string() + "': row " + std::to_string(r + 1) + " has " +
                    std::to_string(rows[r].size()) + " fields, expected " + std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c) {
      try {
        out(static_cast<Index>(r - first), static_cast<Index>(c)) = parse_double(rows[r][c]);
      } catch (const ParameterError& e) {
        throw IoError("'" + path.string() + "': row " + std::to_string(r + 1) + ": " + e.what());
      }
    }
  }
  return out;
}

void write_matrix_rows(std::ostream& out, const Matrix& values) {
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << format_double(values(i, j));
    }
    out << '\n';
  }
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

double parse_double(const std::string& token) {
  const std::string t = trim(token);
  if (t == "NA" || t.empty()) return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) throw ParameterError("not a number: '" + t + "'");
  return value;
}

void write_matrix_csv(const fs::path& path, const Matrix& values) {
  auto out = open_out(path);
  write_matrix_rows(out, values);
  finish(out, path);
}

Matrix read_matrix_csv(const fs::path& path) {
  auto in = open_in(path);
  return rows_to_matrix(read_rows(in, path), 0, path);
}

void write_data_csv(const fs::path& path, const DataMatrix& data) {
  auto out = open_out(path);
  if (data.has_labels()) {
    out << "class";
    for (auto tag : data.labels().tags()) out << ',' << (tag == 0 ? "c1" : "c2");
    out << '\n';
  }
  write_matrix_rows(out, data.values());
  finish(out, path);
}

DataMatrix read_data_csv(const fs::path& path) {
  auto in = open_in(path);
  const auto rows = read_rows(in, path);
  if (rows.empty()) throw IoError("'" + path.string() + "' is empty");
  if (rows[0].empty() || rows[0][0] != "class") return DataMatrix(rows_to_matrix(rows, 0, path));
  std::vector<std::uint8_t> tags;
  for (std::size_t c = 1; c < rows[0].size(); ++c) {
    if (rows[0][c] == "c1")
      tags.push_back(0);
    else if (rows[0][c] == "c2")
      tags.push_back(1);
    else
      throw IoError("'" + path.string() + "': unknown class tag '" + rows[0][c] + "'");
  }
  Matrix values = rows_to_matrix(rows, 1, path);
  if (static_cast<std::size_t>(values.cols()) != tags.size())
    throw IoError("'" + path.string() + "': class header has " + std::to_string(tags.size()) + " tags for " +
                  std::to_string(values.cols()) + " columns");
  return DataMatrix(std::move(values), ClassLabels::from_tags(tags));
}

void write_key_values(const fs::path& path, const KeyValues& values) {
  auto out = open_out(path);
  for (const auto& [k, v] : values) out << k << '=' << v << '\n';
  finish(out, path);
}

KeyValues read_key_values(const fs::path& path) {
  auto in = open_in(path);
  KeyValues values;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("'" + path.string() + "' line " + std::to_string(number) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (values.count(key))
      throw ConfigError("'" + path.string() + "' line " + std::to_string(number) + ": duplicate key '" + key + "'");
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

void write_fit(const fs::path& dir, const TrcmFit& fit) {
  write_matrix_csv(dir / "sigma.csv", fit.SigmaHat);
  write_matrix_csv(dir / "delta.csv", fit.DeltaHat);
  write_key_values(dir / "meta", {{"lambda", format_double(fit.lambda)},
                                  {"iterations", std::to_string(fit.iterations)},
                                  {"converged", fit.converged ? "true" : "false"},
                                  {"objective", format_double(fit.finalObjective)},
                                  {"delta_is_diagonal", fit.deltaIsDiagonal ? "true" : "false"},
                                  {"sigma_is_diagonal", fit.sigmaIsDiagonal ? "true" : "false"}});
}

TrcmFit read_fit(const fs::path& dir) {
  TrcmFit fit;
  fit.SigmaHat = read_matrix_csv(dir / "sigma.csv");
  fit.DeltaHat = read_matrix_csv(dir / "delta.csv");
  try {
    fit.SigmaInvHat = spd_inverse(fit.SigmaHat);
    fit.DeltaInvHat = spd_inverse(fit.DeltaHat);
  } catch (const ParameterError& e) {
    throw IoError("fit in '" + dir.string() + "' is not positive definite: " + e.what());
  }
  const KeyValues meta = read_key_values(dir / "meta");
  auto get = [&](const std::string& key) -> std::string {
    const auto it = meta.find(key);
    return it == meta.end() ? std::string() : it->second;
  };
  if (!get("lambda").empty()) fit.lambda = parse_double(get("lambda"));
  if (!get("iterations").empty()) fit.iterations = std::stoi(get("iterations"));
  fit.converged = get("converged") == "true";
  if (!get("objective").empty()) fit.finalObjective = parse_double(get("objective"));
  fit.deltaIsDiagonal = get("delta_is_diagonal") == "true";
  fit.sigmaIsDiagonal = get("sigma_is_diagonal") == "true";
  return fit;
}

void write_stats_csv(const fs::path& path, const TestStatVector& stats, const Vector& p, KeyValues extra) {
  if (p.size() != stats.size()) throw ParameterError("write_stats_csv: p-value vector length mismatch");
  auto out = open_out(path);
  out << "row,stat,flag,p\n";
  for (Index i = 0; i < stats.size(); ++i) {
    const bool flag = !stats.flagged.empty() && stats.flagged[static_cast<std::size_t>(i)];
    out << i << ',' << format_double(stats.values(i)) << ',' << (flag ? 1 : 0) << ',' << format_double(p(i)) << '\n';
  }
  finish(out, path);
  extra["kind"] = to_string(stats.kind);
  extra["df"] = std::to_string(stats.df);
  extra["c_n"] = format_double(stats.c_n);
  write_key_values(fs::path(path.string() + ".meta"), extra);
}

StatsFile read_stats_csv(const fs::path& path) {
  auto in = open_in(path);
  const auto rows = read_rows(in, path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"row", "stat", "flag", "p"})
    throw IoError("'" + path.string() + "': expected header row,stat,flag,p");
  StatsFile file;
  const Index m = static_cast<Index>(rows.size() - 1);
  file.stats.values.resize(m);
  file.stats.flagged.assign(static_cast<std::size_t>(m), 0);
  file.p.resize(m);
  for (Index i = 0; i < m; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i + 1)];
    if (r.size() != 4) throw IoError("'" + path.string() + "': malformed row " + std::to_string(i + 2));
    if (std::stol(r[0]) != i) throw IoError("'" + path.string() + "': rows must be listed in order");
    file.stats.values(i) = parse_double(r[1]);
    file.stats.flagged[static_cast<std::size_t>(i)] = r[2] == "1";
    file.p(i) = parse_double(r[3]);
  }
  const fs::path meta_path(path.string() + ".meta");
  if (fs::exists(meta_path)) {
    file.meta = read_key_values(meta_path);
    if (file.meta.count("kind")) file.stats.kind = stat_kind_from_string(file.meta["kind"]);
    if (file.meta.count("df")) file.stats.df = std::stoi(file.meta["df"]);
    if (file.meta.count("c_n")) file.stats.c_n = parse_double(file.meta["c_n"]);
  }
  return file;
}

void write_index_list(const fs::path& path, const std::vector<Index>& rows) {
  auto out = open_out(path);
  for (Index i : rows) out << i << '\n';
  finish(out, path);
}

std::vector<Index> read_index_list(const fs::path& path) {
  auto in = open_in(path);
  std::vector<Index> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    Index value = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
    if (ec != std::errc() || ptr != line.data() + line.size())
      throw IoError("'" + path.string() + "': not a row index: '" + line + "'");
    rows.push_back(value);
  }
  return rows;
}

void write_fdr_curve_csv(const fs::path& path, const FdrReport& report) {
  auto out = open_out(path);
  out << "k,true_fdp";
  for (const auto& name : kProcedures) out << ',' << name;
  out << '\n';
  for (Index k = 0; k < report.size(); ++k) {
    out << (k + 1) << ',' << (report.trueFdp ? format_double((*report.trueFdp)(k)) : "NA");
    for (const auto& name : kProcedures) {
      const auto it = report.perProcedure.find(name);
      out << ',' << (it == report.perProcedure.end() ? std::string("NA") : format_double(it->second(k)));
    }
    out << '\n';
  }
  finish(out, path);
}

std::map<std::string, Vector> read_fdr_curve_csv(const fs::path& path) {
  auto in = open_in(path);
  const auto rows = read_rows(in, path);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "k") throw IoError("'" + path.string() + "': missing header");
  const auto& header = rows[0];
  const Index count = static_cast<Index>(rows.size() - 1);
  std::map<std::string, Vector> curves;
  for (std::size_t c = 1; c < header.size(); ++c) {
    Vector v(count);
    bool missing = false;
    for (Index k = 0; k < count; ++k) {
      const auto& r = rows[static_cast<std::size_t>(k + 1)];
      if (r.size() != header.size()) throw IoError("'" + path.string() + "': malformed row " + std::to_string(k + 2));
      if (r[c] == "NA") missing = true;
      v(k) = parse_double(r[c]);
    }
    if (!missing) curves[header[c]] = std::move(v);
  }
  return curves;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  finish(out, path);
}

std::string read_text(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace sphering::io
