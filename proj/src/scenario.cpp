#include "sphering/harness.hpp"

#include "sphering/errors.hpp"
#include "sphering/linalg.hpp"
#include "sphering/rng.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <numeric>
#include <sstream>

namespace sphering {

std::string to_string(Generator g) {
  switch (g) {
    case Generator::matrix_normal: return "matrix_normal";
    case Generator::latent_variable: return "latent_variable";
    case Generator::random_effects: return "random_effects";
  }
  return "?";
}

std::string to_string(Pipeline p) { return p == Pipeline::standard ? "standard" : "sphered"; }

Generator generator_from_string(const std::string& name) {
  if (name == "matrix_normal") return Generator::matrix_normal;
  if (name == "latent_variable") return Generator::latent_variable;
  if (name == "random_effects") return Generator::random_effects;
  throw ConfigError("unknown generator '" + name + "' (matrix_normal, latent_variable, random_effects)");
}

Pipeline pipeline_from_string(const std::string& name) {
  if (name == "standard") return Pipeline::standard;
  if (name == "sphered") return Pipeline::sphered;
  throw ConfigError("unknown pipeline '" + name + "' (standard, sphered)");
}

std::string CovSpec::kind_name() const {
  switch (kind) {
    case Kind::identity: return "identity";
    case Kind::ar1: return "ar1";
    case Kind::block_ar1: return "block_ar1";
    case Kind::empirical: return "empirical";
  }
  return "?";
}

Matrix CovSpec::materialize(Index dim) const {
  try {
    switch (kind) {
      case Kind::identity: return make_structured_cov(CovKind::identity, dim, 0.0);
      case Kind::ar1: return make_structured_cov(CovKind::ar1, dim, rho);
      case Kind::block_ar1: return make_structured_cov(CovKind::block_ar1, dim, rho, block);
      case Kind::empirical: break;
    }
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("covariance: ") + e.what());
  }
  throw ConfigError("empirical covariances must be loaded from a source matrix");
}

namespace {

CovSpec::Kind cov_kind_from_string(const std::string& name) {
  if (name == "identity") return CovSpec::Kind::identity;
  if (name == "ar1") return CovSpec::Kind::ar1;
  if (name == "block_ar1") return CovSpec::Kind::block_ar1;
  if (name == "empirical") return CovSpec::Kind::empirical;
  throw ConfigError("unknown covariance kind '" + name + "' (identity, ar1, block_ar1, empirical)");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError("scenario: " + message);
}

}  // namespace

void Scenario::validate() const {
  require(m >= 2 && n >= 4, "need m >= 2 and n >= 4");
  require(n1 >= 2 && n2 >= 2, "each class needs at least two columns");
  require(n1 + n2 == n, "n1 + n2 must equal n");
  require(nonNull >= 0 && nonNull <= m, "non_null must lie in [0, m]");
  require(reps >= 1, "reps must be positive");
  require(pi0 > 0.0 && pi0 <= 1.0, "pi0 must lie in (0, 1]");
  require(permutations >= 100, "permutations must be at least 100");
  require(folds >= 2, "folds must be at least 2");
  require(lambdaPoints >= 1, "lambda_points must be positive");
  require(lambdaDecades >= 0.0, "lambda_decades must be nonnegative");
  const bool row_emp = rowCov.kind == CovSpec::Kind::empirical;
  const bool col_emp = colCov.kind == CovSpec::Kind::empirical;
  require(row_emp == col_emp, "empirical covariances apply to rows and columns together");
  if (row_emp) require(!empiricalFile.empty(), "empirical covariances need empirical_file");
  if (!row_emp) {
    rowCov.materialize(m);
    colCov.materialize(n);
  }
  if (generator == Generator::latent_variable) require(latentFactors >= 1, "latent_factors must be positive");
  if (generator == Generator::random_effects) {
    require(batchSize >= 1, "batch_size must be positive");
    require(batchVariance >= 0.0, "batch_variance must be nonnegative");
    require(!batchMeans.empty(), "batch_means must not be empty");
  }
}

SignalSpec Scenario::signal() const {
  SignalSpec s;
  s.psi1 = Vector::Zero(m);
  const Index half = nonNull / 2;
  for (Index i = 0; i < nonNull; ++i) s.psi1(i) = i < (nonNull - half) ? effect : -effect;
  s.psi2 = -s.psi1;
  s.n1 = n1;
  return s;
}

std::vector<Index> Scenario::truth_set() const {
  std::vector<Index> rows(static_cast<std::size_t>(nonNull));
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

std::vector<std::string> preset_names() {
  return {"sigma1_identity", "sigma2_identity", "sigma1_delta1", "sigma2_delta1",
          "sigma1_delta2",   "sigma2_delta2",   "latent",        "random_effects"};
}

Scenario preset(const std::string& name) {
  Scenario s;
  s.name = name;
  const CovSpec sigma1{CovSpec::Kind::block_ar1, 0.9, 10};
  const CovSpec sigma2{CovSpec::Kind::block_ar1, -0.9, 10};
  const CovSpec delta1{CovSpec::Kind::block_ar1, 0.5, 10};
  const CovSpec delta2{CovSpec::Kind::block_ar1, 0.5, 25};
  const CovSpec identity{};
  if (name == "sigma1_identity") {
    s.rowCov = sigma1;
    s.colCov = identity;
  } else if (name == "sigma2_identity") {
    s.rowCov = sigma2;
    s.colCov = identity;
  } else if (name == "sigma1_delta1") {
    s.rowCov = sigma1;
    s.colCov = delta1;
  } else if (name == "sigma2_delta1") {
    s.rowCov = sigma2;
    s.colCov = delta1;
  } else if (name == "sigma1_delta2") {
    s.rowCov = sigma1;
    s.colCov = delta2;
  } else if (name == "sigma2_delta2") {
    s.rowCov = sigma2;
    s.colCov = delta2;
  } else if (name == "latent") {
    s.generator = Generator::latent_variable;
  } else if (name == "random_effects") {
    s.generator = Generator::random_effects;
    s.rowCov = sigma1;
  } else {
    std::string known;
    for (const auto& p : preset_names()) known += (known.empty() ? "" : ", ") + p;
    throw ConfigError("unknown preset '" + name + "' (" + known + ")");
  }
  return s;
}

Scenario desk(Scenario scenario) {
  scenario.reps = 3;
  scenario.permutations = 200;
  return scenario;
}

namespace {

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  try {
    out = io::parse_double(value);
  } catch (const ParameterError&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
  }
  if (!std::isfinite(out)) throw ConfigError("key '" + key + "': value must be finite");
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::istringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_real(key, item));
  return out;
}

using Setter = std::function<void(Scenario&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"name", [](Scenario& s, const std::string& v) { s.name = v; }},
      {"m", [](Scenario& s, const std::string& v) { s.m = parse_integer<Index>("m", v); }},
      {"n", [](Scenario& s, const std::string& v) { s.n = parse_integer<Index>("n", v); }},
      {"n1", [](Scenario& s, const std::string& v) { s.n1 = parse_integer<Index>("n1", v); }},
      {"n2", [](Scenario& s, const std::string& v) { s.n2 = parse_integer<Index>("n2", v); }},
      {"non_null", [](Scenario& s, const std::string& v) { s.nonNull = parse_integer<Index>("non_null", v); }},
      {"effect", [](Scenario& s, const std::string& v) { s.effect = parse_real("effect", v); }},
      {"row_cov", [](Scenario& s, const std::string& v) { s.rowCov.kind = cov_kind_from_string(v); }},
      {"row_rho", [](Scenario& s, const std::string& v) { s.rowCov.rho = parse_real("row_rho", v); }},
      {"row_block", [](Scenario& s, const std::string& v) { s.rowCov.block = parse_integer<Index>("row_block", v); }},
      {"col_cov", [](Scenario& s, const std::string& v) { s.colCov.kind = cov_kind_from_string(v); }},
      {"col_rho", [](Scenario& s, const std::string& v) { s.colCov.rho = parse_real("col_rho", v); }},
      {"col_block", [](Scenario& s, const std::string& v) { s.colCov.block = parse_integer<Index>("col_block", v); }},
      {"empirical_file", [](Scenario& s, const std::string& v) { s.empiricalFile = v; }},
      {"empirical_loading",
       [](Scenario& s, const std::string& v) { s.empiricalLoading = parse_real("empirical_loading", v); }},
      {"generator", [](Scenario& s, const std::string& v) { s.generator = generator_from_string(v); }},
      {"latent_factors",
       [](Scenario& s, const std::string& v) { s.latentFactors = parse_integer<Index>("latent_factors", v); }},
      {"latent_scale", [](Scenario& s, const std::string& v) { s.latentScale = parse_real("latent_scale", v); }},
      {"batch_size", [](Scenario& s, const std::string& v) { s.batchSize = parse_integer<Index>("batch_size", v); }},
      {"batch_variance",
       [](Scenario& s, const std::string& v) { s.batchVariance = parse_real("batch_variance", v); }},
      {"batch_means", [](Scenario& s, const std::string& v) { s.batchMeans = parse_list("batch_means", v); }},
      {"reps", [](Scenario& s, const std::string& v) { s.reps = parse_integer<int>("reps", v); }},
      {"seed", [](Scenario& s, const std::string& v) { s.seed = parse_integer<std::uint64_t>("seed", v); }},
      {"pipeline", [](Scenario& s, const std::string& v) { s.pipeline = pipeline_from_string(v); }},
      {"pi0", [](Scenario& s, const std::string& v) { s.pi0 = parse_real("pi0", v); }},
      {"permutations",
       [](Scenario& s, const std::string& v) { s.permutations = parse_integer<int>("permutations", v); }},
      {"folds", [](Scenario& s, const std::string& v) { s.folds = parse_integer<int>("folds", v); }},
      {"lambda_points",
       [](Scenario& s, const std::string& v) { s.lambdaPoints = parse_integer<int>("lambda_points", v); }},
      {"lambda_decades",
       [](Scenario& s, const std::string& v) { s.lambdaDecades = parse_real("lambda_decades", v); }},
  };
  return table;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (double v : values) out += (out.empty() ? "" : ",") + io::format_double(v);
  return out;
}

}  // namespace

Scenario scenario_from_key_values(const io::KeyValues& values) {
  Scenario s;
  if (auto it = values.find("preset"); it != values.end()) s = preset(it->second);
  if (auto it = values.find("desk"); it != values.end()) {
    if (it->second == "true")
      s = desk(s);
    else if (it->second != "false")
      throw ConfigError("key 'desk': expected true or false");
  }
  const auto& table = setters();
  for (const auto& [key, value] : values) {
    if (key == "preset" || key == "desk") continue;
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown scenario key '" + key + "'");
    it->second(s, value);
  }
  s.validate();
  return s;
}

io::KeyValues scenario_to_key_values(const Scenario& s) {
  return {{"name", s.name},
          {"m", std::to_string(s.m)},
          {"n", std::to_string(s.n)},
          {"n1", std::to_string(s.n1)},
          {"n2", std::to_string(s.n2)},
          {"non_null", std::to_string(s.nonNull)},
          {"effect", io::format_double(s.effect)},
          {"row_cov", s.rowCov.kind_name()},
          {"row_rho", io::format_double(s.rowCov.rho)},
          {"row_block", std::to_string(s.rowCov.block)},
          {"col_cov", s.colCov.kind_name()},
          {"col_rho", io::format_double(s.colCov.rho)},
          {"col_block", std::to_string(s.colCov.block)},
          {"empirical_file", s.empiricalFile},
          {"empirical_loading", io::format_double(s.empiricalLoading)},
          {"generator", to_string(s.generator)},
          {"latent_factors", std::to_string(s.latentFactors)},
          {"latent_scale", io::format_double(s.latentScale)},
          {"batch_size", std::to_string(s.batchSize)},
          {"batch_variance", io::format_double(s.batchVariance)},
          {"batch_means", join(s.batchMeans)},
          {"reps", std::to_string(s.reps)},
          {"seed", std::to_string(s.seed)},
          {"pipeline", to_string(s.pipeline)},
          {"pi0", io::format_double(s.pi0)},
          {"permutations", std::to_string(s.permutations)},
          {"folds", std::to_string(s.folds)},
          {"lambda_points", std::to_string(s.lambdaPoints)},
          {"lambda_decades", io::format_double(s.lambdaDecades)}};
}

Scenario read_scenario(const std::filesystem::path& path) { return scenario_from_key_values(io::read_key_values(path)); }

void write_scenario(const std::filesystem::path& path, const Scenario& scenario) {
  io::write_key_values(path, scenario_to_key_values(scenario));
}

CovariancePair empirical_cov_scenario(const std::filesystem::path& matrixFile, Index mSub, Index nSub,
                                      std::uint64_t seed, double loading) {
  if (mSub < 2 || nSub < 2) throw ConfigError("empirical_cov_scenario: subsample must be at least 2 x 2");
  if (!(loading >= 0.0)) throw ConfigError("empirical_cov_scenario: loading must be nonnegative");
  Matrix source;
  try {
    source = io::read_matrix_csv(matrixFile);
  } catch (const IoError& e) {
    throw ConfigError(std::string("empirical covariance source: ") + e.what());
  }
  if (source.rows() < mSub || source.cols() < nSub)
    throw ConfigError("empirical covariance source '" + matrixFile.string() + "' is " +
                      std::to_string(source.rows()) + " x " + std::to_string(source.cols()) + ", smaller than " +
                      std::to_string(mSub) + " x " + std::to_string(nSub));

  Engine engine = make_stream(seed, {stream::kSubsample});
  auto pick = [&](Index total, Index count) {
    std::vector<Index> all(static_cast<std::size_t>(total));
    std::iota(all.begin(), all.end(), Index{0});
    std::shuffle(all.begin(), all.end(), engine);
    all.resize(static_cast<std::size_t>(count));
    std::sort(all.begin(), all.end());
    return all;
  };
  const std::vector<Index> rows = pick(source.rows(), mSub);
  const std::vector<Index> cols = pick(source.cols(), nSub);
  Matrix sub(mSub, nSub);
  for (Index i = 0; i < mSub; ++i)
    for (Index j = 0; j < nSub; ++j) sub(i, j) = source(rows[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);

  auto [sigma, delta] = empirical_cov_pair(double_center(sub));
  auto load = [&](Matrix& c, const char* what) {
    const double scale = c.diagonal().mean();
    if (!(scale > 0.0))
      throw ConfigError(std::string("empirical ") + what + " is zero; use a larger or non-constant source matrix");
    c.diagonal().array() += loading * scale;
    if (!(min_eigenvalue(c) > 1e-10 * scale))
      throw ConfigError(std::string("empirical ") + what + " is rank deficient beyond repair at " +
                        std::to_string(mSub) + " x " + std::to_string(nSub) +
                        "; use a larger source matrix or a larger loading");
  };
  load(sigma, "Sigma");
  load(delta, "Delta");
  return {std::move(sigma), std::move(delta)};
}

ScenarioGenerator::ScenarioGenerator(const Scenario& scenario) : scenario_(scenario) {
  scenario_.validate();
  const Scenario& s = scenario_;
  if (s.rowCov.kind == CovSpec::Kind::empirical) {
    CovariancePair pair = empirical_cov_scenario(s.empiricalFile, s.m, s.n, s.seed, s.empiricalLoading);
    sigma_ = std::move(pair.sigma);
    delta_ = std::move(pair.delta);
  } else {
    sigma_ = s.rowCov.materialize(s.m);
    delta_ = s.colCov.materialize(s.n);
  }
  signal_ = s.signal().matrix(s.n);
  switch (s.generator) {
    case Generator::matrix_normal:
      sampler_.emplace(MatrixNormalParams::centered(sigma_, delta_), s.signal());
      break;
    case Generator::random_effects:
      sigma_root_ = symmetric_power(sigma_, 0.5).value;
      break;
    case Generator::latent_variable: break;
  }
}

namespace {

Matrix standard_normal(Engine& engine, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) z(i, j) = normal(engine);
  return z;
}

}  // namespace

DataMatrix ScenarioGenerator::operator()(int rep) const {
  if (rep < 0) throw ParameterError("replicate index must be nonnegative");
  const Scenario& s = scenario_;
  const auto r = static_cast<std::uint64_t>(rep);
  const ClassLabels labels = ClassLabels::contiguous(s.n1, s.n2);
  switch (s.generator) {
    case Generator::matrix_normal: return sampler_->sample(s.seed, {stream::kSample, r});
    case Generator::latent_variable: {
      Engine engine = make_stream(s.seed, {stream::kLatent, r});
      std::bernoulli_distribution coin(0.5);
      Matrix g(s.latentFactors, s.n);
      for (Index j = 0; j < s.n; ++j)
        for (Index f = 0; f < s.latentFactors; ++f) g(f, j) = coin(engine) ? 1.0 : 0.0;
      const Matrix gamma = s.latentScale * standard_normal(engine, s.m, s.latentFactors);
      const Matrix u = standard_normal(engine, s.m, s.n);
      return DataMatrix(signal_ + gamma * g + u, labels);
    }
    case Generator::random_effects: {
      Engine engine = make_stream(s.seed, {stream::kBatch, r});
      std::normal_distribution<double> normal(0.0, 1.0);
      const double batch_sd = std::sqrt(s.batchVariance);
      Matrix values = signal_;
      const Index batches = (s.n + s.batchSize - 1) / s.batchSize;
      for (Index k = 0; k < batches; ++k) {
        const double mean = s.batchMeans[static_cast<std::size_t>(k) % s.batchMeans.size()];
        Vector beta(s.m);
        for (Index i = 0; i < s.m; ++i) beta(i) = mean + batch_sd * normal(engine);
        for (Index j = k * s.batchSize; j < std::min(s.n, (k + 1) * s.batchSize); ++j) values.col(j) += beta;
      }
      values += sigma_root_ * standard_normal(engine, s.m, s.n);
      return DataMatrix(std::move(values), labels);
    }
  }
  throw ParameterError("unknown generator");
}

DataMatrix generate(const Scenario& scenario, int rep) { return ScenarioGenerator(scenario)(rep); }

}  // namespace sphering
