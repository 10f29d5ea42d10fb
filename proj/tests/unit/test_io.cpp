#include "oracles.hpp"
#include "sphering/errors.hpp"
#include "sphering/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace sphering;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sphering_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("doubles round trip exactly") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  for (int i = 0; i < 1000; ++i) {
    const double v = z(rng) * std::pow(10.0, i % 30 - 15);
    CHECK(io::parse_double(io::format_double(v)) == v);
  }
  CHECK(std::isinf(io::parse_double(io::format_double(INFINITY))));
  CHECK(io::parse_double(io::format_double(-INFINITY)) < 0);
  CHECK(std::isnan(io::parse_double("NA")));
  CHECK(std::isnan(io::parse_double("")));
  CHECK(io::parse_double("+2.5") == 2.5);
  CHECK(io::parse_double(" 1e-3 ") == 0.001);
  CHECK_THROWS_AS(io::parse_double("abc"), ParameterError);
  CHECK_THROWS_AS(io::parse_double("1.0x"), ParameterError);
}

TEST_CASE("matrix and data CSV round trips") {
  std::mt19937_64 rng(2);
  const Matrix m = oracle::gaussian(7, 5, rng);
  io::write_matrix_csv(scratch("m.csv"), m);
  CHECK(io::read_matrix_csv(scratch("m.csv")) == m);

  const ClassLabels labels = ClassLabels::from_tags({0, 1, 0, 1, 1});
  io::write_data_csv(scratch("d.csv"), DataMatrix(m, labels));
  const DataMatrix back = io::read_data_csv(scratch("d.csv"));
  CHECK(back.values() == m);
  CHECK(back.has_labels());
  CHECK(back.labels() == labels);

  io::write_data_csv(scratch("u.csv"), DataMatrix(m));
  CHECK_FALSE(io::read_data_csv(scratch("u.csv")).has_labels());
}

TEST_CASE("malformed CSV input") {
  io::write_text(scratch("ragged.csv"), "1,2,3\n4,5\n");
  CHECK_THROWS_AS(io::read_matrix_csv(scratch("ragged.csv")), IoError);
  io::write_text(scratch("junk.csv"), "1,2\n3,x\n");
  CHECK_THROWS_AS(io::read_matrix_csv(scratch("junk.csv")), IoError);
  io::write_text(scratch("tags.csv"), "class,c1,c3\n1,2\n");
  CHECK_THROWS_AS(io::read_data_csv(scratch("tags.csv")), IoError);
  io::write_text(scratch("empty.csv"), "");
  CHECK_THROWS_AS(io::read_matrix_csv(scratch("empty.csv")), IoError);
  CHECK_THROWS_AS(io::read_matrix_csv(scratch("missing/none.csv")), IoError);
}

TEST_CASE("key-value files") {
  io::write_key_values(scratch("kv.cfg"), {{"a", "1"}, {"b", "two words"}});
  const io::KeyValues kv = io::read_key_values(scratch("kv.cfg"));
  CHECK(kv.at("a") == "1");
  CHECK(kv.at("b") == "two words");
  io::write_text(scratch("comments.cfg"), "# header\n\n x = 3 \n");
  CHECK(io::read_key_values(scratch("comments.cfg")).at("x") == "3");
  io::write_text(scratch("dup.cfg"), "x=1\nx=2\n");
  CHECK_THROWS_AS(io::read_key_values(scratch("dup.cfg")), ConfigError);
  io::write_text(scratch("bad.cfg"), "just words\n");
  CHECK_THROWS_AS(io::read_key_values(scratch("bad.cfg")), ConfigError);
}

TEST_CASE("fit directories round trip") {
  std::mt19937_64 rng(3);
  TrcmFit fit = TrcmFit::from_covariances(oracle::random_spd(6, rng), oracle::random_spd(4, rng));
  fit.lambda = 0.125;
  fit.iterations = 7;
  fit.finalObjective = -12.5;
  io::write_fit(scratch("fit"), fit);
  const TrcmFit back = io::read_fit(scratch("fit"));
  CHECK(back.SigmaHat == fit.SigmaHat);
  CHECK(back.DeltaHat == fit.DeltaHat);
  CHECK(back.lambda == 0.125);
  CHECK(back.iterations == 7);
  CHECK(back.finalObjective == -12.5);
  CHECK(back.converged);
  CHECK((back.SigmaInvHat - fit.SigmaInvHat).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("statistics files keep kind, flags and metadata") {
  TestStatVector t;
  t.values = Vector(3);
  t.values << 1.5, -INFINITY, 0.25;
  t.flagged = {0, 1, 0};
  t.kind = StatKind::t_central_matched;
  t.df = 48;
  t.c_n = 0.08;
  Vector p(3);
  p << 0.14, 0.0, 0.8;
  io::write_stats_csv(scratch("s.csv"), t, p, {{"scale_factor", "0.5"}});
  const io::StatsFile back = io::read_stats_csv(scratch("s.csv"));
  CHECK(back.stats.values(0) == 1.5);
  CHECK(back.stats.values(1) == -INFINITY);
  CHECK(back.stats.flagged == t.flagged);
  CHECK(back.stats.kind == StatKind::t_central_matched);
  CHECK(back.stats.df == 48);
  CHECK(back.stats.c_n == 0.08);
  CHECK(back.p == p);
  CHECK(back.meta.at("scale_factor") == "0.5");
  CHECK_THROWS_AS(io::write_stats_csv(scratch("s2.csv"), t, Vector::Zero(2)), ParameterError);
}

TEST_CASE("index lists and FDR curves") {
  io::write_index_list(scratch("idx.txt"), {4, 0, 9});
  CHECK(io::read_index_list(scratch("idx.txt")) == std::vector<Index>{4, 0, 9});
  io::write_text(scratch("badidx.txt"), "1\nfoo\n");
  CHECK_THROWS_AS(io::read_index_list(scratch("badidx.txt")), IoError);

  FdrReport r = fdr_curve({2, 0, 1}, {{"bh", Vector::Constant(3, 0.25)}, {"enull", Vector::Constant(3, 0.5)}},
                          std::vector<Index>{2});
  io::write_fdr_curve_csv(scratch("curve.csv"), r);
  const auto curves = io::read_fdr_curve_csv(scratch("curve.csv"));
  CHECK(curves.count("by") == 0);
  CHECK(curves.at("bh") == r.perProcedure.at("bh"));
  CHECK(curves.at("enull") == r.perProcedure.at("enull"));
  CHECK(curves.at("true_fdp") == *r.trueFdp);
}
