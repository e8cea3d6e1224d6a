#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "bolab/cache.hpp"
#include "bolab/config.hpp"
#include "bolab/error.hpp"
#include "bolab/fit.hpp"
#include "bolab/report.hpp"
#include "bolab/runner.hpp"

using namespace bolab;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bolab_unit_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "config accepted";
  return {};
}

const char* kTransverseConfig = R"j({
  "schema_version": 1,
  "seed": 3,
  "experiments": [
    {"name": "t2", "type": "transverse", "g": "y^2", "a": 2, "levels": 3, "scales": [2], "exact": [1, 3, 5]}
  ]
})j";

ReportRow row(double h, double err, double budget, int k = 1) {
  return {"low", 1, k, h, h, 1.0, 1.0 + err, err, budget};
}

}  // namespace

TEST(FitSlope, ExactPowerLaw) {
  std::vector<std::pair<double, double>> pts;
  for (double h : {0.1, 0.05, 0.025}) pts.emplace_back(h, h * h);
  const auto f = fit_slope(pts);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 0.0, 1e-11);
  EXPECT_LT(f.residual, 1e-12);
}

TEST(FitSlope, Prefactor) {
  std::vector<std::pair<double, double>> pts;
  for (double h : {0.2, 0.1, 0.05, 0.02}) pts.emplace_back(h, 3 * std::pow(h, 1.5));
  const auto f = fit_slope(pts);
  EXPECT_NEAR(f.slope, 1.5, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-11);
}

TEST(FitSlope, NoisyFixture) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(std::log(0.01), std::log(0.2));
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 12; ++i) {
    const double h = std::exp(u(rng));
    pts.emplace_back(h, h * h * (1 + 0.05 * std::sin(1 / h)));
  }
  const auto f = fit_slope(pts);
  EXPECT_GE(f.slope, 1.9);
  EXPECT_LE(f.slope, 2.1);
}

TEST(FitSlope, Errors) {
  const std::vector<std::pair<double, double>> two{{0.1, 0.01}, {0.05, 0.0025}};
  EXPECT_THROW(fit_slope(two), Error);
  const std::vector<std::pair<double, double>> negative{{0.1, 0.01}, {0.05, -0.0025}, {0.02, 0.0004}};
  try {
    fit_slope(negative);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveError);
  }
  const std::vector<std::pair<double, double>> zero{{0.1, 0.01}, {0.05, 0.0}, {0.02, 0.0004}, {0.01, 0.0001}};
  const auto f = fit_slope(zero);
  EXPECT_EQ(f.points, 3u);
  ASSERT_EQ(f.notes.size(), 1u);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
}

TEST(FitRows, BudgetRuleAndSigns) {
  std::vector<ReportRow> rows{row(0.2, 0.04, 1e-6), row(0.1, 0.01, 1e-6), row(0.05, 0.0025, 1e-3),
                              row(0.02, 0.0004, 1e-6)};
  const auto f = fit_rows(rows, "low", 1, 1, true, 2.0);
  EXPECT_EQ(f.excluded, 1u);
  EXPECT_EQ(f.used, 3u);
  ASSERT_TRUE(f.fit.has_value());
  EXPECT_NEAR(f.fit->slope, 2.0, 1e-12);
  rows[1].error = -0.01;
  const auto g = fit_rows(rows, "low", 1, 1, true, 2.0);
  EXPECT_FALSE(g.fit.has_value());
  EXPECT_NE(g.diagnostic.find("sign"), std::string::npos);
  // Re-evaluating from the same rows gives the same record.
  const auto h = fit_rows(rows, "low", 1, 1, true, 2.0);
  EXPECT_EQ(g.diagnostic, h.diagnostic);
}

TEST(Report, CsvRoundTrip) {
  std::vector<ReportRow> rows{row(0.2, 1.0 / 3.0, 1e-9), row(0.1, -2e-5, 3e-17, 2)};
  sort_rows(rows);
  EXPECT_EQ(parse_csv(format_csv(rows, false)), rows);
  ReportRow s{"surface", 1, 1, 0.05, 0.05, 0.11, 0.112, 0.002, 1e-8, 1, 1, 1, M_PI};
  const std::vector<ReportRow> surface{s};
  const std::string text = format_csv(surface, true);
  EXPECT_EQ(text.substr(0, text.find('\n')), std::string(kCsvHeader) + kSurfaceColumns);
  EXPECT_EQ(parse_csv(text), surface);
}

TEST(Report, RowsSortedByDescendingH) {
  std::vector<ReportRow> rows{row(0.05, 1, 0), row(0.2, 1, 0), row(0.1, 1, 0)};
  sort_rows(rows);
  EXPECT_EQ(rows[0].h, 0.2);
  EXPECT_EQ(rows[2].h, 0.05);
}

TEST(Config, BundledConfigsValidate) {
  for (const auto& entry : fs::directory_iterator(BOLAB_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const RunConfig c = load_config(entry.path());
    EXPECT_NO_THROW(validate_config(c)) << entry.path();
    EXPECT_EQ(c.hash, hex64(fnv1a64(read_file(entry.path()))));
  }
}

TEST(Config, NegativeDegreeNamesField) {
  const std::string msg = config_error(R"j({"schema_version": 1, "experiments": [
    {"name": "x", "type": "low", "model": {"f": "1 + x^2", "g": "y^2", "a": -1}, "hbar": [0.1]}]})j");
  EXPECT_NE(msg.find("experiments[0].model.a"), std::string::npos) << msg;
}

TEST(Config, UnknownKeyIsAnError) {
  const std::string msg = config_error(R"j({"schema_version": 1, "experiments": [
    {"name": "x", "type": "transverse", "g": "y^2", "a": 2, "levles": 3}]})j");
  EXPECT_NE(msg.find("experiments[0].levles"), std::string::npos) << msg;
  EXPECT_NE(config_error(R"j({"schema_version": 1, "extra": 0, "experiments": []})j").find("$."),
            std::string::npos);
}

TEST(Config, SchemaVersionChecked) {
  EXPECT_NE(config_error(R"j({"schema_version": 2, "experiments": []})j").find("schema_version"), std::string::npos);
  EXPECT_NE(config_error("{not json").find("malformed"), std::string::npos);
}

TEST(Config, InvalidModelIsConfigError) {
  const RunConfig c = parse_config(R"j({"schema_version": 1, "experiments": [
    {"name": "x", "type": "low", "model": {"f": "1 + x^2", "g": "y^4", "a": 2}, "hbar": [0.1]}]})j");
  try {
    validate_config(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_NE(std::string(e.what()).find("experiments[0]"), std::string::npos);
  }
}

TEST(Runner, TransverseExperimentPasses) {
  const RunConfig c = parse_config(kTransverseConfig);
  const SweepReport r = run(c);
  ASSERT_EQ(r.experiments.size(), 1u);
  EXPECT_TRUE(r.experiments[0].failure.empty()) << r.experiments[0].failure;
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(exit_code(r), 0);
  EXPECT_EQ(r.experiments[0].rows.size(), 6u);
}

TEST(Runner, FailureIsRecorded) {
  const RunConfig c = parse_config(R"j({"schema_version": 1, "experiments": [
    {"name": "bad", "type": "transverse", "g": "log(y)", "a": 2, "levels": 2}]})j");
  const SweepReport r = run(c);
  EXPECT_FALSE(r.experiments[0].failure.empty());
  EXPECT_EQ(exit_code(r), 3);
}

TEST(Runner, DeterministicAndCacheCoherent) {
  const fs::path dir = scratch_dir("cache");
  const RunConfig c = parse_config(kTransverseConfig);
  const std::string cold = format_csv(run(c).experiments[0].rows, false);
  DiskCache cache(dir / "cache");
  RunOptions opts;
  opts.cache = &cache;
  const std::string first = format_csv(run(c, opts).experiments[0].rows, false);
  EXPECT_GT(cache.misses(), 0u);
  const std::size_t misses = cache.misses();
  const std::string warm = format_csv(run(c, opts).experiments[0].rows, false);
  EXPECT_EQ(cache.misses(), misses);
  EXPECT_GT(cache.hits(), 0u);
  EXPECT_EQ(cold, first);
  EXPECT_EQ(cold, warm);
  EXPECT_GT(cache.stats().entries, 0u);
  cache.clear();
  EXPECT_EQ(cache.stats().entries, 0u);
  fs::remove_all(dir);
}

TEST(Emit, FilesAndReferences) {
  const fs::path dir = scratch_dir("emit");
  const fs::path cfg = dir / "c.json";
  std::ofstream(cfg) << kTransverseConfig;
  const RunConfig c = load_config(cfg);
  SweepReport r = run(c);
  r.config_path = cfg.string();
  const auto files = emit(r, dir / "out");
  EXPECT_EQ(files.size(), 3u);
  EXPECT_EQ(parse_csv(read_file(dir / "out" / "t2.csv")), r.experiments[0].rows);

  const std::string plot = read_file(dir / "out" / "t2.gp");
  std::regex quoted("'([^']+\\.csv)'");
  for (auto it = std::sregex_iterator(plot.begin(), plot.end(), quoted); it != std::sregex_iterator(); ++it) {
    EXPECT_TRUE(fs::exists(dir / "out" / (*it)[1].str())) << (*it)[1].str();
  }
  const std::string json = read_file(dir / "out" / "report.json");
  EXPECT_NE(json.find(hex64(fnv1a64(read_file(cfg)))), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cache, BitIdenticalRoundTrip) {
  EigenResult r;
  r.eigenvalues = {1.0 / 3.0, std::sqrt(2.0), 1e-300};
  r.residuals = {1e-12, 2e-13, 0.0};
  r.vectors = Eigen::MatrixXd::Random(4, 3);
  const auto back = deserialize_result(serialize_result("key", r), "key");
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->eigenvalues, r.eigenvalues);
  EXPECT_EQ(back->residuals, r.residuals);
  EXPECT_EQ(back->vectors, r.vectors);
  EXPECT_FALSE(deserialize_result(serialize_result("key", r), "other").has_value());
}
