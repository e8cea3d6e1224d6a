#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "bolab/cache.hpp"
#include "bolab/config.hpp"
#include "bolab/error.hpp"
#include "bolab/runner.hpp"

namespace fs = std::filesystem;
using namespace bolab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCompute = 3;

fs::path default_cache_dir() {
  if (const char* env = std::getenv("BOLAB_CACHE_DIR")) return env;
  return ".bolab-cache";
}

void print_summary(const SweepReport& report) {
  for (const ExperimentReport& e : report.experiments) {
    std::printf("%-28s %-10s %s (%.1f s)\n", e.name.c_str(), e.type.c_str(),
                !e.failure.empty() ? "ERROR" : (e.passed() ? "PASS" : "FAIL"), e.seconds);
    if (!e.failure.empty()) std::printf("    %s\n", e.failure.c_str());
    for (const Verdict& v : e.verdicts) {
      std::printf("    [%s] %s: measured %.6g, threshold %.6g; %s\n", v.pass ? "pass" : "fail", v.name.c_str(),
                  v.measured, v.threshold, v.detail.c_str());
    }
    for (const FitRecord& f : e.fits) {
      if (!f.fit && !f.diagnostic.empty()) std::printf("    note %s: %s\n", f.series.c_str(), f.diagnostic.c_str());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eigenvalue asymptotics verification for fibered and hypersurface wells"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string cache_dir = default_cache_dir().string();
  int jobs = 0;
  bool no_cache = false;
  bool no_plot = false;
  bool quiet = false;

  auto* run_cmd = app.add_subcommand("run", "Run every experiment of a config and write CSV, JSON and plot files");
  run_cmd->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--jobs,-j", jobs, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
  run_cmd->add_flag("--no-cache", no_cache, "Neither read nor write the result cache");
  run_cmd->add_option("--cache-dir", cache_dir, "Result cache directory");
  run_cmd->add_flag("--no-plot", no_plot, "Skip gnuplot scripts");
  run_cmd->add_flag("--quiet,-q", quiet, "No progress messages");

  auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a config without solving");
  validate_cmd->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);

  auto* cache_cmd = app.add_subcommand("cache", "Inspect or clear the result cache");
  cache_cmd->add_option("--cache-dir", cache_dir, "Result cache directory");
  cache_cmd->require_subcommand(1);
  auto* stats_cmd = cache_cmd->add_subcommand("stats", "Entry count and size");
  auto* clear_cmd = cache_cmd->add_subcommand("clear", "Delete every entry");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) {
      const RunConfig config = load_config(config_path);
      validate_config(config);
      std::printf("%s: valid, %zu experiments, hash %s\n", config_path.c_str(), config.experiments.size(),
                  config.hash.c_str());
      return 0;
    }
    if (*cache_cmd) {
      DiskCache cache(cache_dir);
      if (*stats_cmd) {
        const auto s = cache.stats();
        std::printf("%s: %zu entries, %ju bytes\n", cache.directory().c_str(), s.entries, s.bytes);
      } else if (*clear_cmd) {
        std::printf("removed %zu entries from %s\n", cache.clear(), cache.directory().c_str());
      }
      return 0;
    }

    RunConfig config;
    try {
      config = load_config(config_path);
      validate_config(config);
    } catch (const Error& e) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      return kExitConfig;
    }
    std::unique_ptr<DiskCache> cache;
    if (!no_cache) cache = std::make_unique<DiskCache>(cache_dir);
    RunOptions opts;
    opts.jobs = jobs;
    opts.cache = cache.get();
    if (!quiet) opts.log = [](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); };

    SweepReport report = run(config, opts);
    report.config_path = config_path;
    emit(report, out_dir, !no_plot);
    print_summary(report);
    if (cache) std::printf("cache: %zu hits, %zu misses\n", cache->hits(), cache->misses());
    std::printf("outputs in %s\n", out_dir.c_str());
    return exit_code(report);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitCompute;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCompute;
  }
}
