#pragma once

#include <functional>
#include <string>

#include "bolab/config.hpp"
#include "bolab/report.hpp"

namespace bolab {

class ResultCache;

struct RunOptions {
  int jobs = 0;  ///< worker threads; 0 uses the hardware concurrency
  ResultCache* cache = nullptr;
  std::function<void(const std::string&)> log;
};

/// Runs one experiment. Computation errors are caught and recorded in
/// `failure`; the report then carries whatever rows were finished.
ExperimentReport run_experiment(const Experiment& experiment, const RunOptions& options = {});

SweepReport run(const RunConfig& config, const RunOptions& options = {});

/// 0 when every verdict passes, 3 when any experiment failed to compute,
/// 1 otherwise.
int exit_code(const SweepReport& report);

}  // namespace bolab
