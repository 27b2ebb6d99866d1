#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "switchsplit/config.hpp"

namespace switchsplit {

// Command-line overrides applied on top of a loaded config.
struct RunOverrides {
  std::optional<std::string> output_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

struct ExperimentOutcome {
  ComparisonReport report;
  std::string results_path;
  std::optional<std::string> paths_path;  // survivor dump, when requested
};

// Run every configured (scheme x dynamics) cell, write the results file
// (and the survivor-path dump when enabled) and return the report. `log`
// receives human-readable per-cell summaries including wall time; the
// written files never contain timing, so reruns are byte-identical.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const RunOverrides& overrides = {},
                                 std::ostream* log = nullptr);

}  // namespace switchsplit
