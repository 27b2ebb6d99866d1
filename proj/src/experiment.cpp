#include "switchsplit/experiment.hpp"

#include <fstream>

#include "switchsplit/report.hpp"

namespace switchsplit {

namespace {

std::string paths_file_name(const std::string& results_path) {
  const auto dot = results_path.find_last_of('.');
  const auto slash = results_path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return results_path + ".paths.csv";
  return results_path.substr(0, dot) + ".paths" + results_path.substr(dot);
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const RunOverrides& overrides, std::ostream* log) {
  const SwitchingModel model = config.build_model();
  const LevelSchedule levels = config.build_levels();

  EngineConfig engine = config.engine;
  if (overrides.seed) engine.seed = *overrides.seed;

  EngineOptions options;
  options.threads = overrides.threads;
  options.record_paths = config.output.dump_survivor_paths;

  ExperimentOutcome outcome;
  outcome.report =
      replicate(model, levels, engine, engine.replicates, engine.seed, options);

  if (log) {
    for (const CellStats& cell : outcome.report.cells) {
      *log << "cell scheme=" << scheme_name(cell.scheme)
           << " dynamics=" << dynamics_name(cell.dynamics)
           << " replicates=" << cell.replicates << " mean=" << format_double(cell.mean)
           << " variance=" << format_double(cell.variance)
           << " relative_variance=" << format_double(cell.relative_variance)
           << " wall_seconds=" << format_double(cell.wall_seconds) << "\n";
    }
  }

  outcome.results_path = overrides.output_path.value_or(config.output.path);
  const int n_levels = static_cast<int>(config.thresholds.size());
  {
    std::ofstream out(outcome.results_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + outcome.results_path);
    if (config.output.format == OutputConfig::Format::Csv)
      write_results_csv(out, outcome.report, n_levels);
    else
      write_results_json(out, outcome.report, n_levels);
    if (!out) throw std::runtime_error("write failed: " + outcome.results_path);
  }

  if (config.output.dump_survivor_paths) {
    outcome.paths_path = paths_file_name(outcome.results_path);
    std::ofstream out(*outcome.paths_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + *outcome.paths_path);
    write_survivor_paths_csv(out, outcome.report, config.d, config.engine.step_h,
                             config.horizon_T);
    if (!out) throw std::runtime_error("write failed: " + *outcome.paths_path);
  }

  if (log) *log << "wrote " << outcome.results_path << "\n";
  return outcome;
}

}  // namespace switchsplit
