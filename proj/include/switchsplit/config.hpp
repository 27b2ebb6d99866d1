#pragma once

#include <string>

#include <json.hpp>

#include "switchsplit/engine.hpp"

namespace switchsplit {

struct OutputConfig {
  enum class Format { Csv, Json };
  Format format = Format::Csv;
  std::string path = "results.csv";
  bool dump_survivor_paths = false;
};

// Fully validated experiment description. Field layout mirrors the JSON
// sections; build_model()/build_levels() construct the runtime objects.
struct ExperimentConfig {
  int d = 1;
  int m = 1;
  DriftSpec drift;
  RateSpec rates;
  InitialLaw initial;

  LevelFunction phi_kind = LevelFunction::Coordinate;
  int coord_index = 0;
  std::vector<double> thresholds;
  double horizon_T = 0.0;

  EngineConfig engine;
  OutputConfig output;

  SwitchingModel build_model() const;
  LevelSchedule build_levels() const;

  // Serialization with all defaults materialized; reloading the result
  // yields an equivalent config.
  nlohmann::ordered_json to_json() const;
};

// Parse and validate. Throws ConfigError carrying every violation (each
// prefixed with its field path), not just the first one found.
ExperimentConfig load_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

const char* scheme_name(Scheme s);
const char* dynamics_name(Dynamics d);

}  // namespace switchsplit
