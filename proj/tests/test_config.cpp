#include <doctest.h>

#include <string>

#include "switchsplit/config.hpp"

using namespace switchsplit;

namespace {

const char* kMinimal = R"({
  "levels": {"thresholds": [1.0], "horizon_T": 1.0},
  "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
})";

// Parse expecting failure; returns the violation list.
std::vector<std::string> violations_of(const std::string& text) {
  try {
    load_config_text(text);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  FAIL("expected the configuration to be rejected");
  return {};
}

bool mentions(const std::vector<std::string>& violations, const std::string& needle) {
  for (const auto& v : violations)
    if (v.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("a minimal config fills in documented defaults") {
  const ExperimentConfig cfg = load_config_text(kMinimal);
  CHECK(cfg.d == 1);
  CHECK(cfg.m == 1);
  CHECK(cfg.drift.family == DriftFamily::Constant);
  CHECK(cfg.drift.c.size() == 1);
  CHECK(cfg.drift.c[0][0] == 0.0);
  CHECK(cfg.rates.lambda_bar(0, 0) == 0.0);
  CHECK(cfg.initial.x0[0] == 0.0);
  CHECK(cfg.initial.scale0 == 0.0);
  CHECK(cfg.initial.theta_probs[0] == 1.0);
  CHECK(cfg.phi_kind == LevelFunction::Coordinate);
  CHECK(cfg.coord_index == 0);
  REQUIRE(cfg.engine.schemes.size() == 1);
  CHECK(cfg.engine.schemes[0] == Scheme::Weighted);
  REQUIRE(cfg.engine.dynamics.size() == 1);
  CHECK(cfg.engine.dynamics[0] == Dynamics::Marginal);
  CHECK(cfg.engine.n_particles == 100);
  CHECK(cfg.engine.replicates == 2);
  CHECK(cfg.engine.seed == 7);
  CHECK(cfg.output.format == OutputConfig::Format::Csv);
  CHECK(cfg.output.path == "results.csv");
  CHECK_FALSE(cfg.output.dump_survivor_paths);

  // The parsed config builds runtime objects directly.
  const SwitchingModel model = cfg.build_model();
  CHECK(model.dim() == 1);
  const LevelSchedule levels = cfg.build_levels();
  CHECK(levels.levels() == 1);
}

TEST_CASE("violations carry field paths") {
  const auto bad_thresholds = violations_of(R"({
    "levels": {"thresholds": [2.0, 1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
  })");
  CHECK(mentions(bad_thresholds, "levels.thresholds"));
  CHECK(mentions(bad_thresholds, "strictly increasing"));

  const auto bad_probs = violations_of(R"({
    "model": {"m": 2, "initial": {"theta_probs": [0.5, 0.6]}},
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
  })");
  CHECK(mentions(bad_probs, "model.initial.theta_probs"));
  CHECK(mentions(bad_probs, "sum to 1"));
}

TEST_CASE("every violation is reported in one pass") {
  const auto v = violations_of(R"({
    "model": {"initial": {"scale0": -1.0}},
    "levels": {"thresholds": [2.0, 1.0], "horizon_T": -3.0},
    "engine": {"n_particles": 100, "replicates": 2, "step_h": 0.01}
  })");
  CHECK(v.size() >= 4);
  CHECK(mentions(v, "model.initial.scale0"));
  CHECK(mentions(v, "levels.thresholds"));
  CHECK(mentions(v, "levels.horizon_T"));
  CHECK(mentions(v, "engine.seed"));
}

TEST_CASE("unknown fields are rejected by name") {
  const auto top = violations_of(R"({
    "bananas": 1,
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
  })");
  CHECK(mentions(top, "config.bananas: unknown field"));

  const auto nested = violations_of(R"({
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01,
               "workers": 4}
  })");
  CHECK(mentions(nested, "engine.workers: unknown field"));
}

TEST_CASE("the seed is mandatory") {
  const auto v = violations_of(R"({
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "step_h": 0.01}
  })");
  CHECK(mentions(v, "engine.seed"));
  CHECK(mentions(v, "required"));

  const auto negative = violations_of(R"({
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": -4, "step_h": 0.01}
  })");
  CHECK(mentions(negative, "engine.seed"));
}

TEST_CASE("the stability condition is checked against the rates") {
  const auto v = violations_of(R"({
    "model": {"m": 2, "rates": {"lambda_bar": [[0.0, 10.0], [0.5, 0.0]]}},
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.1}
  })");
  CHECK(mentions(v, "engine.step_h"));
  CHECK(mentions(v, "stability"));

  // Just under the bound passes.
  const ExperimentConfig ok = load_config_text(R"({
    "model": {"m": 2, "rates": {"lambda_bar": [[0.0, 10.0], [0.5, 0.0]]}},
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.09}
  })");
  CHECK(ok.engine.step_h == 0.09);
}

TEST_CASE("coord_index must address a model coordinate") {
  const auto v = violations_of(R"({
    "levels": {"phi": {"kind": "coordinate", "coord_index": 1},
               "thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
  })");
  CHECK(mentions(v, "levels.phi.coord_index"));
  CHECK(mentions(v, "out of range"));

  const auto norm_with_index = violations_of(R"({
    "levels": {"phi": {"kind": "euclidean-norm", "coord_index": 0},
               "thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
  })");
  CHECK(mentions(norm_with_index, "only valid for coordinate kind"));

  const auto negative_norm = violations_of(R"({
    "levels": {"phi": {"kind": "euclidean-norm"},
               "thresholds": [-1.0, 1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
  })");
  CHECK(mentions(negative_norm, "levels.thresholds"));
}

TEST_CASE("scheme and dynamics expand their selectors") {
  const ExperimentConfig cfg = load_config_text(R"({
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"scheme": "both", "dynamics": "both",
               "n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
  })");
  REQUIRE(cfg.engine.schemes.size() == 2);
  CHECK(cfg.engine.schemes[0] == Scheme::Weighted);
  CHECK(cfg.engine.schemes[1] == Scheme::Resampled);
  REQUIRE(cfg.engine.dynamics.size() == 2);
  CHECK(cfg.engine.dynamics[0] == Dynamics::Joint);
  CHECK(cfg.engine.dynamics[1] == Dynamics::Marginal);

  const auto bad = violations_of(R"({
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"scheme": "fancy",
               "n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
  })");
  CHECK(mentions(bad, "engine.scheme"));
}

TEST_CASE("serialization round-trips a fully specified config") {
  const char* text = R"({
    "model": {
      "d": 2, "m": 2,
      "drift": {"family": "affine",
                "A": [[[ -0.3, 0.4], [-0.4, -0.3]], [[-0.1, 0.0], [0.0, -0.5]]],
                "c": [[0.2, -0.1], [0.8, 0.3]]},
      "rates": {"family": "logistic",
                "lambda_bar": [[0.0, 0.8], [1.2, 0.0]],
                "w": [[[0.0, 0.0], [1.0, -1.0]], [[0.5, 0.5], [0.0, 0.0]]],
                "beta": [[0.0, 0.25], [-0.5, 0.0]]},
      "initial": {"x0": [0.5, -0.5], "scale0": 0.5, "theta_probs": [0.6, 0.4]}
    },
    "levels": {"phi": {"kind": "euclidean-norm"},
               "thresholds": [1.0, 2.0, 3.0], "horizon_T": 2.5},
    "engine": {"scheme": "resampled", "dynamics": "both",
               "n_particles": 5000, "replicates": 10, "seed": 123456789, "step_h": 0.005},
    "output": {"format": "json", "path": "out/run.json", "dump_survivor_paths": true}
  })";
  const ExperimentConfig cfg = load_config_text(text);
  CHECK(cfg.output.format == OutputConfig::Format::Json);
  CHECK(cfg.output.path == "out/run.json");
  CHECK(cfg.output.dump_survivor_paths);

  const auto dumped = cfg.to_json();
  const ExperimentConfig again = load_config_text(dumped.dump());
  CHECK(again.to_json() == dumped);
  CHECK(again.engine.seed == 123456789);
  CHECK(again.thresholds == cfg.thresholds);
  CHECK(again.rates.beta(0, 1) == 0.25);

  // The minimal config also survives a round trip.
  const ExperimentConfig mini = load_config_text(kMinimal);
  CHECK(load_config_text(mini.to_json().dump()).to_json() == mini.to_json());
}

TEST_CASE("malformed json is reported as a parse error") {
  const auto v = violations_of("{ not json");
  CHECK(mentions(v, "json parse error"));

  const auto scalar = violations_of("42");
  CHECK(mentions(scalar, "expected a JSON object"));
}

TEST_CASE("drift and rate families gate their parameters") {
  const auto affine_missing_A = violations_of(R"({
    "model": {"drift": {"family": "affine", "c": [[0.0]]}},
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
  })");
  CHECK(mentions(affine_missing_A, "model.drift.A"));
  CHECK(mentions(affine_missing_A, "required for affine drift"));

  const auto constant_with_A = violations_of(R"({
    "model": {"drift": {"family": "constant", "A": [[[0.0]]]}},
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
  })");
  CHECK(mentions(constant_with_A, "only valid for affine drift"));

  const auto constant_with_w = violations_of(R"({
    "model": {"m": 2, "rates": {"family": "constant",
                                "lambda_bar": [[0.0, 1.0], [1.0, 0.0]],
                                "w": [[[0.0], [0.0]], [[0.0], [0.0]]]}},
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
  })");
  CHECK(mentions(constant_with_w, "model.rates.w"));

  const auto negative_rate = violations_of(R"({
    "model": {"m": 2, "rates": {"lambda_bar": [[0.0, -1.0], [1.0, 0.0]]}},
    "levels": {"thresholds": [1.0], "horizon_T": 1.0},
    "engine": {"n_particles": 100, "replicates": 2, "seed": 7, "step_h": 0.01}
  })");
  CHECK(mentions(negative_rate, "off-diagonal entries must be >= 0"));
}
