#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "switchsplit/splitting.hpp"

namespace switchsplit {

enum class Scheme { Weighted, Resampled };

struct EngineOptions {
  unsigned threads = 0;       // 0 = one worker per hardware thread
  bool record_paths = false;  // keep full paths of final-level survivors
};

// Outcome of one splitting run. Per-level arrays are indexed 0-based by
// level - 1. Levels never executed because of earlier extinction hold NaN
// in p_hat and -1 in survivors.
struct SplittingResult {
  Scheme scheme = Scheme::Weighted;
  Dynamics dynamics = Dynamics::Joint;
  long n_particles = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;      // product of p_hat over all levels, 0 if extinct
  double log_estimate = 0.0;  // sum of log p_hat; -inf if extinct
  std::vector<double> p_hat;
  std::vector<long> survivors;
  std::optional<int> extinct_at;  // 1-based level with zero survivors
  double wall_seconds = 0.0;
  std::vector<Matrix> survivor_paths;  // d x K each; only when record_paths
};

SplittingResult run_weighted(const SwitchingModel& model, const LevelSchedule& levels,
                             long N, Dynamics dynamics, double h, std::uint64_t seed,
                             const EngineOptions& options = {});
SplittingResult run_resampled(const SwitchingModel& model, const LevelSchedule& levels,
                              long N, Dynamics dynamics, double h, std::uint64_t seed,
                              const EngineOptions& options = {});
SplittingResult run_splitting(Scheme scheme, const SwitchingModel& model,
                              const LevelSchedule& levels, long N, Dynamics dynamics,
                              double h, std::uint64_t seed,
                              const EngineOptions& options = {});

struct CrudeResult {
  double estimate = 0.0;
  double std_error = 0.0;
  long hits = 0;
  long n_paths = 0;
  double wall_seconds = 0.0;
};

// Direct full-path baseline: fraction of N independent paths whose score
// reaches the last threshold by T, with binomial standard error.
CrudeResult crude_mc(const SwitchingModel& model, const LevelSchedule& levels, long N,
                     Dynamics dynamics, double h, std::uint64_t seed,
                     const EngineOptions& options = {});

// Which estimator cells to run; mirrors the engine section of the config.
struct EngineConfig {
  std::vector<Scheme> schemes;     // expansion of weighted | resampled | both
  std::vector<Dynamics> dynamics;  // expansion of joint | marginal | both
  long n_particles = 0;
  int replicates = 0;
  std::uint64_t seed = 0;
  double step_h = 0.0;
};

struct CellStats {
  Scheme scheme = Scheme::Weighted;
  Dynamics dynamics = Dynamics::Joint;
  int replicates = 0;
  double mean = 0.0;
  double variance = 0.0;           // unbiased sample variance
  double relative_variance = 0.0;  // variance / mean^2, NaN when mean == 0
  double wall_seconds = 0.0;
  std::vector<SplittingResult> results;  // one per replicate, in order
};

struct ComparisonReport {
  std::vector<CellStats> cells;
};

// Run every (scheme x dynamics) cell R times. Replicate r of every cell
// uses the same derived seed, so cells are paired: differences between
// cells are not masked by independent seed noise. Deterministic given
// base_seed, independent of options.threads.
ComparisonReport replicate(const SwitchingModel& model, const LevelSchedule& levels,
                           const EngineConfig& engine, int R, std::uint64_t base_seed,
                           const EngineOptions& options = {});

// Seed of replicate r under base_seed; exposed so external tooling can
// reproduce a single replicate of a larger report.
std::uint64_t replicate_seed(std::uint64_t base_seed, int r);

}  // namespace switchsplit
