#include "switchsplit/engine.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "switchsplit/parallel.hpp"

namespace switchsplit {

namespace {

struct GridSpec {
  int n_steps = 0;
  double h = 0.0;
  double final_dt = 0.0;
  double sqrt_h = 0.0;
  double sqrt_final = 0.0;

  GridSpec(double step, double T) {
    h = step;
    n_steps = grid_steps(T, step);
    final_dt = n_steps == 1 ? T : T - static_cast<double>(n_steps - 1) * step;
    sqrt_h = std::sqrt(h);
    sqrt_final = std::sqrt(final_dt);
  }

  double dt(int step) const { return step == n_steps - 1 ? final_dt : h; }
  double sd(int step) const { return step == n_steps - 1 ? sqrt_final : sqrt_h; }
};

// One particle's stopped state. `step` is the global grid index; `hist`
// holds the recorded x path (d values per grid point) when recording.
struct PState {
  Vector x;
  int theta = 0;
  Vector pi;
  int step = 0;
  std::vector<double> hist;
};

void append_hist(PState& p) {
  for (Eigen::Index i = 0; i < p.x.size(); ++i) p.hist.push_back(p.x[i]);
}

void check_engine_args(const SwitchingModel& model, const LevelSchedule& levels, long N,
                       double h) {
  if (N < 2) throw UsageError("engine: n_particles must be >= 2");
  if (!(h > 0.0) || !std::isfinite(h)) throw UsageError("engine: step_h must be > 0");
  if (levels.kind() == LevelFunction::Coordinate && levels.coord_index() >= model.dim())
    throw UsageError("engine: coord_index out of range for model dimension");
  if (h * model.max_exit_rate_bound() >= 1.0)
    throw UsageError("engine: step_h violates h * max exit rate < 1");
}

PState draw_initial(const SwitchingModel& model, Dynamics dyn, std::uint64_t run_seed,
                    long slot, bool record) {
  RngStream rng(derive_seed(run_seed, 0, static_cast<std::uint64_t>(slot), kTagPropagate));
  PState p;
  sample_initial_x(model, rng, p.x);
  if (dyn == Dynamics::Joint) {
    p.theta = sample_initial_mode(model, rng);
  } else {
    p.pi = model.initial().theta_probs;
    project_simplex_inplace(p.pi);
  }
  p.step = 0;
  if (record) append_hist(p);
  return p;
}

// Advance one particle until its score reaches threshold `level` or the
// grid is exhausted. The check runs on the start state first: a particle
// whose inherited state already lies in the level's set survives with no
// propagation, matching grid-resolution detection on a stored path.
bool propagate_to_level(const SwitchingModel& model, const LevelSchedule& levels,
                        int level, Dynamics dyn, const GridSpec& grid, PState& p,
                        RngStream& rng, FilterWorkspace& ws, bool record) {
  const double L = levels.threshold(level);
  const int d = model.dim();
  const bool draw_mode = model.modes() > 1;
  if (levels.phi(p.x) >= L) return true;
  while (p.step < grid.n_steps) {
    const double dt = grid.dt(p.step);
    const double sd = grid.sd(p.step);
    for (int i = 0; i < d; ++i) ws.noise[i] = sd * rng.normal();
    if (dyn == Dynamics::Joint) {
      const double u = draw_mode ? rng.uniform() : 0.0;
      step_joint_inplace(model, p.x, p.theta, dt, ws.noise, u, ws);
    } else {
      step_marginal_inplace(model, p.x, p.pi, dt, ws.noise, ws);
    }
    ++p.step;
    if (record) append_hist(p);
    if (levels.phi(p.x) >= L) return true;
  }
  return false;
}

void finalize_estimate(SplittingResult& out) {
  if (out.extinct_at) {
    out.estimate = 0.0;
    out.log_estimate = -std::numeric_limits<double>::infinity();
    return;
  }
  double prod = 1.0;
  double log_sum = 0.0;
  for (double p : out.p_hat) {
    prod *= p;
    log_sum += std::log(p);
  }
  out.estimate = prod;
  out.log_estimate = log_sum;
}

void collect_survivor_paths(const std::vector<PState>& pool, int d, SplittingResult& out) {
  for (const PState& p : pool) {
    const int K = p.step + 1;
    Matrix path(d, K);
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < d; ++i)
        path(i, k) = p.hist[static_cast<std::size_t>(k) * d + i];
    out.survivor_paths.push_back(std::move(path));
  }
}

SplittingResult run_scheme(Scheme scheme, const SwitchingModel& model,
                           const LevelSchedule& levels, long N, Dynamics dyn, double h,
                           std::uint64_t seed, const EngineOptions& options) {
  check_engine_args(model, levels, N, h);
  const auto t0 = std::chrono::steady_clock::now();
  const GridSpec grid(h, levels.horizon());
  const int n = levels.levels();
  const int d = model.dim();
  const bool record = options.record_paths;

  SplittingResult out;
  out.scheme = scheme;
  out.dynamics = dyn;
  out.n_particles = N;
  out.seed = seed;
  out.p_hat.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
  out.survivors.assign(static_cast<std::size_t>(n), -1);

  const auto count = static_cast<std::size_t>(N);
  std::vector<PState> pool(count);
  parallel_for(count, options.threads, [&](std::size_t i) {
    pool[i] = draw_initial(model, dyn, seed, static_cast<long>(i), record);
  });

  std::vector<PState> next(count);
  std::vector<char> hit(count, 0);

  for (int k = 1; k <= n; ++k) {
    if (scheme == Scheme::Weighted) {
      // Every slot draws a uniform ancestor from the previous survivor
      // pool (level 0: all initial particles), then propagates a fresh
      // copy. Selection uses its own per-slot stream so the ancestor
      // choice is independent of the propagation noise and of scheduling.
      const std::size_t pool_size = pool.size();
      parallel_for(count, options.threads, [&](std::size_t i) {
        RngStream sel(derive_seed(seed, static_cast<std::uint64_t>(k), i, kTagSelect));
        PState p = pool[sel.uniform_index(pool_size)];
        RngStream prop(derive_seed(seed, static_cast<std::uint64_t>(k), i, kTagPropagate));
        FilterWorkspace ws;
        ws.resize(d, model.modes());
        hit[i] = propagate_to_level(model, levels, k, dyn, grid, p, prop, ws, record) ? 1 : 0;
        next[i] = std::move(p);
      });
      long survivors = 0;
      for (std::size_t i = 0; i < count; ++i) survivors += hit[i];
      out.survivors[static_cast<std::size_t>(k - 1)] = survivors;
      out.p_hat[static_cast<std::size_t>(k - 1)] =
          static_cast<double>(survivors) / static_cast<double>(N);
      if (survivors == 0) {
        out.extinct_at = k;
        break;
      }
      std::vector<PState> kept;
      kept.reserve(static_cast<std::size_t>(survivors));
      for (std::size_t i = 0; i < count; ++i)
        if (hit[i]) kept.push_back(std::move(next[i]));
      pool = std::move(kept);
      next.assign(count, PState{});
    } else {
      // Propagate all N current particles in place; survivors stay put
      // and every dead slot is replaced by a copy of a uniformly chosen
      // survivor. The survival fraction is taken before selection.
      parallel_for(count, options.threads, [&](std::size_t i) {
        RngStream prop(derive_seed(seed, static_cast<std::uint64_t>(k), i, kTagPropagate));
        FilterWorkspace ws;
        ws.resize(d, model.modes());
        hit[i] =
            propagate_to_level(model, levels, k, dyn, grid, pool[i], prop, ws, record) ? 1 : 0;
      });
      long survivors = 0;
      std::vector<std::size_t> alive;
      alive.reserve(count);
      for (std::size_t i = 0; i < count; ++i)
        if (hit[i]) {
          ++survivors;
          alive.push_back(i);
        }
      out.survivors[static_cast<std::size_t>(k - 1)] = survivors;
      out.p_hat[static_cast<std::size_t>(k - 1)] =
          static_cast<double>(survivors) / static_cast<double>(N);
      if (survivors == 0) {
        out.extinct_at = k;
        break;
      }
      for (std::size_t i = 0; i < count; ++i) {
        if (hit[i]) continue;
        RngStream sel(derive_seed(seed, static_cast<std::uint64_t>(k), i, kTagSelect));
        pool[i] = pool[alive[sel.uniform_index(alive.size())]];
      }
    }
  }

  finalize_estimate(out);
  if (record && !out.extinct_at) {
    // Final-level survivors. For the resampled scheme the post-selection
    // population equals the survivor multiset up to copies; dump the
    // distinct survivors (pre-selection) in slot order for both schemes.
    if (scheme == Scheme::Weighted) {
      collect_survivor_paths(pool, d, out);
    } else {
      std::vector<PState> kept;
      for (std::size_t i = 0; i < count; ++i)
        if (hit[i]) kept.push_back(pool[i]);
      collect_survivor_paths(kept, d, out);
    }
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace

SplittingResult run_weighted(const SwitchingModel& model, const LevelSchedule& levels,
                             long N, Dynamics dynamics, double h, std::uint64_t seed,
                             const EngineOptions& options) {
  return run_scheme(Scheme::Weighted, model, levels, N, dynamics, h, seed, options);
}

SplittingResult run_resampled(const SwitchingModel& model, const LevelSchedule& levels,
                              long N, Dynamics dynamics, double h, std::uint64_t seed,
                              const EngineOptions& options) {
  return run_scheme(Scheme::Resampled, model, levels, N, dynamics, h, seed, options);
}

SplittingResult run_splitting(Scheme scheme, const SwitchingModel& model,
                              const LevelSchedule& levels, long N, Dynamics dynamics,
                              double h, std::uint64_t seed, const EngineOptions& options) {
  return run_scheme(scheme, model, levels, N, dynamics, h, seed, options);
}

CrudeResult crude_mc(const SwitchingModel& model, const LevelSchedule& levels, long N,
                     Dynamics dynamics, double h, std::uint64_t seed,
                     const EngineOptions& options) {
  check_engine_args(model, levels, N, h);
  const auto t0 = std::chrono::steady_clock::now();
  const GridSpec grid(h, levels.horizon());
  const int n = levels.levels();
  const int d = model.dim();
  const double L = levels.threshold(n);
  const bool draw_mode = model.modes() > 1;

  const auto count = static_cast<std::size_t>(N);
  std::vector<char> hit(count, 0);
  parallel_for(count, options.threads, [&](std::size_t i) {
    RngStream rng(derive_seed(seed, 0, i, kTagPropagate));
    FilterWorkspace ws;
    ws.resize(d, model.modes());
    Vector x;
    sample_initial_x(model, rng, x);
    int theta = 0;
    Vector pi;
    if (dynamics == Dynamics::Joint) {
      theta = sample_initial_mode(model, rng);
    } else {
      pi = model.initial().theta_probs;
      project_simplex_inplace(pi);
    }
    bool reached = levels.phi(x) >= L;
    for (int step = 0; step < grid.n_steps && !reached; ++step) {
      const double dt = grid.dt(step);
      const double sd = grid.sd(step);
      for (int j = 0; j < d; ++j) ws.noise[j] = sd * rng.normal();
      if (dynamics == Dynamics::Joint) {
        const double u = draw_mode ? rng.uniform() : 0.0;
        step_joint_inplace(model, x, theta, dt, ws.noise, u, ws);
      } else {
        step_marginal_inplace(model, x, pi, dt, ws.noise, ws);
      }
      reached = levels.phi(x) >= L;
    }
    hit[i] = reached ? 1 : 0;
  });

  CrudeResult out;
  out.n_paths = N;
  for (std::size_t i = 0; i < count; ++i) out.hits += hit[i];
  out.estimate = static_cast<double>(out.hits) / static_cast<double>(N);
  out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(N));
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::uint64_t replicate_seed(std::uint64_t base_seed, int r) {
  return derive_seed(base_seed, 0x7265706cull, static_cast<std::uint64_t>(r));
}

ComparisonReport replicate(const SwitchingModel& model, const LevelSchedule& levels,
                           const EngineConfig& engine, int R, std::uint64_t base_seed,
                           const EngineOptions& options) {
  if (R < 2) throw UsageError("replicate: R must be >= 2");
  if (engine.schemes.empty() || engine.dynamics.empty())
    throw UsageError("replicate: no cells requested");

  ComparisonReport report;
  for (Scheme scheme : engine.schemes) {
    for (Dynamics dyn : engine.dynamics) {
      CellStats cell;
      cell.scheme = scheme;
      cell.dynamics = dyn;
      cell.replicates = R;
      cell.results.resize(static_cast<std::size_t>(R));
      const auto t0 = std::chrono::steady_clock::now();
      // Replicates are parallel with one worker each; within-run
      // parallelism would nest. Either layout gives identical results.
      EngineOptions inner = options;
      inner.threads = 1;
      parallel_for(static_cast<std::size_t>(R), options.threads, [&](std::size_t r) {
        cell.results[r] =
            run_scheme(scheme, model, levels, engine.n_particles, dyn, engine.step_h,
                       replicate_seed(base_seed, static_cast<int>(r)), inner);
      });
      cell.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      double mean = 0.0;
      for (const auto& res : cell.results) mean += res.estimate;
      mean /= static_cast<double>(R);
      double var = 0.0;
      for (const auto& res : cell.results) {
        const double e = res.estimate - mean;
        var += e * e;
      }
      var /= static_cast<double>(R - 1);
      cell.mean = mean;
      cell.variance = var;
      cell.relative_variance =
          mean == 0.0 ? std::numeric_limits<double>::quiet_NaN() : var / (mean * mean);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace switchsplit
