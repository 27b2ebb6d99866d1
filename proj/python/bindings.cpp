#include <cstdint>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "switchsplit/engine.hpp"
#include "switchsplit/errors.hpp"
#include "switchsplit/model.hpp"
#include "switchsplit/rng.hpp"
#include "switchsplit/simulate.hpp"
#include "switchsplit/splitting.hpp"

namespace py = pybind11;
using namespace switchsplit;

namespace {

Scheme parse_scheme(const std::string& s) {
  if (s == "weighted") return Scheme::Weighted;
  if (s == "resampled") return Scheme::Resampled;
  throw UsageError("unknown scheme '" + s + "' (expected 'weighted' or 'resampled')");
}

Dynamics parse_dynamics(const std::string& s) {
  if (s == "joint") return Dynamics::Joint;
  if (s == "marginal") return Dynamics::Marginal;
  throw UsageError("unknown dynamics '" + s + "' (expected 'joint' or 'marginal')");
}

LevelFunction parse_phi(const std::string& s) {
  if (s == "coordinate") return LevelFunction::Coordinate;
  if (s == "euclidean-norm") return LevelFunction::EuclideanNorm;
  throw UsageError("unknown level function '" + s +
                   "' (expected 'coordinate' or 'euclidean-norm')");
}

SwitchingModel make_model(int d, int m, const std::string& drift_family,
                          std::vector<Matrix> A, std::vector<Vector> c,
                          const std::string& rate_family, Matrix lambda_bar,
                          std::vector<std::vector<Vector>> w, Matrix beta, Vector x0,
                          double scale0, Vector theta_probs) {
  DriftSpec drift;
  if (drift_family == "constant") {
    drift.family = DriftFamily::Constant;
  } else if (drift_family == "affine") {
    drift.family = DriftFamily::Affine;
  } else {
    throw UsageError("unknown drift family '" + drift_family +
                     "' (expected 'constant' or 'affine')");
  }
  drift.A = std::move(A);
  drift.c = std::move(c);

  RateSpec rates;
  if (rate_family == "constant") {
    rates.family = RateFamily::Constant;
  } else if (rate_family == "logistic") {
    rates.family = RateFamily::Logistic;
  } else {
    throw UsageError("unknown rate family '" + rate_family +
                     "' (expected 'constant' or 'logistic')");
  }
  rates.lambda_bar = std::move(lambda_bar);
  rates.w = std::move(w);
  rates.beta = std::move(beta);

  InitialLaw init;
  init.x0 = std::move(x0);
  init.scale0 = scale0;
  init.theta_probs = std::move(theta_probs);
  return SwitchingModel(d, m, std::move(drift), std::move(rates), std::move(init));
}

EngineOptions make_options(unsigned threads, bool record_paths) {
  EngineOptions opts;
  opts.threads = threads;
  opts.record_paths = record_paths;
  return opts;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Switching-diffusion simulation, mode filtering and multilevel splitting";

  py::class_<SwitchingModel>(mod, "Model")
      .def(py::init(&make_model), py::arg("d"), py::arg("m"),
           py::arg("drift_family") = "constant", py::arg("A") = std::vector<Matrix>{},
           py::arg("c") = std::vector<Vector>{}, py::arg("rate_family") = "constant",
           py::arg("lambda_bar") = Matrix(), py::arg("w") = std::vector<std::vector<Vector>>{},
           py::arg("beta") = Matrix(), py::arg("x0") = Vector(), py::arg("scale0") = 0.0,
           py::arg("theta_probs") = Vector())
      .def_property_readonly("d", &SwitchingModel::dim)
      .def_property_readonly("m", &SwitchingModel::modes)
      .def("drift", &SwitchingModel::eval_drift_mode, py::arg("x"), py::arg("mode"))
      .def("rates", &SwitchingModel::eval_rates, py::arg("x"))
      .def("max_exit_rate_bound", &SwitchingModel::max_exit_rate_bound);

  py::class_<LevelSchedule>(mod, "Levels")
      .def(py::init([](const std::string& phi, int coord_index,
                       std::vector<double> thresholds, double horizon) {
             return LevelSchedule(parse_phi(phi), coord_index, std::move(thresholds),
                                  horizon);
           }),
           py::arg("phi") = "coordinate", py::arg("coord_index") = 0,
           py::arg("thresholds") = std::vector<double>{}, py::arg("horizon") = 0.0)
      .def_property_readonly("n", &LevelSchedule::levels)
      .def_property_readonly("thresholds",
                             [](const LevelSchedule& s) { return s.thresholds(); })
      .def_property_readonly("horizon", &LevelSchedule::horizon)
      .def("phi", [](const LevelSchedule& s, const Vector& x) { return s.phi(x); },
           py::arg("x"))
      .def("threshold", &LevelSchedule::threshold, py::arg("k"));

  py::class_<PathSegment>(mod, "PathSegment")
      .def_readonly("s", &PathSegment::s)
      .def_readonly("t", &PathSegment::t)
      .def_readonly("h", &PathSegment::h)
      .def_readonly("final_dt", &PathSegment::final_dt)
      .def_property_readonly("points",
                             [](const PathSegment& p) { return Matrix(p.points); })
      .def_property_readonly("num_points", &PathSegment::num_points)
      .def("time_at", &PathSegment::time_at, py::arg("k"))
      .def("dt", &PathSegment::dt, py::arg("k"))
      .def("slice", &PathSegment::slice, py::arg("first"), py::arg("last"));

  py::class_<JointTrajectory>(mod, "JointTrajectory")
      .def_readonly("path", &JointTrajectory::path)
      .def_readonly("modes", &JointTrajectory::modes);

  py::class_<MarginalTrajectory>(mod, "MarginalTrajectory")
      .def_readonly("path", &MarginalTrajectory::path)
      .def_property_readonly("filters",
                             [](const MarginalTrajectory& t) { return Matrix(t.filters); });

  py::class_<HittingReport>(mod, "HittingReport")
      .def_readonly("hit_step", &HittingReport::hit_step)
      .def_readonly("stop_step", &HittingReport::stop_step)
      .def_readonly("stop_time", &HittingReport::stop_time)
      .def_readonly("segments", &HittingReport::segments)
      .def_property_readonly("levels", &HittingReport::levels)
      .def("reached", &HittingReport::reached, py::arg("k"));

  py::class_<SplittingResult>(mod, "SplittingResult")
      .def_property_readonly("scheme",
                             [](const SplittingResult& r) {
                               return r.scheme == Scheme::Weighted ? "weighted" : "resampled";
                             })
      .def_property_readonly("dynamics",
                             [](const SplittingResult& r) {
                               return r.dynamics == Dynamics::Joint ? "joint" : "marginal";
                             })
      .def_readonly("n_particles", &SplittingResult::n_particles)
      .def_readonly("seed", &SplittingResult::seed)
      .def_readonly("estimate", &SplittingResult::estimate)
      .def_readonly("log_estimate", &SplittingResult::log_estimate)
      .def_readonly("p_hat", &SplittingResult::p_hat)
      .def_readonly("survivors", &SplittingResult::survivors)
      .def_readonly("extinct_at", &SplittingResult::extinct_at)
      .def_readonly("wall_seconds", &SplittingResult::wall_seconds)
      .def_property_readonly("survivor_paths", [](const SplittingResult& r) {
        return std::vector<Matrix>(r.survivor_paths.begin(), r.survivor_paths.end());
      });

  py::class_<CrudeResult>(mod, "CrudeResult")
      .def_readonly("estimate", &CrudeResult::estimate)
      .def_readonly("std_error", &CrudeResult::std_error)
      .def_readonly("hits", &CrudeResult::hits)
      .def_readonly("n_paths", &CrudeResult::n_paths)
      .def_readonly("wall_seconds", &CrudeResult::wall_seconds);

  py::class_<CellStats>(mod, "CellStats")
      .def_property_readonly("scheme",
                             [](const CellStats& c) {
                               return c.scheme == Scheme::Weighted ? "weighted" : "resampled";
                             })
      .def_property_readonly("dynamics",
                             [](const CellStats& c) {
                               return c.dynamics == Dynamics::Joint ? "joint" : "marginal";
                             })
      .def_readonly("replicates", &CellStats::replicates)
      .def_readonly("mean", &CellStats::mean)
      .def_readonly("variance", &CellStats::variance)
      .def_readonly("relative_variance", &CellStats::relative_variance)
      .def_readonly("wall_seconds", &CellStats::wall_seconds)
      .def_readonly("results", &CellStats::results);

  py::class_<ComparisonReport>(mod, "ComparisonReport")
      .def_readonly("cells", &ComparisonReport::cells);

  mod.def("grid_steps", &grid_steps, py::arg("T"), py::arg("h"));
  mod.def("derive_seed", &derive_seed, py::arg("key"), py::arg("a"), py::arg("b") = 0,
          py::arg("c") = 0, py::arg("d") = 0);
  mod.def("replicate_seed", &replicate_seed, py::arg("base_seed"), py::arg("r"));

  mod.def(
      "project_simplex",
      [](Vector v) {
        project_simplex_inplace(v);
        return v;
      },
      py::arg("v"), "Clip negatives and renormalize; uniform fallback when all mass clips");

  mod.def(
      "filter_step",
      [](const SwitchingModel& model, const Vector& x_from, const Vector& x_to,
         const Vector& pi, double dt) {
        return filter_step(model, x_from, x_to, SimplexVector::from_probabilities(pi), dt)
            .weights();
      },
      py::arg("model"), py::arg("x_from"), py::arg("x_to"), py::arg("pi"), py::arg("dt"));

  mod.def(
      "segment_filter_update",
      [](const SwitchingModel& model, const Vector& pi, const PathSegment& segment) {
        return segment_filter_update(model, SimplexVector::from_probabilities(pi), segment)
            .weights();
      },
      py::arg("model"), py::arg("pi"), py::arg("segment"));

  mod.def(
      "simulate_path_joint",
      [](const SwitchingModel& model, double h, double T, std::uint64_t seed) {
        RngStream rng(seed);
        return simulate_path_joint(model, h, T, rng);
      },
      py::arg("model"), py::arg("h"), py::arg("T"), py::arg("seed"),
      py::call_guard<py::gil_scoped_release>());

  mod.def(
      "simulate_path_marginal",
      [](const SwitchingModel& model, double h, double T, std::uint64_t seed) {
        RngStream rng(seed);
        return simulate_path_marginal(model, h, T, rng);
      },
      py::arg("model"), py::arg("h"), py::arg("T"), py::arg("seed"),
      py::call_guard<py::gil_scoped_release>());

  mod.def("detect_hits", &detect_hits, py::arg("path"), py::arg("levels"));
  mod.def("potential", &potential, py::arg("segment"), py::arg("k"), py::arg("levels"));

  mod.def(
      "run_splitting",
      [](const std::string& scheme, const SwitchingModel& model, const LevelSchedule& levels,
         long n_particles, const std::string& dynamics, double h, std::uint64_t seed,
         unsigned threads, bool record_paths) {
        return run_splitting(parse_scheme(scheme), model, levels, n_particles,
                             parse_dynamics(dynamics), h, seed,
                             make_options(threads, record_paths));
      },
      py::arg("scheme"), py::arg("model"), py::arg("levels"), py::arg("n_particles"),
      py::arg("dynamics"), py::arg("h"), py::arg("seed"), py::arg("threads") = 0,
      py::arg("record_paths") = false, py::call_guard<py::gil_scoped_release>());

  mod.def(
      "crude_mc",
      [](const SwitchingModel& model, const LevelSchedule& levels, long n_paths,
         const std::string& dynamics, double h, std::uint64_t seed, unsigned threads) {
        return crude_mc(model, levels, n_paths, parse_dynamics(dynamics), h, seed,
                        make_options(threads, false));
      },
      py::arg("model"), py::arg("levels"), py::arg("n_paths"), py::arg("dynamics"),
      py::arg("h"), py::arg("seed"), py::arg("threads") = 0,
      py::call_guard<py::gil_scoped_release>());

  mod.def(
      "replicate",
      [](const SwitchingModel& model, const LevelSchedule& levels,
         std::vector<std::string> schemes, std::vector<std::string> dynamics,
         long n_particles, double h, int R, std::uint64_t base_seed, unsigned threads) {
        EngineConfig cfg;
        for (const auto& s : schemes) cfg.schemes.push_back(parse_scheme(s));
        for (const auto& d : dynamics) cfg.dynamics.push_back(parse_dynamics(d));
        cfg.n_particles = n_particles;
        cfg.replicates = R;
        cfg.seed = base_seed;
        cfg.step_h = h;
        return replicate(model, levels, cfg, R, base_seed, make_options(threads, false));
      },
      py::arg("model"), py::arg("levels"), py::arg("schemes"), py::arg("dynamics"),
      py::arg("n_particles"), py::arg("h"), py::arg("R"), py::arg("base_seed"),
      py::arg("threads") = 0, py::call_guard<py::gil_scoped_release>());
}
