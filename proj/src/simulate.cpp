#include "switchsplit/simulate.hpp"

#include <cmath>

namespace switchsplit {

namespace {

// Index drawn from unnormalized nonnegative weights via one uniform.
// Rounding can leave u at or above the accumulated total; fall back to the
// last index with positive weight so the draw is always supported.
template <class Weights>
int categorical_pick(const Weights& p, int m, double u) {
  double acc = 0.0;
  int last_pos = 0;
  for (int j = 0; j < m; ++j) {
    const double pj = p(j);
    if (pj > 0.0) last_pos = j;
    acc += pj;
    if (u < acc) return j;
  }
  return last_pos;
}

void check_step(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw UsageError("step size must be finite and > 0");
}

}  // namespace

PathSegment PathSegment::slice(int first, int last) const {
  const int K = num_points();
  if (first < 0 || last >= K || first > last) throw UsageError("path slice out of range");
  PathSegment out;
  out.h = h;
  out.s = time_at(first);
  out.t = time_at(last);
  out.points = points.middleCols(first, last - first + 1);
  out.final_dt = last == first ? 0.0 : dt(last - 1);
  return out;
}

void filter_update_core(const Vector& dx, double dt, Vector& pi, FilterWorkspace& ws) {
  // G = diag(pi) b^T - pi (b pi)^T
  ws.bpi.noalias() = ws.b * pi;
  ws.G.noalias() = pi.asDiagonal() * ws.b.transpose();
  ws.G.noalias() -= pi * ws.bpi.transpose();
  // f = Lambda^T pi - G b pi
  ws.f.noalias() = ws.lambda.transpose() * pi;
  ws.f.noalias() -= ws.G * ws.bpi;
  pi += dt * ws.f;
  pi.noalias() += ws.G * dx;
  project_simplex_inplace(pi);
}

SimplexVector filter_step(const SwitchingModel& model, const Vector& x_from,
                          const Vector& x_to, const SimplexVector& pi, double dt) {
  check_step(dt);
  if (x_from.size() != model.dim() || x_to.size() != model.dim())
    throw UsageError("filter_step: state dimension mismatch");
  if (pi.size() != model.modes()) throw UsageError("filter_step: filter size mismatch");
  if (!x_from.allFinite() || !x_to.allFinite())
    throw NumericalError("filter_step: non-finite state");

  FilterWorkspace ws;
  ws.resize(model.dim(), model.modes());
  model.eval_drift_matrix_into(x_from, ws.b);
  model.eval_rates_into(x_from, ws.lambda);
  Vector p = pi.weights();
  filter_update_core(x_to - x_from, dt, p, ws);
  return SimplexVector::from_projected(std::move(p));
}

void step_joint_inplace(const SwitchingModel& model, Vector& x, int& theta, double h,
                        const Vector& noise, double u, FilterWorkspace& ws) {
  model.eval_drift_mode_into(x, theta, ws.bmode);
  if (model.modes() > 1) {
    model.eval_rates_into(x, ws.lambda);
    const int m = model.modes();
    const int i = theta;
    if (h * -ws.lambda(i, i) > 1.0)
      throw UsageError("step size violates h * exit rate <= 1");
    theta = categorical_pick(
        [&](int j) { return (j == i ? 1.0 : 0.0) + h * ws.lambda(i, j); }, m, u);
  }
  x += h * ws.bmode;
  x += noise;
}

JointState step_joint(const SwitchingModel& model, const JointState& state, double h,
                      const Vector& noise, double u) {
  check_step(h);
  if (state.x.size() != model.dim() || noise.size() != model.dim())
    throw UsageError("step_joint: dimension mismatch");
  if (state.theta < 0 || state.theta >= model.modes())
    throw UsageError("step_joint: mode index out of range");
  if (!state.x.allFinite() || !noise.allFinite())
    throw NumericalError("step_joint: non-finite input");

  FilterWorkspace ws;
  ws.resize(model.dim(), model.modes());
  JointState next{state.x, state.theta, state.clock + h};
  step_joint_inplace(model, next.x, next.theta, h, noise, u, ws);
  return next;
}

void step_marginal_inplace(const SwitchingModel& model, Vector& x, Vector& pi, double h,
                           const Vector& noise, FilterWorkspace& ws) {
  model.eval_drift_matrix_into(x, ws.b);
  model.eval_rates_into(x, ws.lambda);
  ws.bpi.noalias() = ws.b * pi;
  // Advance x first, then feed the realized increment to the filter. The
  // increment is recomputed as x_new - x_old so that replaying the stored
  // path through filter_step reproduces the update exactly.
  ws.x_prev = x;
  x += h * ws.bpi;
  x += noise;
  ws.x_prev = x - ws.x_prev;  // realized dx
  filter_update_core(ws.x_prev, h, pi, ws);
}

MarginalState step_marginal(const SwitchingModel& model, const MarginalState& state,
                            double h, const Vector& noise) {
  check_step(h);
  if (state.x.size() != model.dim() || noise.size() != model.dim())
    throw UsageError("step_marginal: dimension mismatch");
  if (state.pi.size() != model.modes())
    throw UsageError("step_marginal: filter size mismatch");
  if (!state.x.allFinite() || !noise.allFinite())
    throw NumericalError("step_marginal: non-finite input");

  FilterWorkspace ws;
  ws.resize(model.dim(), model.modes());
  Vector x = state.x;
  Vector p = state.pi.weights();
  step_marginal_inplace(model, x, p, h, noise, ws);
  return MarginalState{std::move(x), SimplexVector::from_projected(std::move(p)),
                       state.clock + h};
}

void sample_initial_x(const SwitchingModel& model, RngStream& rng, Vector& x) {
  const InitialLaw& law = model.initial();
  x = law.x0;
  if (law.scale0 > 0.0)
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += law.scale0 * rng.normal();
}

int sample_initial_mode(const SwitchingModel& model, RngStream& rng) {
  if (model.modes() == 1) return 0;
  const Vector& p = model.initial().theta_probs;
  return categorical_pick([&](int j) { return p[j]; }, model.modes(), rng.uniform());
}

namespace {

// Shared driver: fills a (n_steps+1)-column path plus per-point extras.
PathSegment make_empty_path(int d, double h, double T, int& n_steps, double& final_dt) {
  n_steps = grid_steps(T, h);
  final_dt = n_steps == 1 ? T : T - static_cast<double>(n_steps - 1) * h;
  PathSegment path;
  path.s = 0.0;
  path.t = T;
  path.h = h;
  path.final_dt = final_dt;
  path.points.resize(d, n_steps + 1);
  return path;
}

void check_horizon(double T) {
  if (!(T > 0.0) || !std::isfinite(T)) throw UsageError("horizon must be finite and > 0");
}

}  // namespace

JointTrajectory simulate_path_joint(const SwitchingModel& model, double h, double T,
                                    RngStream& rng) {
  check_step(h);
  check_horizon(T);
  const int d = model.dim();
  int n_steps = 0;
  double final_dt = 0.0;
  JointTrajectory traj;
  traj.path = make_empty_path(d, h, T, n_steps, final_dt);
  traj.modes.resize(static_cast<std::size_t>(n_steps) + 1);

  FilterWorkspace ws;
  ws.resize(d, model.modes());
  Vector x(d);
  sample_initial_x(model, rng, x);
  int theta = sample_initial_mode(model, rng);
  traj.path.points.col(0) = x;
  traj.modes[0] = theta;

  for (int k = 0; k < n_steps; ++k) {
    const double dt = k == n_steps - 1 ? final_dt : h;
    const double sd = std::sqrt(dt);
    for (int i = 0; i < d; ++i) ws.noise[i] = sd * rng.normal();
    const double u = model.modes() > 1 ? rng.uniform() : 0.0;
    step_joint_inplace(model, x, theta, dt, ws.noise, u, ws);
    traj.path.points.col(k + 1) = x;
    traj.modes[static_cast<std::size_t>(k) + 1] = theta;
  }
  return traj;
}

MarginalTrajectory simulate_path_marginal(const SwitchingModel& model, double h, double T,
                                          RngStream& rng) {
  check_step(h);
  check_horizon(T);
  const int d = model.dim();
  const int m = model.modes();
  int n_steps = 0;
  double final_dt = 0.0;
  MarginalTrajectory traj;
  traj.path = make_empty_path(d, h, T, n_steps, final_dt);
  traj.filters.resize(m, n_steps + 1);

  FilterWorkspace ws;
  ws.resize(d, m);
  Vector x(d);
  sample_initial_x(model, rng, x);
  Vector pi = model.initial().theta_probs;
  project_simplex_inplace(pi);
  traj.path.points.col(0) = x;
  traj.filters.col(0) = pi;

  Vector noise(d);
  for (int k = 0; k < n_steps; ++k) {
    const double dt = k == n_steps - 1 ? final_dt : h;
    const double sd = std::sqrt(dt);
    for (int i = 0; i < d; ++i) noise[i] = sd * rng.normal();
    step_marginal_inplace(model, x, pi, dt, noise, ws);
    traj.path.points.col(k + 1) = x;
    traj.filters.col(k + 1) = pi;
  }
  return traj;
}

}  // namespace switchsplit
