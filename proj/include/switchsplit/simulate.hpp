#pragma once

#include <cmath>
#include <vector>

#include "switchsplit/model.hpp"
#include "switchsplit/rng.hpp"
#include "switchsplit/simplex.hpp"

namespace switchsplit {

// Number of Euler steps for horizon T at grid step h: ceil(T / h), with a
// small tolerance so that T an exact multiple of h (up to representation
// error) does not produce a spurious extra step. The final step has length
// T - (n-1) h, which absorbs the rounding.
inline int grid_steps(double T, double h) {
  int n = static_cast<int>(std::ceil(T / h - 1e-9));
  return n < 1 ? 1 : n;
}

// Discrete path on [s, t]: column k of `points` is the state at time
// s + k h, except the last column which sits at t. All increments span
// exactly h except the final one, whose length is stored explicitly in
// `final_dt` so that slicing a path preserves every increment length
// bit-for-bit (recomputing t - s - (K-2) h from slice-local endpoints
// would not).
struct PathSegment {
  double s = 0.0;
  double t = 0.0;
  double h = 0.0;
  double final_dt = 0.0;  // length of the last increment; 0 when K <= 1
  Matrix points;          // d x K

  int num_points() const { return static_cast<int>(points.cols()); }
  int num_steps() const { return num_points() > 0 ? num_points() - 1 : 0; }

  double time_at(int k) const {
    const int K = num_points();
    if (k == K - 1) return t;
    return s + static_cast<double>(k) * h;
  }

  // Length of increment k (from point k to point k+1).
  double dt(int k) const { return k == num_points() - 2 ? final_dt : h; }

  // Slice covering points [first, last] inclusive. Times and increment
  // lengths of the retained increments are preserved exactly.
  PathSegment slice(int first, int last) const;
};

struct JointState {
  Vector x;
  int theta = 0;
  double clock = 0.0;
};

struct MarginalState {
  Vector x;
  SimplexVector pi;
  double clock = 0.0;
};

// Preallocated temporaries for drift/rate evaluation and the filter
// update; one instance per worker avoids per-step allocation.
struct FilterWorkspace {
  Matrix b;       // d x m drift columns at the step's start point
  Matrix lambda;  // m x m generator at the start point
  Matrix G;       // m x d gain
  Vector f;       // m drift of the filter
  Vector bpi;     // d mixed drift b(x) pi
  Vector bmode;   // d single-mode drift
  Vector noise;   // d Brownian increment scratch (free for callers)
  Vector x_prev;  // d previous state, kept to form the realized increment

  void resize(int d, int m) {
    b.resize(d, m);
    lambda.resize(m, m);
    G.resize(m, d);
    f.resize(m);
    bpi.resize(d);
    bmode.resize(d);
    noise.resize(d);
    x_prev.resize(d);
  }
};

// One explicit Euler update of the filter given the state increment
// dx = x_to - x_from over a step of length dt. ws.b and ws.lambda must
// already hold the drift columns and generator evaluated at x_from. pi is
// updated in place and reprojected onto the simplex.
//
// The gain is G = (diag(pi) - pi pi^T) b^T and the drift
// f = Lambda^T pi - G b pi, so at a simplex vertex with a vanishing
// generator both are exactly zero and the update is the identity, bit for
// bit. Callers relying on that must pass dx computed as x_to - x_from.
void filter_update_core(const Vector& dx, double dt, Vector& pi, FilterWorkspace& ws);

// Filter update between two observed points of the signal path. Evaluates
// the model at x_from, applies filter_update_core, and returns the
// projected result. x_to enters only through the increment x_to - x_from.
SimplexVector filter_step(const SwitchingModel& model, const Vector& x_from,
                          const Vector& x_to, const SimplexVector& pi, double dt);

// One Euler step of the pair (X, theta). `noise` is the Brownian increment
// over the step (standard deviation sqrt(h) per coordinate); `u` in [0, 1)
// drives the mode transition, sampled from the one-step law
// P(theta' = j) = 1{j == theta} + h lambda_{theta j}(x) evaluated at the
// step's start point. Requires h |lambda_ii(x)| <= 1.
JointState step_joint(const SwitchingModel& model, const JointState& state, double h,
                      const Vector& noise, double u);

// One Euler step of the pair (X, pi) under marginal dynamics:
// X moves by h b(x) pi + noise and the filter follows via filter_step with
// the realized increment.
MarginalState step_marginal(const SwitchingModel& model, const MarginalState& state,
                            double h, const Vector& noise);

// In-place variants used by the hot loops; identical arithmetic to the
// public step operations. `u` is consumed only when the model has more
// than one mode.
void step_joint_inplace(const SwitchingModel& model, Vector& x, int& theta, double h,
                        const Vector& noise, double u, FilterWorkspace& ws);
void step_marginal_inplace(const SwitchingModel& model, Vector& x, Vector& pi, double h,
                           const Vector& noise, FilterWorkspace& ws);

// Draw X(0) (and theta(0) for the joint chain) from the model's initial
// law. The x draw consumes d normals when scale0 > 0 and none otherwise;
// the mode draw consumes one uniform when m > 1 and none otherwise.
void sample_initial_x(const SwitchingModel& model, RngStream& rng, Vector& x);
int sample_initial_mode(const SwitchingModel& model, RngStream& rng);

enum class Dynamics { Joint, Marginal };

struct JointTrajectory {
  PathSegment path;        // X on [0, T]
  std::vector<int> modes;  // theta at each grid point
};

struct MarginalTrajectory {
  PathSegment path;  // X on [0, T]
  Matrix filters;    // m x K, column k = filter state at grid point k
};

// Full trajectory on [0, T] from a fresh initial draw, using ceil(T / h)
// steps with the last step truncated to hit T exactly.
JointTrajectory simulate_path_joint(const SwitchingModel& model, double h, double T,
                                    RngStream& rng);
MarginalTrajectory simulate_path_marginal(const SwitchingModel& model, double h, double T,
                                          RngStream& rng);

}  // namespace switchsplit
