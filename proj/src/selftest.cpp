#include "switchsplit/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "switchsplit/config.hpp"
#include "switchsplit/engine.hpp"
#include "switchsplit/errors.hpp"
#include "switchsplit/experiment.hpp"
#include "switchsplit/model.hpp"
#include "switchsplit/rng.hpp"
#include "switchsplit/simulate.hpp"
#include "switchsplit/splitting.hpp"

namespace switchsplit {

namespace selftest_detail {

namespace {
// Continued fraction for the incomplete beta function, evaluated with
// Lentz's method (Numerical Recipes form).
double ibeta_cf(double a, double b, double x) {
  const double eps = 1e-15, tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}
}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * ibeta_cf(a, b, x) / a;
  return 1.0 - front * ibeta_cf(b, a, 1.0 - x) / b;
}

double fisher_f_quantile(double p, double df1, double df2) {
  if (!(p > 0.0 && p < 1.0)) throw UsageError("fisher_f_quantile: p must be in (0, 1)");
  const auto cdf = [&](double q) {
    const double x = df1 * q / (df1 * q + df2);
    return regularized_incomplete_beta(0.5 * df1, 0.5 * df2, x);
  };
  double hi = 1.0;
  while (cdf(hi) < p && hi < 1e12) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace selftest_detail

namespace {

// Pinned base seeds; every statistical check below is a deterministic
// regression given these.
constexpr std::uint64_t kSeedBrownCoarse = 9101;
constexpr std::uint64_t kSeedBrownFine = 9102;
constexpr std::uint64_t kSeedCampaign = 9201;
constexpr std::uint64_t kSeedCrude = 9202;
constexpr std::uint64_t kSeedNullMarginal = 9401;
constexpr std::uint64_t kSeedNullJoint = 9402;
constexpr std::uint64_t kSeedNullTraj = 9403;
constexpr std::uint64_t kSeedConservation = 9501;
constexpr std::uint64_t kSeedDualityJoint = 9601;
constexpr std::uint64_t kSeedDualityMarginal = 9602;
constexpr std::uint64_t kSeedIndicator = 9701;
constexpr std::uint64_t kSeedRepro = 9801;
constexpr std::uint64_t kSeedComposition = 9802;
constexpr std::uint64_t kSeedSimplex = 9803;
constexpr std::uint64_t kSeedFileCheck = 97531;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::uint64_t double_bits(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

bool bit_equal(double a, double b) { return double_bits(a) == double_bits(b); }

Vector vec1(double a) {
  Vector v(1);
  v << a;
  return v;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Matrix mat22(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

// Driftless unit Brownian motion in one dimension, single mode.
SwitchingModel brownian_model() {
  DriftSpec drift;
  drift.family = DriftFamily::Constant;
  drift.c = {vec1(0.0)};
  RateSpec rates;
  rates.family = RateFamily::Constant;
  rates.lambda_bar = Matrix::Zero(1, 1);
  InitialLaw init;
  init.x0 = vec1(0.0);
  init.scale0 = 0.0;
  init.theta_probs = vec1(1.0);
  return SwitchingModel(1, 1, std::move(drift), std::move(rates), std::move(init));
}

LevelSchedule brownian_levels() {
  return LevelSchedule(LevelFunction::Coordinate, 0, {1.0, 2.0, 3.0}, 1.0);
}

// Two-mode benchmark: a nominal mode drifting away from the levels with a
// rare switch into a degraded mode that drifts toward them and recovers
// quickly. Initial mode is uncertain, so the filter starts interior.
SwitchingModel twomode_model() {
  DriftSpec drift;
  drift.family = DriftFamily::Constant;
  drift.c = {vec1(-0.5), vec1(1.5)};
  RateSpec rates;
  rates.family = RateFamily::Constant;
  rates.lambda_bar = mat22(0.0, 0.1, 1.0, 0.0);
  InitialLaw init;
  init.x0 = vec1(0.0);
  init.scale0 = 0.0;
  init.theta_probs = vec2(0.9, 0.1);
  return SwitchingModel(1, 2, std::move(drift), std::move(rates), std::move(init));
}

LevelSchedule twomode_levels() {
  return LevelSchedule(LevelFunction::Coordinate, 0, {1.0, 2.0, 3.0}, 1.0);
}

// Null switching rates with the mode pinned to 0 by the initial law; the
// marginal chain then reduces to the mode-0 diffusion exactly.
SwitchingModel nullrate_model() {
  DriftSpec drift;
  drift.family = DriftFamily::Constant;
  drift.c = {vec1(0.6), vec1(-0.6)};
  RateSpec rates;
  rates.family = RateFamily::Constant;
  rates.lambda_bar = Matrix::Zero(2, 2);
  InitialLaw init;
  init.x0 = vec1(0.0);
  init.scale0 = 0.0;
  init.theta_probs = vec2(1.0, 0.0);
  return SwitchingModel(1, 2, std::move(drift), std::move(rates), std::move(init));
}

LevelSchedule nullrate_levels() {
  return LevelSchedule(LevelFunction::Coordinate, 0, {0.5, 1.0, 1.5}, 1.0);
}

// Planar three-mode model with affine drifts and state-dependent logistic
// rates; exercises every evaluation path the filter has.
SwitchingModel threemode_model() {
  DriftSpec drift;
  drift.family = DriftFamily::Affine;
  Matrix A0 = mat22(-0.3, 0.4, -0.4, -0.3);
  Matrix A1 = mat22(-0.1, 0.0, 0.0, -0.5);
  Matrix A2 = mat22(-0.4, -0.2, 0.2, -0.1);
  drift.A = {A0, A1, A2};
  drift.c = {vec2(0.2, -0.1), vec2(0.8, 0.3), vec2(-0.5, 0.6)};

  RateSpec rates;
  rates.family = RateFamily::Logistic;
  Matrix lb(3, 3);
  lb << 0.0, 0.8, 0.4, 1.2, 0.0, 0.6, 0.5, 0.9, 0.0;
  rates.lambda_bar = lb;
  rates.w = {{vec2(0.0, 0.0), vec2(0.5, -0.3), vec2(-0.2, 0.4)},
             {vec2(0.3, 0.3), vec2(0.0, 0.0), vec2(-0.5, 0.1)},
             {vec2(0.2, -0.6), vec2(0.4, 0.2), vec2(0.0, 0.0)}};
  Matrix beta(3, 3);
  beta << 0.0, 0.2, -0.1, 0.3, 0.0, -0.2, 0.1, 0.4, 0.0;
  rates.beta = beta;

  InitialLaw init;
  init.x0 = vec2(0.5, -0.5);
  init.scale0 = 0.5;
  Vector probs(3);
  probs << 0.5, 0.3, 0.2;
  init.theta_probs = probs;
  return SwitchingModel(2, 3, std::move(drift), std::move(rates), std::move(init));
}

EngineConfig engine_cells(long N, double h) {
  EngineConfig cfg;
  cfg.schemes = {Scheme::Weighted, Scheme::Resampled};
  cfg.dynamics = {Dynamics::Joint, Dynamics::Marginal};
  cfg.n_particles = N;
  cfg.replicates = 0;  // replicate() takes R explicitly
  cfg.seed = 0;
  cfg.step_h = h;
  return cfg;
}

const CellStats& find_cell(const ComparisonReport& rep, Scheme s, Dynamics d) {
  for (const auto& cell : rep.cells)
    if (cell.scheme == s && cell.dynamics == d) return cell;
  throw UsageError("selftest: requested cell missing from report");
}

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
};

MeanSE mean_se(const std::vector<SplittingResult>& results, int first_n) {
  const int n = first_n > 0 && first_n < static_cast<int>(results.size())
                    ? first_n
                    : static_cast<int>(results.size());
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += results[static_cast<std::size_t>(i)].estimate;
  mean /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = results[static_cast<std::size_t>(i)].estimate - mean;
    var += e * e;
  }
  var /= (n - 1);
  return {mean, std::sqrt(var / n)};
}

// The two-mode comparison campaign shared by several checks: all four
// (scheme x dynamics) cells with paired replicate seeds, plus a crude
// full-path baseline on the same grid so discretization bias cancels in
// the comparison.
struct CampaignData {
  ComparisonReport rep;
  CrudeResult crude;
};

const CampaignData& campaign(unsigned threads) {
  static const CampaignData data = [threads] {
    CampaignData d;
    const SwitchingModel model = twomode_model();
    const LevelSchedule levels = twomode_levels();
    EngineOptions opts;
    opts.threads = threads;
    d.rep = replicate(model, levels, engine_cells(2000, 5e-3), 500, kSeedCampaign, opts);
    d.crude = crude_mc(model, levels, 1'000'000, Dynamics::Joint, 5e-3, kSeedCrude, opts);
    return d;
  }();
  return data;
}

// ---------------------------------------------------------------------------
// Checks. Each returns a CheckResult and never throws on a mere failure;
// exceptions escape only for genuine usage errors inside the suite itself.

// Driftless Brownian motion, levels (1,2,3), target 2 Phi(-3). Grid
// detection misses excursions between points, biasing estimates low by
// O(sqrt(h)); runs at h and h/4 extrapolate that bias away (the h/4 bias is
// half the h bias, so 2 * mean_fine - mean_coarse cancels the sqrt(h)
// term). Every cell's extrapolated mean must sit within 3 combined
// replicate standard errors of the closed form.
CheckResult check_brownian_oracle(unsigned threads) {
  CheckResult out{"brownian-threshold-oracle", false, ""};
  const SwitchingModel model = brownian_model();
  const LevelSchedule levels = brownian_levels();
  EngineOptions opts;
  opts.threads = threads;
  const double target = std::erfc(3.0 / std::sqrt(2.0));  // 2 Phi(-3)

  const ComparisonReport coarse =
      replicate(model, levels, engine_cells(10'000, 1e-3), 100, kSeedBrownCoarse, opts);
  const ComparisonReport fine =
      replicate(model, levels, engine_cells(10'000, 2.5e-4), 100, kSeedBrownFine, opts);

  bool pass = true;
  double worst_z = 0.0, worst_bias = 0.0;
  std::ostringstream detail;
  for (const auto& cell : coarse.cells) {
    const CellStats& fcell = find_cell(fine, cell.scheme, cell.dynamics);
    const MeanSE mc = mean_se(cell.results, 0);
    const MeanSE mf = mean_se(fcell.results, 0);
    const double extrap = 2.0 * mf.mean - mc.mean;
    const double se = std::sqrt(4.0 * mf.se * mf.se + mc.se * mc.se);
    const double z = std::fabs(extrap - target) / se;
    if (z > 3.0) pass = false;
    if (z > worst_z) worst_z = z;
    const double bias = (mc.mean - target) / target;
    if (std::fabs(bias) > std::fabs(worst_bias)) worst_bias = bias;
  }
  detail << "target=" << fmt(target) << " worst |z|=" << fmt(worst_z)
         << " coarse-grid bias=" << fmt(100.0 * worst_bias) << "% (extrapolated out)";
  out.passed = pass;
  out.detail = detail.str();
  return out;
}

// Splitting means over 400 replicates vs a one-million-path crude estimate
// on the same grid, within 3 combined standard errors, every cell.
CheckResult check_crude_agreement(unsigned threads) {
  CheckResult out{"matches-crude-monte-carlo", false, ""};
  const CampaignData& data = campaign(threads);
  bool pass = true;
  double worst_z = 0.0;
  for (const auto& cell : data.rep.cells) {
    const MeanSE m = mean_se(cell.results, 400);
    const double se =
        std::sqrt(m.se * m.se + data.crude.std_error * data.crude.std_error);
    const double z = std::fabs(m.mean - data.crude.estimate) / se;
    if (z > 3.0) pass = false;
    if (z > worst_z) worst_z = z;
  }
  std::ostringstream detail;
  detail << "crude=" << fmt(data.crude.estimate) << "+-" << fmt(data.crude.std_error)
         << " worst |z|=" << fmt(worst_z);
  out.passed = pass;
  out.detail = detail.str();
  return out;
}

// Carrying the filter instead of sampling the mode must not inflate
// replicate variance: for each scheme, marginal variance <= 1.10 x joint
// variance with the point estimate strictly smaller. Paired seeds keep the
// comparison sharp.
CheckResult check_variance_ordering(unsigned threads) {
  CheckResult out{"marginal-cuts-variance", false, ""};
  const CampaignData& data = campaign(threads);
  bool pass = true;
  std::ostringstream detail;
  for (Scheme s : {Scheme::Weighted, Scheme::Resampled}) {
    const double vj = find_cell(data.rep, s, Dynamics::Joint).variance;
    const double vm = find_cell(data.rep, s, Dynamics::Marginal).variance;
    if (!(vm < vj) || !(vm <= 1.10 * vj)) pass = false;
    detail << scheme_name(s) << " ratio=" << fmt(vm / vj) << " ";
  }
  detail << "(marginal/joint, 500 paired replicates)";
  out.passed = pass;
  out.detail = detail.str();
  return out;
}

// With null switching rates and the mode pinned by the initial law the
// filter must stay at the vertex bit for bit, and joint and marginal
// estimators coincide in law: their replicate variances (independent
// seeds) must pass a two-sided F-test at the 1% level.
CheckResult check_null_rates(unsigned threads) {
  CheckResult out{"null-rates-collapse", false, ""};
  const SwitchingModel model = nullrate_model();
  const LevelSchedule levels = nullrate_levels();

  long vertex_checked = 0;
  bool vertex_exact = true;
  for (int i = 0; i < 200 && vertex_exact; ++i) {
    RngStream rng(derive_seed(kSeedNullTraj, static_cast<std::uint64_t>(i)));
    const MarginalTrajectory traj = simulate_path_marginal(model, 1e-3, 1.0, rng);
    for (int k = 0; k < traj.path.num_points(); ++k) {
      if (!bit_equal(traj.filters(0, k), 1.0) || !bit_equal(traj.filters(1, k), 0.0)) {
        vertex_exact = false;
        break;
      }
      ++vertex_checked;
    }
  }
  {
    // Direct updates from the vertex with arbitrary increments.
    RngStream rng(derive_seed(kSeedNullTraj, 1000));
    const SimplexVector v = SimplexVector::vertex(2, 0);
    for (int i = 0; i < 10'000 && vertex_exact; ++i) {
      const Vector from = vec1(4.0 * rng.normal());
      const Vector to = vec1(from[0] + rng.normal());
      const SimplexVector next = filter_step(model, from, to, v, 0.01);
      if (!bit_equal(next[0], 1.0) || !bit_equal(next[1], 0.0)) vertex_exact = false;
      ++vertex_checked;
    }
  }
  {
    // Single-mode models are the same degeneracy with m = 1.
    const SwitchingModel bm = brownian_model();
    for (int i = 0; i < 100 && vertex_exact; ++i) {
      RngStream rng(derive_seed(kSeedNullTraj, 2000 + static_cast<std::uint64_t>(i)));
      const MarginalTrajectory traj = simulate_path_marginal(bm, 1e-3, 1.0, rng);
      for (int k = 0; k < traj.path.num_points(); ++k) {
        if (!bit_equal(traj.filters(0, k), 1.0)) {
          vertex_exact = false;
          break;
        }
        ++vertex_checked;
      }
    }
  }

  EngineOptions opts;
  opts.threads = threads;
  EngineConfig cells = engine_cells(2000, 5e-3);
  cells.dynamics = {Dynamics::Marginal};
  const ComparisonReport marg =
      replicate(model, levels, cells, 200, kSeedNullMarginal, opts);
  cells.dynamics = {Dynamics::Joint};
  const ComparisonReport joint = replicate(model, levels, cells, 200, kSeedNullJoint, opts);

  const double f_lo = selftest_detail::fisher_f_quantile(0.005, 199.0, 199.0);
  const double f_hi = selftest_detail::fisher_f_quantile(0.995, 199.0, 199.0);
  bool f_pass = true;
  std::ostringstream fdetail;
  for (Scheme s : {Scheme::Weighted, Scheme::Resampled}) {
    const double vj = find_cell(joint, s, Dynamics::Joint).variance;
    const double vm = find_cell(marg, s, Dynamics::Marginal).variance;
    const double F = vj / vm;
    if (!(F >= f_lo && F <= f_hi)) f_pass = false;
    fdetail << scheme_name(s) << " F=" << fmt(F) << " ";
  }

  out.passed = vertex_exact && f_pass;
  std::ostringstream detail;
  detail << vertex_checked << " vertex iterates bit-exact; " << fdetail.str()
         << "accept [" << fmt(f_lo) << ", " << fmt(f_hi) << "]";
  if (!vertex_exact) detail << "; vertex drifted";
  out.detail = detail.str();
  return out;
}

// Every post-projection filter state across > 1e7 updates sums to one
// within 1e-12 with no negative component.
CheckResult check_conservation(unsigned) {
  CheckResult out{"filter-mass-conservation", false, ""};
  long columns = 0;
  double worst_sum = 0.0, worst_min = 1.0;

  const auto scan = [&](const SwitchingModel& model, std::uint64_t tag, int paths,
                        double h, double T) {
    for (int i = 0; i < paths; ++i) {
      RngStream rng(derive_seed(kSeedConservation, tag, static_cast<std::uint64_t>(i)));
      const MarginalTrajectory traj = simulate_path_marginal(model, h, T, rng);
      for (int k = 0; k < traj.path.num_points(); ++k) {
        const double sum = traj.filters.col(k).sum();
        const double mn = traj.filters.col(k).minCoeff();
        const double dev = std::fabs(sum - 1.0);
        if (dev > worst_sum) worst_sum = dev;
        if (mn < worst_min) worst_min = mn;
        ++columns;
      }
    }
  };

  scan(threemode_model(), 1, 6000, 1e-3, 1.0);
  scan(twomode_model(), 2, 4500, 1e-3, 1.0);

  out.passed = columns >= 10'000'000 && worst_sum <= 1e-12 && worst_min >= 0.0;
  std::ostringstream detail;
  detail << columns << " states, max |sum-1|=" << fmt(worst_sum)
         << ", min component=" << fmt(worst_min);
  out.detail = detail.str();
  return out;
}

// E f(X_T, theta_T) under the joint chain equals E g(X_T) <pi_T, w> under
// the marginal chain for f(x, i) = g(x) w_i; checked for three test
// functions at 1e5 paths a side, within 3 combined standard errors.
CheckResult check_duality(unsigned) {
  CheckResult out{"mode-functional-duality", false, ""};
  const SwitchingModel model = twomode_model();
  const int paths = 100'000;
  const double h = 5e-4, T = 1.0;
  const int n = grid_steps(T, h);
  const double final_dt = T - (n - 1) * h;

  struct TestFn {
    const char* name;
    std::function<double(double)> g;
    double w0, w1;
  };
  const TestFn fns[3] = {
      {"mode-mass", [](double) { return 1.0; }, 1.0, 0.0},
      {"odd", [](double x) { return std::tanh(x); }, 1.0, -1.0},
      {"bump", [](double x) { return std::exp(-0.5 * x * x); }, 0.3, 1.7},
  };

  double js[3] = {0, 0, 0}, jss[3] = {0, 0, 0};
  double ms[3] = {0, 0, 0}, mss[3] = {0, 0, 0};

  FilterWorkspace ws;
  ws.resize(model.dim(), model.modes());
  Vector x(1), noise(1);

  for (int i = 0; i < paths; ++i) {
    RngStream rng(derive_seed(kSeedDualityJoint, static_cast<std::uint64_t>(i)));
    sample_initial_x(model, rng, x);
    int theta = sample_initial_mode(model, rng);
    for (int k = 0; k < n; ++k) {
      const double dt = k == n - 1 ? final_dt : h;
      noise[0] = std::sqrt(dt) * rng.normal();
      const double u = rng.uniform();
      step_joint_inplace(model, x, theta, dt, noise, u, ws);
    }
    for (int f = 0; f < 3; ++f) {
      const double v = fns[f].g(x[0]) * (theta == 0 ? fns[f].w0 : fns[f].w1);
      js[f] += v;
      jss[f] += v * v;
    }
  }

  Vector pi(2);
  for (int i = 0; i < paths; ++i) {
    RngStream rng(derive_seed(kSeedDualityMarginal, static_cast<std::uint64_t>(i)));
    sample_initial_x(model, rng, x);
    pi = model.initial().theta_probs;
    project_simplex_inplace(pi);
    for (int k = 0; k < n; ++k) {
      const double dt = k == n - 1 ? final_dt : h;
      noise[0] = std::sqrt(dt) * rng.normal();
      step_marginal_inplace(model, x, pi, dt, noise, ws);
    }
    for (int f = 0; f < 3; ++f) {
      const double v = fns[f].g(x[0]) * (pi[0] * fns[f].w0 + pi[1] * fns[f].w1);
      ms[f] += v;
      mss[f] += v * v;
    }
  }

  bool pass = true;
  double worst_z = 0.0;
  for (int f = 0; f < 3; ++f) {
    const double mj = js[f] / paths;
    const double mm = ms[f] / paths;
    const double vj = (jss[f] - paths * mj * mj) / (paths - 1);
    const double vm = (mss[f] - paths * mm * mm) / (paths - 1);
    const double se = std::sqrt((vj + vm) / paths);
    const double z = std::fabs(mj - mm) / se;
    if (z > 3.0) pass = false;
    if (z > worst_z) worst_z = z;
  }
  out.passed = pass;
  out.detail = "3 test functions, 1e5 paths/side, worst |z|=" + fmt(worst_z);
  return out;
}

// On stored paths, first-entry levels and 0/1 segment potentials carry the
// same information: level k is reached iff the product of potentials
// 1..k is one. Cross-checked against a naive independent scan.
CheckResult check_indicator_identity(unsigned) {
  CheckResult out{"hit-potential-identity", false, ""};
  const SwitchingModel model = twomode_model();
  const LevelSchedule levels = twomode_levels();
  const int n = levels.levels();
  long mismatches = 0, paths_hit_all = 0;

  for (int i = 0; i < 1000; ++i) {
    RngStream rng(derive_seed(kSeedIndicator, static_cast<std::uint64_t>(i)));
    const JointTrajectory traj = simulate_path_joint(model, 0.01, 1.0, rng);
    const HittingReport rep = detect_hits(traj.path, levels);

    // Naive reference: first grid index with phi >= L_k, scanned per level.
    for (int k = 1; k <= n; ++k) {
      std::optional<int> naive;
      for (int c = 0; c < traj.path.num_points(); ++c) {
        if (levels.phi(traj.path.points.col(c)) >= levels.threshold(k)) {
          naive = c;
          break;
        }
      }
      if (naive != rep.hit_step[static_cast<std::size_t>(k)]) ++mismatches;

      int product = 1;
      for (int p = 1; p <= k; ++p)
        product *= potential(rep.segments[static_cast<std::size_t>(p)], p, levels);
      if ((product == 1) != rep.reached(k)) ++mismatches;
      if (k > 1 && rep.reached(k) && !rep.reached(k - 1)) ++mismatches;
      if (rep.stop_step[static_cast<std::size_t>(k)] <
          rep.stop_step[static_cast<std::size_t>(k - 1)])
        ++mismatches;
    }
    if (rep.reached(n)) ++paths_hit_all;
  }

  out.passed = mismatches == 0;
  std::ostringstream detail;
  detail << "1000 paths, " << mismatches << " mismatches, " << paths_hit_all
         << " reached the last level";
  out.detail = detail.str();
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Same config and seed at 1, 2 and 8 workers must produce byte-identical
// result files (timing never enters them).
CheckResult check_thread_invariance(unsigned) {
  CheckResult out{"thread-invariant-output", false, ""};
  ExperimentConfig cfg;
  cfg.d = 1;
  cfg.m = 2;
  cfg.drift.family = DriftFamily::Constant;
  cfg.drift.c = {vec1(-0.5), vec1(1.5)};
  cfg.rates.family = RateFamily::Constant;
  cfg.rates.lambda_bar = mat22(0.0, 0.1, 1.0, 0.0);
  cfg.initial.x0 = vec1(0.0);
  cfg.initial.scale0 = 0.0;
  cfg.initial.theta_probs = vec2(0.9, 0.1);
  cfg.phi_kind = LevelFunction::Coordinate;
  cfg.coord_index = 0;
  cfg.thresholds = {1.0, 2.0};
  cfg.horizon_T = 0.5;
  cfg.engine.schemes = {Scheme::Weighted, Scheme::Resampled};
  cfg.engine.dynamics = {Dynamics::Joint, Dynamics::Marginal};
  cfg.engine.n_particles = 500;
  cfg.engine.replicates = 6;
  cfg.engine.seed = kSeedFileCheck;
  cfg.engine.step_h = 0.01;
  cfg.output.format = OutputConfig::Format::Csv;
  cfg.output.dump_survivor_paths = true;

  const auto tmp = std::filesystem::temp_directory_path();
  std::vector<std::string> results, paths;
  std::vector<std::string> files;
  for (unsigned t : {1u, 2u, 8u}) {
    const std::string target =
        (tmp / ("switchsplit-threads-" + std::to_string(t) + ".csv")).string();
    RunOverrides overrides;
    overrides.output_path = target;
    overrides.threads = t;
    const ExperimentOutcome outcome = run_experiment(cfg, overrides, nullptr);
    results.push_back(read_file(outcome.results_path));
    files.push_back(outcome.results_path);
    if (outcome.paths_path) {
      paths.push_back(read_file(*outcome.paths_path));
      files.push_back(*outcome.paths_path);
    }
  }
  bool pass = !results.empty() && paths.size() == results.size();
  for (const auto& r : results) pass = pass && r == results.front() && !r.empty();
  for (const auto& p : paths) pass = pass && p == paths.front() && !p.empty();
  for (const auto& f : files) std::filesystem::remove(f);

  out.passed = pass;
  std::ostringstream detail;
  detail << "results digest " << std::hex << fnv1a(results.empty() ? "" : results.front())
         << ", survivor-path digest " << fnv1a(paths.empty() ? "" : paths.front())
         << std::dec << " at 1/2/8 workers";
  if (!pass) detail << "; files differ";
  out.detail = detail.str();
  return out;
}

// ---------------------------------------------------------------------------
// Fast structural checks beyond the release gates.

CheckResult check_simplex_projection(unsigned) {
  CheckResult out{"simplex-projection", false, ""};
  bool ok = true;

  Vector a = vec2(0.3, 0.7);
  project_simplex_inplace(a);
  ok = ok && bit_equal(a[0], 0.3) && bit_equal(a[1], 0.7);

  Vector b = vec2(1.2, -0.2);
  project_simplex_inplace(b);
  ok = ok && a.size() == 2 && bit_equal(b[0], 1.0) && bit_equal(b[1], 0.0);

  Vector c(3);
  c << 0.5, 0.5, 0.5;
  project_simplex_inplace(c);
  ok = ok && std::fabs(c.sum() - 1.0) <= 1e-15 && std::fabs(c[0] - 1.0 / 3.0) <= 1e-15;

  Vector d = vec2(-1.0, -2.0);
  project_simplex_inplace(d);
  ok = ok && bit_equal(d[0], 0.5) && bit_equal(d[1], 0.5);

  bool threw = false;
  try {
    Vector e = vec2(std::nan(""), 0.5);
    project_simplex_inplace(e);
  } catch (const NumericalError&) {
    threw = true;
  }
  ok = ok && threw;

  // Vertices and any vector summing to exactly 1.0 pass through untouched;
  // this is what keeps a point-mass filter pinned to its vertex.
  for (int j = 0; j < 3; ++j) {
    Vector v = Vector::Zero(3);
    v[j] = 1.0;
    project_simplex_inplace(v);
    for (int r = 0; r < 3; ++r) ok = ok && bit_equal(v[r], r == j ? 1.0 : 0.0);
  }

  RngStream rng(kSeedSimplex);
  double worst = 0.0;
  bool stable = true;
  for (int i = 0; i < 100'000; ++i) {
    Vector v(3);
    v << 2.0 * rng.normal(), 2.0 * rng.normal(), 2.0 * rng.normal();
    project_simplex_inplace(v);
    const double dev = std::fabs(v.sum() - 1.0);
    if (dev > worst) worst = dev;
    if (v.minCoeff() < 0.0) stable = false;
    // Renormalization rounding can leave the sum a few ulp from one, so a
    // second projection is only guaranteed to be a bitwise no-op when the
    // left-to-right sum (the order the projection accumulates in) landed
    // on exactly 1.0.
    double seq = 0.0;
    for (int j = 0; j < 3; ++j) seq += v[j];
    Vector again = v;
    project_simplex_inplace(again);
    const double redev = std::fabs(again.sum() - 1.0);
    if (redev > worst) worst = redev;
    if (seq == 1.0)
      for (int j = 0; j < 3; ++j)
        if (!bit_equal(again[j], v[j])) stable = false;
  }
  ok = ok && stable && worst <= 1e-12;

  out.passed = ok;
  out.detail = "1e5 random projections, max |sum-1|=" + fmt(worst) +
               ", exact-sum inputs pass through bitwise";
  return out;
}

CheckResult check_segment_composition(unsigned) {
  CheckResult out{"segment-filter-composition", false, ""};
  const SwitchingModel model = twomode_model();
  const LevelSchedule levels = twomode_levels();
  long compared = 0;
  bool exact = true;

  for (int i = 0; i < 50 && exact; ++i) {
    RngStream rng(derive_seed(kSeedComposition, static_cast<std::uint64_t>(i)));
    const MarginalTrajectory traj = simulate_path_marginal(model, 0.01, 1.0, rng);
    const HittingReport rep = detect_hits(traj.path, levels);

    SimplexVector pi = SimplexVector::from_probabilities(model.initial().theta_probs);
    for (int k = 1; k <= levels.levels(); ++k) {
      pi = segment_filter_update(model, pi, rep.segments[static_cast<std::size_t>(k)]);
      const int col = rep.stop_step[static_cast<std::size_t>(k)];
      for (int j = 0; j < model.modes(); ++j)
        if (!bit_equal(pi[j], traj.filters(j, col))) exact = false;
      ++compared;
    }

    // The whole path as one segment must land on the final inline state.
    const SimplexVector whole = segment_filter_update(
        model, SimplexVector::from_probabilities(model.initial().theta_probs), traj.path);
    for (int j = 0; j < model.modes(); ++j)
      if (!bit_equal(whole[j], traj.filters(j, traj.path.num_points() - 1))) exact = false;
  }

  out.passed = exact;
  std::ostringstream detail;
  detail << compared << " segment boundaries replayed bit-exactly";
  if (!exact) detail << " (divergence found)";
  out.detail = detail.str();
  return out;
}

CheckResult check_reproducibility(unsigned) {
  CheckResult out{"engine-reproducibility", false, ""};
  const SwitchingModel model = twomode_model();
  const LevelSchedule levels =
      LevelSchedule(LevelFunction::Coordinate, 0, {1.0, 2.0}, 0.5);
  bool ok = true;

  for (Scheme s : {Scheme::Weighted, Scheme::Resampled}) {
    for (Dynamics dyn : {Dynamics::Joint, Dynamics::Marginal}) {
      EngineOptions one;
      one.threads = 1;
      EngineOptions three;
      three.threads = 3;
      const SplittingResult r1 = run_splitting(s, model, levels, 300, dyn, 0.01, kSeedRepro, one);
      const SplittingResult r2 = run_splitting(s, model, levels, 300, dyn, 0.01, kSeedRepro, one);
      const SplittingResult r3 =
          run_splitting(s, model, levels, 300, dyn, 0.01, kSeedRepro, three);
      ok = ok && bit_equal(r1.estimate, r2.estimate) && bit_equal(r1.estimate, r3.estimate);
      ok = ok && r1.survivors == r2.survivors && r1.survivors == r3.survivors;
      for (std::size_t k = 0; k < r1.p_hat.size(); ++k) {
        ok = ok && double_bits(r1.p_hat[k]) == double_bits(r2.p_hat[k]);
        ok = ok && double_bits(r1.p_hat[k]) == double_bits(r3.p_hat[k]);
      }
    }
  }
  out.passed = ok;
  out.detail = "rerun and 1-vs-3 workers bit-identical for all four cells";
  return out;
}

// Soft margin on the selection variants: per-level resampling replaces the
// weighted draw without blowing up variance. Uses the shared campaign.
CheckResult check_scheme_margin(unsigned threads) {
  CheckResult out{"resampled-variance-margin", false, ""};
  const CampaignData& data = campaign(threads);
  bool pass = true;
  std::ostringstream detail;
  for (Dynamics dyn : {Dynamics::Joint, Dynamics::Marginal}) {
    const double vw = find_cell(data.rep, Scheme::Weighted, dyn).variance;
    const double vr = find_cell(data.rep, Scheme::Resampled, dyn).variance;
    if (!(vr <= 1.5 * vw)) pass = false;
    detail << dynamics_name(dyn) << " ratio=" << fmt(vr / vw) << " ";
  }
  detail << "(resampled/weighted, allowance 1.5)";
  out.passed = pass;
  out.detail = detail.str();
  return out;
}

using NamedCheck = std::pair<const char*, std::function<CheckResult(unsigned)>>;

std::vector<NamedCheck> fast_checks() {
  return {{"simplex-projection", check_simplex_projection},
          {"segment-filter-composition", check_segment_composition},
          {"filter-mass-conservation", check_conservation},
          {"hit-potential-identity", check_indicator_identity},
          {"engine-reproducibility", check_reproducibility},
          {"thread-invariant-output", check_thread_invariance}};
}

std::vector<NamedCheck> oracle_checks() {
  return {{"brownian-threshold-oracle", check_brownian_oracle},
          {"matches-crude-monte-carlo", check_crude_agreement},
          {"mode-functional-duality", check_duality}};
}

std::vector<NamedCheck> variance_checks() {
  return {{"marginal-cuts-variance", check_variance_ordering},
          {"null-rates-collapse", check_null_rates},
          {"resampled-variance-margin", check_scheme_margin}};
}

}  // namespace

SuiteResult run_selftest(const std::string& suite, unsigned threads, std::ostream& log) {
  std::vector<NamedCheck> checks;
  if (suite == "fast") {
    checks = fast_checks();
  } else if (suite == "oracle") {
    checks = oracle_checks();
  } else if (suite == "variance") {
    checks = variance_checks();
  } else if (suite == "all") {
    checks = fast_checks();
    for (auto& c : oracle_checks()) checks.push_back(std::move(c));
    for (auto& c : variance_checks()) checks.push_back(std::move(c));
  } else {
    throw UsageError("selftest: unknown suite '" + suite +
                     "' (expected fast, oracle, variance or all)");
  }

  SuiteResult result;
  for (auto& [name, fn] : checks) {
    (void)name;
    CheckResult c = fn(threads);
    log << (c.passed ? "PASS" : "FAIL") << "  " << c.name << ": " << c.detail << "\n"
        << std::flush;
    result.checks.push_back(std::move(c));
  }
  const std::size_t passed =
      static_cast<std::size_t>(std::count_if(result.checks.begin(), result.checks.end(),
                                             [](const CheckResult& c) { return c.passed; }));
  log << "suite " << suite << ": " << passed << "/" << result.checks.size() << " passed\n";
  return result;
}

SuiteResult run_acceptance(unsigned threads, std::ostream& log) {
  const std::vector<NamedCheck> gates = {
      {"brownian-threshold-oracle", check_brownian_oracle},
      {"matches-crude-monte-carlo", check_crude_agreement},
      {"marginal-cuts-variance", check_variance_ordering},
      {"null-rates-collapse", check_null_rates},
      {"filter-mass-conservation", check_conservation},
      {"mode-functional-duality", check_duality},
      {"hit-potential-identity", check_indicator_identity},
      {"thread-invariant-output", check_thread_invariance}};

  SuiteResult result;
  int idx = 0;
  for (const auto& [name, fn] : gates) {
    (void)name;
    ++idx;
    CheckResult c = fn(threads);
    log << "[" << idx << "/" << gates.size() << "] " << c.name << ": "
        << (c.passed ? "PASS" : "FAIL") << " (" << c.detail << ")\n"
        << std::flush;
    result.checks.push_back(std::move(c));
  }
  return result;
}

}  // namespace switchsplit
