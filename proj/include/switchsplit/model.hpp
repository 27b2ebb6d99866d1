#pragma once

#include <vector>

#include "switchsplit/errors.hpp"
#include "switchsplit/simplex.hpp"

namespace switchsplit {

enum class DriftFamily { Constant, Affine };
enum class RateFamily { Constant, Logistic };

// Per-mode drift b_i. Constant: b_i(x) = c[i]. Affine: b_i(x) = A[i] x + c[i].
struct DriftSpec {
  DriftFamily family = DriftFamily::Constant;
  std::vector<Matrix> A;  // affine only; one d x d matrix per mode
  std::vector<Vector> c;  // one d-vector per mode
};

// State-dependent transition intensities between modes. Constant:
// lambda_ij(x) = lambda_bar(i,j). Logistic:
// lambda_ij(x) = lambda_bar(i,j) * sigmoid(w[i][j].x + beta(i,j)).
// The diagonal of lambda_bar is ignored; evaluated generators always set
// lambda_ii(x) = -sum_{j != i} lambda_ij(x).
struct RateSpec {
  RateFamily family = RateFamily::Constant;
  Matrix lambda_bar;                   // m x m, off-diagonal >= 0
  std::vector<std::vector<Vector>> w;  // logistic only; [i][j] is a d-vector
  Matrix beta;                         // logistic only; m x m
};

// Law of (X(0), theta(0)): independent components, X(0) = x0 + scale0 * Z
// with Z standard normal in R^d (a point mass when scale0 == 0), and
// theta(0) distributed by theta_probs. Under marginal dynamics theta_probs
// is also the initial filter state.
struct InitialLaw {
  Vector x0;
  double scale0 = 0.0;
  Vector theta_probs;
};

// Regime-switching diffusion with unit diffusion coefficient: between mode
// switches X follows dX = b_theta(X) dt + dW, and theta jumps i -> j with
// intensity lambda_ij(X). Construction validates all shapes and parameter
// constraints; evaluation assumes a valid model.
class SwitchingModel {
 public:
  SwitchingModel(int d, int m, DriftSpec drift, RateSpec rates, InitialLaw initial);

  int dim() const { return d_; }
  int modes() const { return m_; }
  const DriftSpec& drift() const { return drift_; }
  const RateSpec& rates() const { return rates_; }
  const InitialLaw& initial() const { return initial_; }

  // b_i(x); mode is 0-based.
  Vector eval_drift_mode(const Vector& x, int mode) const;
  void eval_drift_mode_into(const Vector& x, int mode, Vector& out) const;

  // All drift columns at once: out is d x m with column i = b_i(x).
  void eval_drift_matrix_into(const Vector& x, Matrix& out) const;

  // Mixed drift b(x) pi = sum_i pi_i b_i(x).
  Vector eval_drift_mixed(const Vector& x, const SimplexVector& pi) const;

  // Generator matrix Lambda(x): off-diagonal entries are the switching
  // intensities, each diagonal entry the negated sum of its row's
  // off-diagonal part, so rows sum to zero by construction.
  Matrix eval_rates(const Vector& x) const;
  void eval_rates_into(const Vector& x, Matrix& out) const;

  // Upper bound on max_i |lambda_ii(x)| over all x, used to validate the
  // step-size stability condition h * bound < 1. Exact for constant rates;
  // for logistic rates it bounds the sigmoid by one.
  double max_exit_rate_bound() const { return max_exit_rate_bound_; }

 private:
  void check_mode(int mode) const {
    if (mode < 0 || mode >= m_) throw UsageError("mode index out of range");
  }
  void check_dim(const Vector& x) const {
    if (x.size() != d_) throw UsageError("state dimension mismatch");
  }

  int d_ = 0;
  int m_ = 0;
  DriftSpec drift_;
  RateSpec rates_;
  InitialLaw initial_;
  double max_exit_rate_bound_ = 0.0;
};

}  // namespace switchsplit
