#include "switchsplit/model.hpp"

#include <cmath>
#include <string>

namespace switchsplit {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

SwitchingModel::SwitchingModel(int d, int m, DriftSpec drift, RateSpec rates,
                               InitialLaw initial)
    : d_(d), m_(m), drift_(std::move(drift)), rates_(std::move(rates)),
      initial_(std::move(initial)) {
  if (d_ < 1) throw UsageError("model: d must be >= 1");
  if (m_ < 1) throw UsageError("model: m must be >= 1");

  const auto sz = static_cast<std::size_t>(m_);
  if (drift_.c.size() != sz) throw UsageError("model: drift.c needs one vector per mode");
  for (const auto& c : drift_.c) {
    if (c.size() != d_) throw UsageError("model: drift.c entry has wrong dimension");
    if (!c.allFinite()) throw UsageError("model: drift.c entry not finite");
  }
  if (drift_.family == DriftFamily::Affine) {
    if (drift_.A.size() != sz) throw UsageError("model: drift.A needs one matrix per mode");
    for (const auto& A : drift_.A) {
      if (A.rows() != d_ || A.cols() != d_)
        throw UsageError("model: drift.A entry has wrong shape");
      if (!A.allFinite()) throw UsageError("model: drift.A entry not finite");
    }
  }

  if (rates_.lambda_bar.rows() != m_ || rates_.lambda_bar.cols() != m_)
    throw UsageError("model: rates.lambda_bar must be m x m");
  if (!rates_.lambda_bar.allFinite())
    throw UsageError("model: rates.lambda_bar not finite");
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j)
      if (i != j && rates_.lambda_bar(i, j) < 0.0)
        throw UsageError("model: rates.lambda_bar off-diagonal must be >= 0");
  if (rates_.family == RateFamily::Logistic) {
    if (rates_.w.size() != sz) throw UsageError("model: rates.w must be m x m vectors");
    for (const auto& row : rates_.w) {
      if (row.size() != sz) throw UsageError("model: rates.w must be m x m vectors");
      for (const auto& wij : row) {
        if (wij.size() != d_) throw UsageError("model: rates.w entry has wrong dimension");
        if (!wij.allFinite()) throw UsageError("model: rates.w entry not finite");
      }
    }
    if (rates_.beta.rows() != m_ || rates_.beta.cols() != m_)
      throw UsageError("model: rates.beta must be m x m");
    if (!rates_.beta.allFinite()) throw UsageError("model: rates.beta not finite");
  }

  if (initial_.x0.size() != d_) throw UsageError("model: initial.x0 has wrong dimension");
  if (!initial_.x0.allFinite()) throw UsageError("model: initial.x0 not finite");
  if (!(initial_.scale0 >= 0.0) || !std::isfinite(initial_.scale0))
    throw UsageError("model: initial.scale0 must be finite and >= 0");
  if (initial_.theta_probs.size() != m_)
    throw UsageError("model: initial.theta_probs needs one entry per mode");
  if (!initial_.theta_probs.allFinite())
    throw UsageError("model: initial.theta_probs not finite");
  double psum = 0.0;
  for (int i = 0; i < m_; ++i) {
    if (initial_.theta_probs[i] < 0.0)
      throw UsageError("model: initial.theta_probs must be >= 0");
    psum += initial_.theta_probs[i];
  }
  if (std::abs(psum - 1.0) > 1e-12)
    throw UsageError("model: initial.theta_probs must sum to 1");

  double bound = 0.0;
  for (int i = 0; i < m_; ++i) {
    double row = 0.0;
    for (int j = 0; j < m_; ++j)
      if (j != i) row += rates_.lambda_bar(i, j);
    bound = std::max(bound, row);
  }
  max_exit_rate_bound_ = bound;
}

void SwitchingModel::eval_drift_mode_into(const Vector& x, int mode, Vector& out) const {
  if (drift_.family == DriftFamily::Constant) {
    out = drift_.c[static_cast<std::size_t>(mode)];
  } else {
    out.noalias() = drift_.A[static_cast<std::size_t>(mode)] * x;
    out += drift_.c[static_cast<std::size_t>(mode)];
  }
}

Vector SwitchingModel::eval_drift_mode(const Vector& x, int mode) const {
  check_mode(mode);
  check_dim(x);
  Vector out(d_);
  eval_drift_mode_into(x, mode, out);
  return out;
}

void SwitchingModel::eval_drift_matrix_into(const Vector& x, Matrix& out) const {
  out.resize(d_, m_);
  if (drift_.family == DriftFamily::Constant) {
    for (int i = 0; i < m_; ++i) out.col(i) = drift_.c[static_cast<std::size_t>(i)];
  } else {
    for (int i = 0; i < m_; ++i) {
      out.col(i).noalias() = drift_.A[static_cast<std::size_t>(i)] * x;
      out.col(i) += drift_.c[static_cast<std::size_t>(i)];
    }
  }
}

Vector SwitchingModel::eval_drift_mixed(const Vector& x, const SimplexVector& pi) const {
  check_dim(x);
  if (pi.size() != m_) throw UsageError("filter state has wrong number of modes");
  Vector out = Vector::Zero(d_);
  Vector b(d_);
  for (int i = 0; i < m_; ++i) {
    eval_drift_mode_into(x, i, b);
    out += pi[i] * b;
  }
  return out;
}

void SwitchingModel::eval_rates_into(const Vector& x, Matrix& out) const {
  out.resize(m_, m_);
  if (rates_.family == RateFamily::Constant) {
    out = rates_.lambda_bar;
  } else {
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) {
        if (i == j) continue;
        const auto& wij = rates_.w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        out(i, j) = rates_.lambda_bar(i, j) * sigmoid(wij.dot(x) + rates_.beta(i, j));
      }
  }
  for (int i = 0; i < m_; ++i) {
    double row = 0.0;
    for (int j = 0; j < m_; ++j)
      if (j != i) row += out(i, j);
    out(i, i) = -row;
  }
}

Matrix SwitchingModel::eval_rates(const Vector& x) const {
  check_dim(x);
  Matrix out(m_, m_);
  eval_rates_into(x, out);
  return out;
}

}  // namespace switchsplit
