#pragma once

#include <Eigen/Dense>

#include "switchsplit/errors.hpp"

namespace switchsplit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Clip negative entries to zero and renormalize in place. If everything was
// clipped (or the sum underflows to zero) fall back to the uniform vector.
// Throws NumericalError on non-finite input. A vector already on the
// simplex passes through bit-identically: clipping does not touch it and
// the renormalization divides by exactly 1.0 when the entries sum to 1.0.
inline void project_simplex_inplace(Vector& v) {
  if (!v.allFinite()) throw NumericalError("simplex projection: non-finite input");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0) v[i] = 0.0;
    sum += v[i];
  }
  if (sum <= 0.0) {
    v.setConstant(1.0 / static_cast<double>(v.size()));
  } else if (sum != 1.0) {
    v /= sum;
  }
}

// Probability vector over modes. Instances are only created through the
// named constructors, all of which leave the weights on the simplex.
class SimplexVector {
 public:
  static SimplexVector project(const Vector& v) {
    if (v.size() == 0) throw UsageError("simplex vector must be nonempty");
    Vector w = v;
    project_simplex_inplace(w);
    return SimplexVector(std::move(w));
  }

  // Point mass on mode j.
  static SimplexVector vertex(int m, int j) {
    if (m <= 0) throw UsageError("simplex vector must be nonempty");
    if (j < 0 || j >= m) throw UsageError("vertex index out of range");
    Vector w = Vector::Zero(m);
    w[j] = 1.0;
    return SimplexVector(std::move(w));
  }

  static SimplexVector uniform(int m) {
    if (m <= 0) throw UsageError("simplex vector must be nonempty");
    return SimplexVector(Vector::Constant(m, 1.0 / m));
  }

  // Adopt weights that are already a distribution (each entry >= 0, sum
  // within 1e-12 of one). Use project() for anything unnormalized.
  static SimplexVector from_probabilities(const Vector& p) {
    if (p.size() == 0) throw UsageError("simplex vector must be nonempty");
    if (!p.allFinite()) throw NumericalError("simplex vector: non-finite input");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p[i] < 0.0) throw UsageError("simplex vector: negative probability");
      sum += p[i];
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw UsageError("simplex vector: probabilities do not sum to one");
    return SimplexVector(p);
  }

  // Adopt weights that have already been through project_simplex_inplace.
  // Skips revalidation so a projected vector round-trips bit-identically;
  // only for internal plumbing that just projected.
  static SimplexVector from_projected(Vector w) { return SimplexVector(std::move(w)); }

  int size() const { return static_cast<int>(w_.size()); }
  double operator[](int i) const { return w_[i]; }
  const Vector& weights() const { return w_; }

 private:
  explicit SimplexVector(Vector w) : w_(std::move(w)) {}

  Vector w_;
};

}  // namespace switchsplit
