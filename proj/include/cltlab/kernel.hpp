#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace cltlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class PowerCache;

// Row-stochastic transition matrix over states {0, ..., size-1}. Row x is the
// law of the next state given the current state x. Instances only come out of
// validate_kernel() and are immutable; copies share one power cache.
class Kernel {
 public:
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(rows_.rows());
  }
  const Matrix& rows() const noexcept { return rows_; }
  double operator()(std::size_t x, std::size_t y) const {
    return rows_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  }

  // P^k, memoized. The returned matrix is shared and never mutated.
  std::shared_ptr<const Matrix> power(std::size_t k) const;

 private:
  friend Kernel validate_kernel(Matrix rows);
  explicit Kernel(Matrix rows);

  Matrix rows_;
  std::shared_ptr<PowerCache> cache_;
};

inline constexpr double kRowSumTolerance = 1e-12;

// Rejects negative entries and rows whose sum deviates from 1 by more than
// kRowSumTolerance. Never renormalizes.
Kernel validate_kernel(Matrix rows);
Kernel validate_kernel(const std::vector<std::vector<double>>& rows);
inline Kernel validate_kernel(std::initializer_list<std::initializer_list<double>> rows) {
  return validate_kernel(std::vector<std::vector<double>>(rows.begin(), rows.end()));
}

// Exact product P^k; P^0 is the identity. Computed by repeated squaring and
// cached per exponent.
Matrix kernel_power(const Kernel& kernel, std::size_t k);

struct StationaryLaw {
  Vector probs;
  // False when the chain has more than one closed class; probs is then the
  // equal-weight mixture of the per-class laws.
  bool unique = true;
  std::size_t closed_classes = 1;
  // ||pi P - pi||_1 of the returned vector.
  double residual = 0.0;
};

inline constexpr std::size_t kDirectSolveLimit = 512;
inline constexpr std::size_t kPowerIterationBudget = 1'000'000;

// Invariant law. Each closed communicating class is solved separately: a
// direct linear solve of (P^T - I) pi = 0, sum(pi) = 1 when the class has at
// most kDirectSolveLimit states, lazy power iteration otherwise. Transient
// states get mass zero and classes are weighted equally.
StationaryLaw stationary_law(const Kernel& kernel, double tol = 1e-12);

// Wraps a user-supplied vector after checking it is a probability vector
// invariant under the kernel within tol (L1).
StationaryLaw make_stationary_law(const Kernel& kernel, Vector probs,
                                  double tol = 1e-10);

struct ErgodicityReport {
  std::vector<std::size_t> support;
  bool irreducible = false;
  std::size_t period = 1;
  bool totally_ergodic = false;
};

// Irreducibility is strong connectivity of {(x,y): pi(x)>0, P(x,y)>0}; the
// period is the gcd of cycle lengths inside the support graph. For finite
// chains total ergodicity is irreducible and aperiodic on the support.
ErgodicityReport ergodicity_report(const Kernel& kernel,
                                   const StationaryLaw& pi);

// Strongly connected components of the transition graph that have no edge
// leaving them, ordered by smallest member. Members are sorted.
std::vector<std::vector<std::size_t>> closed_classes(const Kernel& kernel);

// Time reversal P*(y,x) = pi(x) P(x,y) / (pi P)(y) on the support of pi;
// states outside the support are made absorbing.
Kernel reversed_kernel(const Kernel& kernel, const StationaryLaw& pi);

// Restriction of the kernel to a closed set of states, in the given order.
Kernel restrict_kernel(const Kernel& kernel,
                       const std::vector<std::size_t>& states);

}  // namespace cltlab
