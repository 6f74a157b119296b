#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cltlab/kernel.hpp"

namespace cltlab {

inline constexpr double kCenteringTolerance = 1e-10;

// A stationary chain together with a pi-centered observable f. The chain
// variables are X_i = f(xi_i) and the additive functional is
// S_n = X_1 + ... + X_n.
class Model {
 public:
  // Throws NotCentered when |sum_x pi(x) f(x)| > kCenteringTolerance.
  Model(Kernel kernel, StationaryLaw pi, Vector f);

  // Solves for pi and centers raw_f under it.
  static Model from_raw(Kernel kernel, const Vector& raw_f);

  const Kernel& kernel() const noexcept { return kernel_; }
  const StationaryLaw& pi() const noexcept { return pi_; }
  const Vector& f() const noexcept { return f_; }
  std::size_t size() const noexcept { return kernel_.size(); }

 private:
  Kernel kernel_;
  StationaryLaw pi_;
  Vector f_;
};

// raw_f - E_pi(raw_f).
Vector center_observable(const Vector& raw_f, const StationaryLaw& pi);

// E(X_0 X_k) = sum_x pi(x) f(x) (P^k f)(x).
double autocovariance(const Model& model, std::size_t k);

// E(X_0 X_k) for k = 0..max_lag, by repeated application of P to f.
std::vector<double> autocovariances(const Model& model, std::size_t max_lag);

// E(S_n^2) = n E(X_0^2) + 2 sum_{k=1}^{n-1} (n-k) E(X_0 X_k).
double partial_sum_variance(const Model& model, std::size_t n);

struct VarianceProfile {
  std::vector<double> values;  // values[n-1] = E(S_n^2)/n
  double sup = 0.0;
  std::size_t argsup = 1;
  // |v_N - v_{N/2}| < 1e-3; reporting only.
  bool tail_settled = false;
  // Covariance series partial sum through lag N-1, offered when the tail
  // has settled.
  std::optional<double> converged_estimate;
};

VarianceProfile varsup_profile(const Model& model, std::size_t max_n);

struct SeriesSum {
  double value = 0.0;
  std::size_t terms = 0;     // lags summed (truncation index)
  double tail_bound = 0.0;   // bound on the discarded tail at truncation
};

inline constexpr std::size_t kSeriesBudget = std::size_t{1} << 20;

// sigma^2 = E(X_0^2) + 2 sum_{k>=1} E(X_0 X_k). Requires an irreducible
// aperiodic chain; refuses (NonSummable) otherwise or when the covariances do
// not decay within kSeriesBudget lags.
SeriesSum sigma_series(const Model& model, double tol = 1e-10);

}  // namespace cltlab
