#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "cltlab/moments.hpp"

namespace cltlab {

// beta_n = sum_x pi(x) * TV(P^n(x, .), pi), total variation being half the
// L1 distance. For finite state spaces the supremum over events is attained
// by the positive part, so this is the absolute regularity coefficient.
double beta_coefficient(const Kernel& kernel, const StationaryLaw& pi, std::size_t n);

// beta(sigma(xi_0), sigma(xi_{-n}, xi_n)) from the exact law
// p(x,z,y) = pi(x) P^n(x,z) P^n(z,y) of (xi_{-n}, xi_0, xi_n):
// (1/2) sum |p(x,z,y) - pi(z) pi(x) P^{2n}(x,y)|.
double beta_two_sided(const Kernel& kernel, const StationaryLaw& pi, std::size_t n);

struct InequalityGap {
  double lhs = 0.0;  // two-sided coefficient
  double rhs = 0.0;  // beta_n + beta_n + beta_{2n}
};

// Instance of beta(B, A v C) <= beta(A,B) + beta(C,B) + beta(A,C) with
// A = sigma(xi_{-n}), B = sigma(xi_0), C = sigma(xi_n). Throws
// InequalityViolated when lhs > rhs + 1e-9.
InequalityGap lemma_strong_gap(const Kernel& kernel, const StationaryLaw& pi,
                               std::size_t n);

// Maximal correlation between xi_0 and xi_n: second singular value of
// sqrt(pi(x)) P^n(x,y) / sqrt(pi(y)) over the support of pi.
double rho_coefficient(const Kernel& kernel, const StationaryLaw& pi, std::size_t n);

// Upper-tail quantile of |X_0| under pi,
// Q(u) = inf{t >= 0 : P(|X_0| > t) <= u}: a non-increasing right-continuous
// step function.
class QuantileFunction {
 public:
  explicit QuantileFunction(const Model& model);

  double operator()(double u) const;
  // int_0^beta Q(u)^2 du, exact for the step function. beta in [0, 1].
  double integral_of_square(double beta) const;

  // Distinct values of |X_0| in decreasing order with their cumulative
  // masses c_j = P(|X_0| >= value_j).
  const std::vector<double>& atoms() const noexcept { return values_; }
  const std::vector<double>& cumulative() const noexcept { return cumulative_; }

 private:
  std::vector<double> values_;
  std::vector<double> cumulative_;
};

double quantile_integral(const Model& model, double beta);

struct MixingProfile {
  std::size_t horizon = 0;
  // All sequences are indexed by n-1 for n = 1..horizon.
  std::vector<double> beta;
  std::vector<double> beta_two_sided;
  std::vector<double> rho;
  std::vector<double> n_quantile_integral;     // n * int_0^{beta_n} Q^2
  std::vector<double> quantile_integral_sum;   // running sum of int_0^{beta_n} Q^2
  std::vector<double> x0_norm;                 // ||E(X_0 | xi_{-n}, xi_n)||^2
  std::vector<double> n_x0_norm;
  std::vector<double> x0_norm_sum;
  // x0_norm <= 2 int_0^{beta2s} Q^2 <= 2 int_0^{min(1, 3 beta_n)} Q^2, 1e-9 slack.
  std::vector<bool> rio_ok;
};

MixingProfile clt_condition_report(const Model& model, std::size_t max_n);

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict verdict);

struct ConditionVerdict {
  std::string condition;  // e.g. "(cond beta)"
  Verdict verdict = Verdict::inconclusive;
  std::string reading;    // e.g. "n·∫Q² → 0"
  double last_value = 0.0;
};

// Finite-horizon readings of the limit conditions, for reporting only:
//   (varsup1)        E(S_n^2)/n stays bounded
//   (bad)            (1/n)||E(S_n | xi_0, xi_n)||^2 -> 0
//   (badn)           n ||E(X_0 | xi_{-n}, xi_n)||^2 -> 0
//   (mixingale)      sum ||E(X_0 | xi_{-n}, xi_n)||^2 < infinity
//   (cond beta)      n int_0^{beta_n} Q^2 -> 0
//   (condstrongCLT)  sum int_0^{beta_n} Q^2 < infinity
std::vector<ConditionVerdict> condition_verdicts(const Model& model,
                                                 const MixingProfile& profile);

// Trend rules used by condition_verdicts, exposed for testing.
Verdict vanishing_verdict(const std::vector<double>& sequence);
Verdict summable_verdict(const std::vector<double>& terms);
Verdict bounded_verdict(const std::vector<double>& sequence);

}  // namespace cltlab
