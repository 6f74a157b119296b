#pragma once

#include <cstddef>

#include "cltlab/moments.hpp"

namespace cltlab {

// B_n(x,y) = E(S_n | xi_0 = x, xi_n = y). Cells with P^n(x,y) = 0 carry no
// probability; they are masked and hold NaN.
struct BridgeTable {
  std::size_t n = 0;
  Matrix values;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> support_mask;
  Matrix transition;  // P^n

  bool reachable(std::size_t x, std::size_t y) const {
    return support_mask(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
  }
  // Throws UnreachablePair on a masked cell.
  double at(std::size_t x, std::size_t y) const;
};

// Law of xi_k given xi_0 = x, xi_n = y:
// z -> P^k(x,z) P^{n-k}(z,y) / P^n(x,y).
Vector bridge_marginal(const Kernel& kernel, std::size_t n, std::size_t k,
                       std::size_t x, std::size_t y);

// Above this horizon the sweeps accumulate in extended precision.
inline constexpr std::size_t kExtendedPrecisionHorizon = 256;

// One forward sweep per source state x: alpha_k = delta_x P^k together with
// the running numerator acc_k = acc_{k-1} P + alpha_k * f, so that
// acc_n(y) = sum_k sum_z P^k(x,z) f(z) P^{n-k}(z,y). Rows are independent and
// are spread over `workers` threads.
BridgeTable bridge_sum_table(const Model& model, std::size_t n,
                             std::size_t workers = 1);

// sum_{x,y} pi(x) P^n(x,y) B_n(x,y)^2 = ||E(S_n | xi_0, xi_n)||^2.
double endpoint_second_moment(const Model& model, const BridgeTable& table);

// (1/n) ||S_n - E(S_n | xi_0, xi_n)||^2 through the projection identity
// ||S_n||^2 - ||E(S_n | .)||^2. Values in [-1e-6, 0) are clamped to zero
// (with a warning below -1e-9); anything lower raises NegativeVariance.
double centered_sigma(const Model& model, std::size_t n);
double centered_sigma(const Model& model, const BridgeTable& table);

// (1/n) ||E(S_n | xi_0, xi_n)||^2.
double endpoint_projection_norm(const Model& model, std::size_t n);
double endpoint_projection_norm(const Model& model, const BridgeTable& table);

// ||E(X_0 | xi_{-n}, xi_n)||^2 with g(x,y) = sum_z P^n(x,z) f(z) P^n(z,y) /
// P^{2n}(x,y). Multiply by n for the pointwise decay reading.
double x0_two_sided_norm(const Model& model, std::size_t n);

// E(S_n | xi_0 = x) = sum_{k=1}^n (P^k f)(x).
Vector expected_sum_given_start(const Model& model, std::size_t n);
// E(S_n | xi_n = y), computed on the time-reversed chain.
Vector expected_sum_given_end(const Model& model, std::size_t n);

// Advances the horizon one step at a time, keeping
//   P^n,  A_n = sum_k P^k F P^{n-k},  W_n(x,y) = E(S_n^2 1{xi_n=y} | xi_0=x)
// where F = diag(f). A_n = A_{n-1} P + P^n F and
// W_n = W_{n-1} P + 2 (A_{n-1} P) F + P^n F^2, each O(S^3) per step. This is
// the route for scanning many horizons; it also yields the conditional
// variance of S_n given both endpoints without the projection identity.
class BridgeSweep {
 public:
  explicit BridgeSweep(const Model& model);

  void advance();
  std::size_t horizon() const noexcept { return n_; }

  const Matrix& transition() const noexcept { return power_; }
  const Matrix& numerator() const noexcept { return numerator_; }
  const Matrix& second_moment() const noexcept { return second_; }

  BridgeTable table() const;
  // sum_{x,y} pi(x) [W_n(x,y) - A_n(x,y)^2 / P^n(x,y)] / n
  double centered_sigma_direct() const;
  // sum_{x,y} pi(x) A_n(x,y)^2 / P^n(x,y) / n
  double endpoint_projection_norm() const;
  // sum_{x,y} pi(x) W_n(x,y) / n = E(S_n^2) / n
  double second_moment_per_step() const;

 private:
  Model model_;
  std::size_t n_ = 0;
  Matrix power_;
  Matrix numerator_;
  Matrix second_;
};

}  // namespace cltlab
