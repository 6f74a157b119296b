#pragma once

#include <cstddef>
#include <vector>

#include "cltlab/bridge.hpp"
#include "cltlab/montecarlo.hpp"

namespace cltlab {

// Consecutive blocks of length m along one path xi_0..xi_n. For k < u:
//   Y_k = X_{km+1} + ... + X_{(k+1)m}
//   Z_k = B_m(xi_{km}, xi_{(k+1)m}) / sqrt(m)
//   D_k = Y_k / sqrt(m) - Z_k
// so that M_u + R_u = S_{um} / sqrt(m). The tail block (indices um+1..n) is
// carried separately and is not part of M_u or R_u.
struct BlockDecomposition {
  std::size_t m = 0;
  std::size_t u = 0;
  std::vector<double> block_sums;   // Y_k
  std::vector<double> martingale;   // D_k
  std::vector<double> remainder;    // Z_k
  double martingale_total = 0.0;    // M_u
  double remainder_total = 0.0;     // R_u
  double tail_sum = 0.0;            // Y_u
};

// path holds n+1 states; requires n >= 2m (BlockTooLong otherwise).
BlockDecomposition block_decompose(const Model& model, const std::vector<std::size_t>& path,
                                   std::size_t m);
BlockDecomposition block_decompose(const Model& model, const std::vector<std::size_t>& path,
                                   const BridgeTable& table);

inline constexpr std::size_t kExactStateLimit = 64;
inline constexpr std::size_t kExactHorizonLimit = std::size_t{1} << 12;
inline constexpr std::size_t kEnumerationStateLimit = 4;
inline constexpr std::size_t kEnumerationHorizonLimit = 10;

// E(R_u(m)^2), exactly. With G = P^m, H(x,y) = G(x,y) B_m(x,y) and h = H 1,
// E(Z_j Z_k) = (1/m) pi^T H G^{d-1} h for d = k - j >= 1 and
// (1/m) sum pi(x) G(x,y) B_m(x,y)^2 for j = k. Requires S <= 64 and
// u m <= 2^12 (ExactModeBudgetExceeded otherwise).
double remainder_second_moment(const Model& model, std::size_t m, std::size_t u);

struct IdentityCheck {
  double lhs = 0.0;       // E(S_{um}^2) / (u m)
  double rhs = 0.0;       // centered_sigma(m) + E(R_u^2) / u
  double residual = 0.0;  // |lhs - rhs|
};

// Throws IdentityViolated when the residual exceeds 1e-8.
IdentityCheck identity_check(const Model& model, std::size_t m, std::size_t u);

enum class CheckMode { exact, monte_carlo };

struct OrthogonalityCheck {
  CheckMode mode = CheckMode::exact;
  double value = 0.0;       // E(M_u R_u) or its sample mean
  double half_width = 0.0;  // 99%, Monte Carlo only
  std::size_t reps = 0;
  bool ok = true;           // exact: |value| <= 1e-12; MC: 0 inside the interval
};

// Exact enumeration of all S^{um+1} paths when S <= 4 and u m <= 10;
// otherwise a Monte Carlo estimate over `reps` sampled paths.
OrthogonalityCheck orthogonality_check(const Model& model, std::size_t m, std::size_t u,
                                       std::size_t reps = 100'000, SeedSpec seed = {},
                                       std::size_t workers = 1);

}  // namespace cltlab
