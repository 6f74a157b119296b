#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cltlab/moments.hpp"

namespace cltlab {

// Kernel [[1-a, a], [b, 1-b]] with pi = (b, a)/(a+b) and observable (f0, f1)
// centered under pi. a, b in [0, 1], not both zero (DegenerateChain).
Model two_state(double a, double b, double f0, double f1);

// Independent draws from `probs`: every kernel row equals probs.
Model iid_chain(const Vector& probs, const Vector& raw_f);

// Two-state i.i.d. chain with f = (-1, 1).
Model iid_rademacher();

// Deterministic alternation 0 -> 1 -> 0 with f = (-1, 1): periodic, no mixing.
Model flip_flop();

// Renewal chain on {0..N}: from 0 stay with probability 1/2 or jump to i with
// probability kappa_N / (2 i^3 log(i+1)^e), kappa_N making the jumps sum to
// 1/2; from i >= 1 step down to i-1. Observable 1{0} - pi(0).
struct RenewalChain {
  Model model;
  double kappa = 0.0;      // normalizer at this N
  double tail_mass = 0.0;  // jump mass beyond N of the untruncated chain
};

RenewalChain truncated_renewal(std::size_t max_jump, double log_exponent);

// Jump mass sum_{i > N} p_i of the untruncated chain normalized to total
// jump mass 1/2. Non-increasing in N.
double renewal_tail_mass(std::size_t max_jump, double log_exponent);

inline constexpr std::size_t kProductStateLimit = 4096;

// Independent components on the product space: state (y, z) has index
// y * S_z + z, pi = pi_y (x) pi_z and f(y, z) = f_y(y) f_z(z).
Model product_chain(const Model& first, const Model& second);

// Disjoint union with block-diagonal kernel, pi the weighted concatenation of
// the component laws and f concatenated then re-centered. Weights must be
// positive and sum to 1 within 1e-12 (BadWeights).
Model block_diagonal(const std::vector<std::pair<double, Model>>& components);

struct GalleryModel {
  std::string name;
  Model model;
  std::optional<double> tail_mass;
};

// The fixed model collection used by the property suites.
std::vector<GalleryModel> standard_gallery();

}  // namespace cltlab
