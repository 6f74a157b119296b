#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cltlab/bridge.hpp"
#include "cltlab/moments.hpp"

namespace cltlab {

// Counter-based stream derivation. With
//   mix(z) = splitmix64 finalizer of z + 0x9E3779B97F4A7C15,
// stream r of master seed s is
//   mix(mix(s) ^ (r * 0xD1B54A32D192ED03))     (arithmetic mod 2^64).
// mix is a bijection and r -> r * odd is injective, so distinct r give
// distinct streams. Each stream seeds a std::mt19937_64, whose output
// sequence is fixed by the standard.
struct SeedSpec {
  std::uint64_t master = 0;
  std::uint64_t stream(std::uint64_t replication) const noexcept;
};

std::uint64_t splitmix64(std::uint64_t z) noexcept;

// Uniform doubles in [0, 1) from the top 53 bits of mt19937_64 output.
class StreamRng {
 public:
  explicit StreamRng(std::uint64_t stream) : engine_(stream) {}
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

// Inverse-CDF sampler over states in index order: the next state is the
// smallest y with u < P(x,0) + ... + P(x,y).
class PathSampler {
 public:
  explicit PathSampler(const Model& model);

  std::size_t initial(double u) const { return pick(initial_, u); }
  std::size_t step(std::size_t x, double u) const { return pick(rows_[x], u); }

 private:
  static std::size_t pick(const std::vector<double>& cumulative, double u);

  std::vector<double> initial_;
  std::vector<std::vector<double>> rows_;
};

// xi_0 ~ pi followed by n transitions; returns n+1 states.
std::vector<std::size_t> sample_path(const Model& model, std::size_t n,
                                     std::uint64_t stream);

// Standard normal CDF by a fixed rational approximation (Hart 1968, double
// precision variant); absolute error well below 1e-9.
double normal_cdf(double t);

struct MixtureComponent {
  double weight = 1.0;
  double variance = 1.0;
};

// t -> sum_i w_i Phi(t / sigma_i); a zero-variance component is a unit step
// at 0 (right-continuous).
class MixtureReference {
 public:
  explicit MixtureReference(std::vector<MixtureComponent> components);

  double cdf(double t) const;
  double cdf_left(double t) const;  // limit from the left
  bool degenerate() const noexcept;  // all mass at 0
  bool has_atom() const noexcept;    // some zero-variance component
  const std::vector<MixtureComponent>& components() const noexcept { return components_; }

 private:
  std::vector<MixtureComponent> components_;
};

// Throws BadWeights unless weights are positive and sum to 1 within 1e-12
// and every variance is non-negative.
MixtureReference mixture_reference(std::vector<MixtureComponent> components);

// sup_t |F_n(t) - F(t)| for sorted samples, accounting for the atom at 0 when
// the reference has one.
double ks_distance(const std::vector<double>& sorted_samples,
                   const MixtureReference& reference);

// Per closed class of the chain: weight pi(class) and variance
// centered_sigma(n) of the class restricted to itself, with f re-centered
// inside the class (a constant shift cancels in S_n - E(S_n | xi_0, xi_n)).
MixtureReference class_mixture_reference(const Model& model, std::size_t n);

enum class Centering { endpoint, none };
std::string to_string(Centering centering);
Centering parse_centering(const std::string& text);

struct ExperimentOptions {
  std::size_t n = 1024;
  std::size_t reps = 10'000;
  SeedSpec seed{};
  Centering centering = Centering::endpoint;
  std::size_t workers = 1;
};

struct ExperimentReport {
  std::size_t n = 0;
  std::size_t reps = 0;
  Centering centering = Centering::endpoint;
  std::uint64_t master_seed = 0;
  double mean = 0.0;
  double variance = 0.0;
  double mean_half_width = 0.0;      // 99% normal-approximation
  double variance_half_width = 0.0;  // 99%, from the fourth moment
  bool degenerate = false;           // reference is the point mass at 0
  double ks = 0.0;                   // NaN when degenerate
  double max_abs = 0.0;              // max_r |T_r|
  double reference_variance = 0.0;
  std::string reference_provenance;
  std::vector<MixtureComponent> reference_components;
  // Sample mean of B_n(xi_0, xi_n) with its 99% half-width (endpoint mode).
  double centering_mean = 0.0;
  double centering_half_width = 0.0;
};

inline constexpr double kZ99 = 2.5758293035489004;

// Per replication r, samples a path from stream r and records
// T_r = (S_n - B_n(xi_0, xi_n)) / sqrt(n), or S_n / sqrt(n) without
// centering. Statistics are sorted before any aggregation so the report does
// not depend on the number of workers.
ExperimentReport clt_experiment(const Model& model, const ExperimentOptions& options,
                                const BridgeTable* table, const MixtureReference& reference,
                                const std::string& provenance);

// Default reference: class mixture of centered_sigma(n) for endpoint
// centering; sigma_series (or E(S_n^2)/n when the series does not converge)
// without centering.
struct ReferenceChoice {
  MixtureReference law;
  std::string provenance;
};
ReferenceChoice default_reference(const Model& model, std::size_t n, Centering centering,
                                  const BridgeTable* table);

// Raw statistics T_r in replication order.
std::vector<double> experiment_statistics(const Model& model, const ExperimentOptions& options,
                                          const BridgeTable* table);

enum class AbsMeanMode { exact, monte_carlo };

struct AbsMeanResult {
  double value = 0.0;       // pi_const * (E|S_n|)^2 / (2n)
  double abs_mean = 0.0;    // E|S_n| (exact or sampled)
  double half_width = 0.0;  // 99%, zero in exact mode
};

// Exact mode runs a dynamic program over (state, lattice value of S_k),
// which needs all f values to be integer multiples of one step (NotLattice
// otherwise).
AbsMeanResult abs_mean_sigma(const Model& model, std::size_t n, AbsMeanMode mode,
                             std::size_t reps = 10'000, SeedSpec seed = {},
                             std::size_t workers = 1);

// Common step h with f(x)/h integral for all x, or nullopt.
std::optional<double> lattice_step(const Vector& f);

}  // namespace cltlab
