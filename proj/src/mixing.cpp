#include "cltlab/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cltlab/bridge.hpp"
#include "cltlab/error.hpp"

namespace cltlab {

namespace {

void require_horizon(std::size_t n) {
  if (n == 0) throw_validation("InvalidArgument", "horizon must be at least 1");
}

double beta_from_power(const Matrix& power, const Vector& pi) {
  double total = 0.0;
  for (Eigen::Index x = 0; x < power.rows(); ++x) {
    if (!(pi(x) > 0.0)) continue;
    total += pi(x) * 0.5 * (power.row(x).transpose() - pi).lpNorm<1>();
  }
  return total;
}

double two_sided_from_powers(const Matrix& half, const Matrix& full, const Vector& pi) {
  const Eigen::Index size = half.rows();
  double total = 0.0;
  for (Eigen::Index x = 0; x < size; ++x) {
    if (!(pi(x) > 0.0)) continue;
    double row = 0.0;
    for (Eigen::Index z = 0; z < size; ++z) {
      const double to_middle = half(x, z);
      for (Eigen::Index y = 0; y < size; ++y) {
        row += std::abs(to_middle * half(z, y) - pi(z) * full(x, y));
      }
    }
    total += pi(x) * row;
  }
  return 0.5 * total;
}

}  // namespace

double beta_coefficient(const Kernel& kernel, const StationaryLaw& pi, std::size_t n) {
  require_horizon(n);
  return beta_from_power(*kernel.power(n), pi.probs);
}

double beta_two_sided(const Kernel& kernel, const StationaryLaw& pi, std::size_t n) {
  require_horizon(n);
  return two_sided_from_powers(*kernel.power(n), *kernel.power(2 * n), pi.probs);
}

InequalityGap lemma_strong_gap(const Kernel& kernel, const StationaryLaw& pi,
                               std::size_t n) {
  InequalityGap gap;
  gap.lhs = beta_two_sided(kernel, pi, n);
  const double beta_n = beta_coefficient(kernel, pi, n);
  gap.rhs = beta_n + beta_n + beta_coefficient(kernel, pi, 2 * n);
  if (gap.lhs > gap.rhs + 1e-9) {
    std::ostringstream os;
    os.precision(17);
    os << "n=" << n << ": " << gap.lhs << " > " << gap.rhs;
    throw_invariant("InequalityViolated", os.str());
  }
  return gap;
}

double rho_coefficient(const Kernel& kernel, const StationaryLaw& pi, std::size_t n) {
  require_horizon(n);
  const Vector& p = pi.probs;
  std::vector<Eigen::Index> support;
  for (Eigen::Index x = 0; x < p.size(); ++x) {
    if (p(x) < 0.0) throw_validation("SingularPi", "pi(" + std::to_string(x) + ") < 0");
    if (p(x) > 0.0) support.push_back(x);
  }
  const auto power = kernel.power(n);
  const auto m = static_cast<Eigen::Index>(support.size());
  for (Eigen::Index x : support) {
    for (Eigen::Index y = 0; y < p.size(); ++y) {
      if ((*power)(x, y) > 0.0 && !(p(y) > 0.0)) {
        throw_validation("SingularPi", "state " + std::to_string(y) +
                                           " is reachable from the support but has pi = 0");
      }
    }
  }
  if (m <= 1) return 0.0;
  Matrix q(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      q(i, j) = std::sqrt(p(support[i])) * (*power)(support[i], support[j]) /
                std::sqrt(p(support[j]));
    }
  }
  Eigen::BDCSVD<Matrix> svd(q);
  return std::min(1.0, svd.singularValues()(1));
}

QuantileFunction::QuantileFunction(const Model& model) {
  std::vector<std::pair<double, double>> atoms;  // |f|, mass
  const Vector& pi = model.pi().probs;
  for (Eigen::Index x = 0; x < pi.size(); ++x) {
    if (pi(x) > 0.0) atoms.emplace_back(std::abs(model.f()(x)), pi(x));
  }
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  double cumulative = 0.0;
  for (const auto& [value, mass] : atoms) {
    cumulative += mass;
    if (!values_.empty() && values_.back() == value) {
      cumulative_.back() = cumulative;
    } else {
      values_.push_back(value);
      cumulative_.push_back(cumulative);
    }
  }
}

double QuantileFunction::operator()(double u) const {
  if (u < 0.0) throw_validation("InvalidArgument", "quantile level must be >= 0");
  // u in [c_{j-1}, c_j) maps to values_[j].
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) return 0.0;
  return values_[static_cast<std::size_t>(it - cumulative_.begin())];
}

double QuantileFunction::integral_of_square(double beta) const {
  if (beta < -1e-12 || beta > 1.0 + 1e-12) {
    throw_validation("InvalidArgument",
                     "quantile integral limit " + std::to_string(beta) + " outside [0,1]");
  }
  beta = std::clamp(beta, 0.0, 1.0);
  double total = 0.0;
  double previous = 0.0;
  for (std::size_t j = 0; j < values_.size() && previous < beta; ++j) {
    const double width = std::min(beta, cumulative_[j]) - previous;
    if (width > 0.0) total += values_[j] * values_[j] * width;
    previous = cumulative_[j];
  }
  return total;
}

double quantile_integral(const Model& model, double beta) {
  return QuantileFunction(model).integral_of_square(beta);
}

MixingProfile clt_condition_report(const Model& model, std::size_t max_n) {
  require_horizon(max_n);
  const QuantileFunction quantile(model);
  const Kernel& kernel = model.kernel();
  const StationaryLaw& pi = model.pi();
  MixingProfile profile;
  profile.horizon = max_n;
  double qint_sum = 0.0;
  double x0_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto half = kernel.power(n);
    const auto full = kernel.power(2 * n);
    const double beta = beta_from_power(*half, pi.probs);
    const double beta2s = two_sided_from_powers(*half, *full, pi.probs);
    const double qint = quantile.integral_of_square(std::min(1.0, beta));
    const double x0 = x0_two_sided_norm(model, n);
    qint_sum += qint;
    x0_sum += x0;
    const double rio_two_sided = 2.0 * quantile.integral_of_square(std::min(1.0, beta2s));
    const double rio_three = 2.0 * quantile.integral_of_square(std::min(1.0, 3.0 * beta));
    const double dn = static_cast<double>(n);
    profile.beta.push_back(beta);
    profile.beta_two_sided.push_back(beta2s);
    profile.rho.push_back(rho_coefficient(kernel, pi, n));
    profile.n_quantile_integral.push_back(dn * qint);
    profile.quantile_integral_sum.push_back(qint_sum);
    profile.x0_norm.push_back(x0);
    profile.n_x0_norm.push_back(dn * x0);
    profile.x0_norm_sum.push_back(x0_sum);
    profile.rio_ok.push_back(x0 <= rio_two_sided + 1e-9 && rio_two_sided <= rio_three + 1e-9);
  }
  return profile;
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::pass:
      return "PASS";
    case Verdict::fail:
      return "FAILED";
    case Verdict::inconclusive:
      return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

namespace {

constexpr double kVanished = 1e-9;

}  // namespace

// Compares the last value against the midpoint of the horizon.
Verdict vanishing_verdict(const std::vector<double>& sequence) {
  if (sequence.empty()) return Verdict::inconclusive;
  const double last = sequence.back();
  if (std::abs(last) <= kVanished) return Verdict::pass;
  if (sequence.size() < 4) return Verdict::inconclusive;
  const double mid = sequence[sequence.size() / 2 - 1];
  if (last <= 0.9 * mid) return Verdict::pass;
  if (last >= 0.99 * mid) return Verdict::fail;
  return Verdict::inconclusive;
}

Verdict summable_verdict(const std::vector<double>& terms) {
  if (terms.empty()) return Verdict::inconclusive;
  if (std::abs(terms.back()) <= kVanished * 1e-3) return Verdict::pass;
  if (terms.size() < 4) return Verdict::inconclusive;
  const double mid = terms[terms.size() / 2 - 1];
  if (terms.back() >= 0.99 * mid) return Verdict::fail;
  std::vector<double> scaled(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    scaled[i] = static_cast<double>(i + 1) * terms[i];
  }
  return vanishing_verdict(scaled) == Verdict::pass ? Verdict::pass : Verdict::inconclusive;
}

Verdict bounded_verdict(const std::vector<double>& sequence) {
  if (sequence.size() < 4) return Verdict::inconclusive;
  const std::size_t half = sequence.size() / 2;
  const double early = *std::max_element(sequence.begin(), sequence.begin() + half);
  const double last = sequence.back();
  if (last <= 1.5 * early + 1e-12) return Verdict::pass;
  if (last >= 1.9 * sequence[half - 1]) return Verdict::fail;
  return Verdict::inconclusive;
}

std::vector<ConditionVerdict> condition_verdicts(const Model& model,
                                                 const MixingProfile& profile) {
  const std::size_t horizon = profile.horizon;
  const VarianceProfile variance = varsup_profile(model, horizon);

  std::vector<double> endpoint(horizon);
  BridgeSweep sweep(model);
  for (std::size_t n = 1; n <= horizon; ++n) {
    sweep.advance();
    endpoint[n - 1] = sweep.endpoint_projection_norm();
  }

  std::vector<double> qint_terms(horizon);
  for (std::size_t i = 0; i < horizon; ++i) {
    qint_terms[i] = profile.n_quantile_integral[i] / static_cast<double>(i + 1);
  }

  auto make = [](std::string name, Verdict v, std::string reading, double last) {
    return ConditionVerdict{std::move(name), v, std::move(reading), last};
  };
  std::vector<ConditionVerdict> out;
  out.push_back(make("(varsup1)", bounded_verdict(variance.values), "sup E(S_n²)/n < ∞",
                     variance.values.back()));
  out.push_back(make("(bad)", vanishing_verdict(endpoint), "(1/n)‖E(S_n|ξ₀,ξ_n)‖² → 0",
                     endpoint.back()));
  out.push_back(make("(badn)", vanishing_verdict(profile.n_x0_norm),
                     "n‖E(X₀|ξ₋n,ξ_n)‖² → 0", profile.n_x0_norm.back()));
  out.push_back(make("(mixingale)", summable_verdict(profile.x0_norm),
                     "Σ‖E(X₀|ξ₋n,ξ_n)‖² < ∞", profile.x0_norm_sum.back()));
  out.push_back(make("(cond beta)", vanishing_verdict(profile.n_quantile_integral),
                     "n·∫Q² → 0", profile.n_quantile_integral.back()));
  out.push_back(make("(condstrongCLT)", summable_verdict(qint_terms), "Σ∫Q² < ∞",
                     profile.quantile_integral_sum.back()));
  return out;
}

}  // namespace cltlab
