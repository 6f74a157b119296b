#include "cltlab/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cltlab/error.hpp"

namespace cltlab {

Model::Model(Kernel kernel, StationaryLaw pi, Vector f)
    : kernel_(std::move(kernel)), pi_(std::move(pi)), f_(std::move(f)) {
  if (static_cast<std::size_t>(f_.size()) != kernel_.size() ||
      static_cast<std::size_t>(pi_.probs.size()) != kernel_.size()) {
    throw_validation("SizeMismatch", "observable and stationary law must have " +
                                         std::to_string(kernel_.size()) +
                                         " entries");
  }
  if (!f_.allFinite()) throw_validation("NotFinite", "observable has a non-finite value");
  const double mean = pi_.probs.dot(f_);
  if (std::abs(mean) > kCenteringTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "E_pi f = " << mean << " exceeds " << kCenteringTolerance;
    throw_validation("NotCentered", os.str());
  }
}

Model Model::from_raw(Kernel kernel, const Vector& raw_f) {
  StationaryLaw pi = stationary_law(kernel);
  Vector f = center_observable(raw_f, pi);
  return Model(std::move(kernel), std::move(pi), std::move(f));
}

Vector center_observable(const Vector& raw_f, const StationaryLaw& pi) {
  if (raw_f.size() != pi.probs.size()) {
    throw_validation("SizeMismatch", "observable length " +
                                         std::to_string(raw_f.size()) +
                                         " does not match state count " +
                                         std::to_string(pi.probs.size()));
  }
  const double mean = pi.probs.dot(raw_f);
  Vector centered = raw_f.array() - mean;
  // A second pass removes the rounding left by the first.
  centered.array() -= pi.probs.dot(centered);
  return centered;
}

double autocovariance(const Model& model, std::size_t k) {
  const Vector pkf = (*model.kernel().power(k)) * model.f();
  return model.pi().probs.dot(model.f().cwiseProduct(pkf));
}

std::vector<double> autocovariances(const Model& model, std::size_t max_lag) {
  const Vector weighted = model.pi().probs.cwiseProduct(model.f());
  std::vector<double> out;
  out.reserve(max_lag + 1);
  Vector v = model.f();
  for (std::size_t k = 0; k <= max_lag; ++k) {
    if (k > 0) v = model.kernel().rows() * v;
    out.push_back(weighted.dot(v));
  }
  return out;
}

double partial_sum_variance(const Model& model, std::size_t n) {
  if (n == 0) throw_validation("InvalidArgument", "n must be at least 1");
  const auto gamma = autocovariances(model, n - 1);
  double cross = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    cross += static_cast<double>(n - k) * gamma[k];
  }
  return static_cast<double>(n) * gamma[0] + 2.0 * cross;
}

VarianceProfile varsup_profile(const Model& model, std::size_t max_n) {
  if (max_n == 0) throw_validation("InvalidArgument", "N must be at least 1");
  const auto gamma = autocovariances(model, max_n - 1);
  VarianceProfile profile;
  profile.values.reserve(max_n);
  double second_moment = 0.0;
  double lag_sum = 0.0;  // sum_{k=1}^{n-1} gamma_k
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (n > 1) lag_sum += gamma[n - 1];
    second_moment += gamma[0] + 2.0 * lag_sum;
    const double v = second_moment / static_cast<double>(n);
    profile.values.push_back(v);
    if (n == 1 || v > profile.sup) {
      profile.sup = v;
      profile.argsup = n;
    }
  }
  const std::size_t half = std::max<std::size_t>(1, max_n / 2);
  profile.tail_settled =
      std::abs(profile.values[max_n - 1] - profile.values[half - 1]) < 1e-3;
  if (profile.tail_settled) profile.converged_estimate = gamma[0] + 2.0 * lag_sum;
  return profile;
}

SeriesSum sigma_series(const Model& model, double tol) {
  if (!(tol > 0.0)) throw_validation("InvalidArgument", "tolerance must be positive");
  const auto report = ergodicity_report(model.kernel(), model.pi());
  if (!report.totally_ergodic) {
    throw_validation("NonSummable",
                     "covariance series requires an irreducible aperiodic chain "
                     "(irreducible=" + std::string(report.irreducible ? "true" : "false") +
                         ", period=" + std::to_string(report.period) + ")");
  }
  constexpr std::size_t kWindow = 8;
  const Vector weighted = model.pi().probs.cwiseProduct(model.f());
  // |E(X_0 X_k)| <= E|X_0| * ||P^k f||_inf
  const double f_l1 = model.pi().probs.dot(model.f().cwiseAbs());
  // Below this P^k f is rounding residue around its (zero) pi-mean.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                       model.f().lpNorm<Eigen::Infinity>();
  std::vector<double> norms;  // ||P^k f - E_pi f||_inf
  Vector v = model.f();
  SeriesSum out;
  double lag_sum = 0.0;
  norms.push_back(v.lpNorm<Eigen::Infinity>());
  for (std::size_t k = 1; k <= kSeriesBudget; ++k) {
    v = model.kernel().rows() * v;
    lag_sum += weighted.dot(v);
    const double norm =
        (v.array() - model.pi().probs.dot(v)).matrix().lpNorm<Eigen::Infinity>();
    norms.push_back(norm);
    if (norm <= floor) {
      out.terms = k;
      out.tail_bound = 0.0;
      out.value = weighted.dot(model.f()) + 2.0 * lag_sum;
      return out;
    }
    if (k < kWindow) continue;
    const double earlier = norms[k - kWindow];
    const double ratio = std::pow(norm / earlier, 1.0 / double(kWindow));
    if (ratio >= 1.0) continue;
    const double bound = 2.0 * f_l1 * norm * ratio / (1.0 - ratio);
    if (bound < tol) {
      out.terms = k;
      out.tail_bound = bound;
      out.value = weighted.dot(model.f()) + 2.0 * lag_sum;
      return out;
    }
  }
  throw_validation("NonSummable", "covariances did not decay below tolerance within " +
                                      std::to_string(kSeriesBudget) + " lags");
}

}  // namespace cltlab
