#include "cltlab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cltlab/error.hpp"
#include "cltlab/parallel.hpp"
#include "cltlab/sample_stats.hpp"

namespace cltlab {

namespace {

using detail::CompensatedSum;
using detail::SampleMoments;

SampleMoments moments_of_sorted(const std::vector<double>& sorted) {
  return detail::moments_of_sorted(sorted, kZ99);
}

struct Endpoints {
  double sum = 0.0;
  std::size_t first = 0;
  std::size_t last = 0;
};

Endpoints simulate_sum(const PathSampler& sampler, const Vector& f, std::size_t n,
                       StreamRng& rng) {
  Endpoints e;
  std::size_t x = sampler.initial(rng.uniform());
  e.first = x;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x = sampler.step(x, rng.uniform());
    s += f(static_cast<Eigen::Index>(x));
  }
  e.sum = s;
  e.last = x;
  return e;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SeedSpec::stream(std::uint64_t replication) const noexcept {
  return splitmix64(splitmix64(master) ^ (replication * 0xD1B54A32D192ED03ULL));
}

PathSampler::PathSampler(const Model& model) {
  const Vector& pi = model.pi().probs;
  double c = 0.0;
  for (Eigen::Index x = 0; x < pi.size(); ++x) {
    c += pi(x);
    initial_.push_back(c);
  }
  const Matrix& rows = model.kernel().rows();
  rows_.resize(model.size());
  for (Eigen::Index x = 0; x < rows.rows(); ++x) {
    double acc = 0.0;
    auto& row = rows_[static_cast<std::size_t>(x)];
    row.reserve(static_cast<std::size_t>(rows.cols()));
    for (Eigen::Index y = 0; y < rows.cols(); ++y) {
      acc += rows(x, y);
      row.push_back(acc);
    }
  }
}

std::size_t PathSampler::pick(const std::vector<double>& cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it != cumulative.end()) return static_cast<std::size_t>(it - cumulative.begin());
  // u landed in the rounding gap below 1: take the last state with mass.
  std::size_t i = cumulative.size() - 1;
  while (i > 0 && cumulative[i] == cumulative[i - 1]) --i;
  return i;
}

std::vector<std::size_t> sample_path(const Model& model, std::size_t n, std::uint64_t stream) {
  if (n == 0) throw_validation("InvalidArgument", "path length must be at least 1");
  const PathSampler sampler(model);
  StreamRng rng(stream);
  std::vector<std::size_t> path;
  path.reserve(n + 1);
  path.push_back(sampler.initial(rng.uniform()));
  for (std::size_t i = 0; i < n; ++i) path.push_back(sampler.step(path.back(), rng.uniform()));
  return path;
}

double normal_cdf(double t) {
  const double z = std::abs(t);
  double tail = 0.0;
  if (z <= 37.0) {
    const double e = std::exp(-z * z / 2.0);
    if (z < 7.07106781186547) {
      double num = 3.52624965998911e-02 * z + 0.700383064443688;
      num = num * z + 6.37396220353165;
      num = num * z + 33.912866078383;
      num = num * z + 112.079291497871;
      num = num * z + 221.213596169931;
      num = num * z + 220.206867912376;
      double den = 8.83883476483184e-02 * z + 1.75566716318264;
      den = den * z + 16.064177579207;
      den = den * z + 86.7807322029461;
      den = den * z + 296.564248779674;
      den = den * z + 637.333633378831;
      den = den * z + 793.826512519948;
      den = den * z + 440.413735824752;
      tail = e * num / den;
    } else {
      double b = z + 0.65;
      b = z + 4.0 / b;
      b = z + 3.0 / b;
      b = z + 2.0 / b;
      b = z + 1.0 / b;
      tail = e / b / 2.506628274631;
    }
  }
  return t > 0.0 ? 1.0 - tail : tail;
}

MixtureReference::MixtureReference(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {}

double MixtureReference::cdf(double t) const {
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.variance == 0.0) {
      total += t >= 0.0 ? c.weight : 0.0;
    } else {
      total += c.weight * normal_cdf(t / std::sqrt(c.variance));
    }
  }
  return total;
}

double MixtureReference::cdf_left(double t) const {
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.variance == 0.0) {
      total += t > 0.0 ? c.weight : 0.0;
    } else {
      total += c.weight * normal_cdf(t / std::sqrt(c.variance));
    }
  }
  return total;
}

bool MixtureReference::degenerate() const noexcept {
  return std::all_of(components_.begin(), components_.end(),
                     [](const auto& c) { return c.variance == 0.0; });
}

bool MixtureReference::has_atom() const noexcept {
  return std::any_of(components_.begin(), components_.end(),
                     [](const auto& c) { return c.variance == 0.0; });
}

MixtureReference mixture_reference(std::vector<MixtureComponent> components) {
  if (components.empty()) throw_validation("BadWeights", "mixture has no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0)) throw_validation("BadWeights", "mixture weights must be positive");
    if (!(c.variance >= 0.0) || !std::isfinite(c.variance)) {
      throw_validation("BadWeights", "component variance must be finite and >= 0");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw_validation("BadWeights", "mixture weights sum to " + std::to_string(total));
  }
  return MixtureReference(std::move(components));
}

double ks_distance(const std::vector<double>& sorted, const MixtureReference& reference) {
  const auto count = static_cast<double>(sorted.size());
  if (sorted.empty()) return 0.0;
  double distance = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double x = sorted[i];
    distance = std::max(distance, static_cast<double>(i + 1) / count - reference.cdf(x));
    distance = std::max(distance, reference.cdf_left(x) - static_cast<double>(i) / count);
  }
  if (reference.has_atom()) {
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), 0.0) - sorted.begin();
    const auto upto = std::upper_bound(sorted.begin(), sorted.end(), 0.0) - sorted.begin();
    distance = std::max(distance, std::abs(static_cast<double>(below) / count -
                                           reference.cdf_left(0.0)));
    distance = std::max(distance, std::abs(static_cast<double>(upto) / count -
                                           reference.cdf(0.0)));
  }
  return std::clamp(distance, 0.0, 1.0);
}

MixtureReference class_mixture_reference(const Model& model, std::size_t n) {
  const Vector& pi = model.pi().probs;
  std::vector<MixtureComponent> components;
  double total = 0.0;
  for (const auto& members : closed_classes(model.kernel())) {
    double weight = 0.0;
    for (std::size_t s : members) weight += pi(static_cast<Eigen::Index>(s));
    if (!(weight > 0.0)) continue;
    double variance = 0.0;
    if (members.size() == model.size()) {
      variance = centered_sigma(model, n);
    } else {
      const Kernel sub = restrict_kernel(model.kernel(), members);
      const auto m = static_cast<Eigen::Index>(members.size());
      Vector sub_pi(m), sub_f(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto s = static_cast<Eigen::Index>(members[static_cast<std::size_t>(i)]);
        sub_pi(i) = pi(s) / weight;
        sub_f(i) = model.f()(s);
      }
      sub_pi /= sub_pi.sum();
      StationaryLaw law = make_stationary_law(sub, sub_pi, 1e-9);
      Vector centered = center_observable(sub_f, law);
      variance = centered_sigma(Model(sub, std::move(law), std::move(centered)), n);
    }
    components.push_back({weight, variance});
    total += weight;
  }
  for (auto& c : components) c.weight /= total;
  return mixture_reference(std::move(components));
}

std::string to_string(Centering centering) {
  return centering == Centering::endpoint ? "endpoint" : "none";
}

Centering parse_centering(const std::string& text) {
  if (text == "endpoint") return Centering::endpoint;
  if (text == "none") return Centering::none;
  throw_validation("InvalidArgument", "centering must be 'endpoint' or 'none', got '" + text + "'");
}

namespace {

struct Replications {
  std::vector<double> stats;    // T_r
  std::vector<double> centers;  // B_n(xi_0, xi_n), endpoint mode only
};

Replications run_replications(const Model& model, const ExperimentOptions& options,
                              const BridgeTable* table) {
  if (options.n == 0) throw_validation("InvalidArgument", "n must be at least 1");
  const bool endpoint = options.centering == Centering::endpoint;
  if (endpoint) {
    if (table == nullptr) {
      throw_validation("MissingBridge", "endpoint centering requires a bridge table");
    }
    if (table->n != options.n) {
      throw_validation("MissingBridge", "bridge table horizon " + std::to_string(table->n) +
                                            " does not match n=" + std::to_string(options.n));
    }
  }
  const PathSampler sampler(model);
  const double scale = 1.0 / std::sqrt(static_cast<double>(options.n));
  Replications out;
  out.stats.resize(options.reps);
  if (endpoint) out.centers.resize(options.reps);
  detail::parallel_for(options.reps, options.workers, [&](std::size_t r) {
    StreamRng rng(options.seed.stream(r));
    const Endpoints e = simulate_sum(sampler, model.f(), options.n, rng);
    double centered = e.sum;
    if (endpoint) {
      const double b = table->at(e.first, e.last);
      out.centers[r] = b;
      centered -= b;
    }
    out.stats[r] = centered * scale;
  });
  return out;
}

}  // namespace

std::vector<double> experiment_statistics(const Model& model, const ExperimentOptions& options,
                                          const BridgeTable* table) {
  return run_replications(model, options, table).stats;
}

ReferenceChoice default_reference(const Model& model, std::size_t n, Centering centering,
                                  const BridgeTable* table) {
  if (centering == Centering::endpoint) {
    const auto classes = closed_classes(model.kernel());
    if (table != nullptr && table->n == n && classes.size() == 1 &&
        classes.front().size() == model.size()) {
      const double v = centered_sigma(model, *table);
      return {mixture_reference({{1.0, v}}), "centered_sigma"};
    }
    return {class_mixture_reference(model, n), "centered_sigma"};
  }
  try {
    const double v = sigma_series(model).value;
    return {mixture_reference({{1.0, std::max(0.0, v)}}), "sigma_series"};
  } catch (const Error& e) {
    if (e.code() != "NonSummable") throw;
  }
  const double v = partial_sum_variance(model, n) / static_cast<double>(n);
  return {mixture_reference({{1.0, std::max(0.0, v)}}), "partial_sum_variance"};
}

ExperimentReport clt_experiment(const Model& model, const ExperimentOptions& options,
                                const BridgeTable* table, const MixtureReference& reference,
                                const std::string& provenance) {
  if (options.reps < 100) throw_validation("InvalidArgument", "reps must be at least 100");
  Replications runs = run_replications(model, options, table);
  std::vector<double>& stats = runs.stats;

  ExperimentReport report;
  report.n = options.n;
  report.reps = options.reps;
  report.centering = options.centering;
  report.master_seed = options.seed.master;
  report.reference_provenance = provenance;
  report.reference_components = reference.components();
  for (const auto& c : reference.components()) report.reference_variance += c.weight * c.variance;

  if (options.centering == Centering::endpoint) {
    std::sort(runs.centers.begin(), runs.centers.end());
    const SampleMoments cm = moments_of_sorted(runs.centers);
    report.centering_mean = cm.mean;
    report.centering_half_width = cm.mean_half_width;
  }

  std::sort(stats.begin(), stats.end());
  const SampleMoments m = moments_of_sorted(stats);
  report.mean = m.mean;
  report.variance = m.variance;
  report.mean_half_width = m.mean_half_width;
  report.variance_half_width = m.variance_half_width;
  report.max_abs = std::max(std::abs(stats.front()), std::abs(stats.back()));
  report.degenerate = reference.degenerate();
  report.ks = report.degenerate ? std::numeric_limits<double>::quiet_NaN()
                                : ks_distance(stats, reference);
  return report;
}

std::optional<double> lattice_step(const Vector& f) {
  double smallest = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double a = std::abs(f(i));
    if (a > 0.0 && (smallest == 0.0 || a < smallest)) smallest = a;
  }
  if (smallest == 0.0) return 1.0;
  for (int divisor = 1; divisor <= 1000; ++divisor) {
    const double step = smallest / divisor;
    bool ok = true;
    for (Eigen::Index i = 0; i < f.size() && ok; ++i) {
      const double q = f(i) / step;
      ok = std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, std::abs(q));
    }
    if (ok) return step;
  }
  return std::nullopt;
}

AbsMeanResult abs_mean_sigma(const Model& model, std::size_t n, AbsMeanMode mode,
                             std::size_t reps, SeedSpec seed, std::size_t workers) {
  if (n == 0) throw_validation("InvalidArgument", "n must be at least 1");
  const double dn = static_cast<double>(n);
  AbsMeanResult result;
  if (mode == AbsMeanMode::monte_carlo) {
    if (reps < 2) throw_validation("InvalidArgument", "reps must be at least 2");
    const PathSampler sampler(model);
    std::vector<double> values(reps);
    detail::parallel_for(reps, workers, [&](std::size_t r) {
      StreamRng rng(seed.stream(r));
      values[r] = std::abs(simulate_sum(sampler, model.f(), n, rng).sum);
    });
    std::sort(values.begin(), values.end());
    const SampleMoments m = moments_of_sorted(values);
    result.abs_mean = m.mean;
    result.value = std::numbers::pi * m.mean * m.mean / (2.0 * dn);
    result.half_width = std::numbers::pi * m.mean * m.mean_half_width / dn;
    return result;
  }

  const auto step = lattice_step(model.f());
  if (!step) throw_validation("NotLattice", "observable values share no common lattice step");
  const auto size = static_cast<Eigen::Index>(model.size());
  std::vector<long> units(static_cast<std::size_t>(size));
  for (Eigen::Index x = 0; x < size; ++x) {
    units[static_cast<std::size_t>(x)] = std::lround(model.f()(x) / *step);
  }
  const long lo = std::min(0L, *std::min_element(units.begin(), units.end()));
  const long hi = std::max(0L, *std::max_element(units.begin(), units.end()));
  const auto width = static_cast<Eigen::Index>(static_cast<long>(n) * (hi - lo) + 1);
  const double work = dn * static_cast<double>(size) * static_cast<double>(size) *
                      static_cast<double>(width);
  if (work > 4e10) {
    throw_budget("ExactModeBudgetExceeded",
                 "lattice dynamic program needs ~" + std::to_string(work) +
                     " operations; use Monte Carlo mode");
  }
  // Row v holds P(S_k = (v + offset) * step, xi_k = column).
  const long offset = static_cast<long>(n) * lo;
  Matrix current = Matrix::Zero(width, size);
  current.row(static_cast<Eigen::Index>(-offset)) = model.pi().probs.transpose();
  Matrix moved(width, size);
  Matrix next(width, size);
  for (std::size_t k = 0; k < n; ++k) {
    moved.noalias() = current * model.kernel().rows();
    next.setZero();
    for (Eigen::Index y = 0; y < size; ++y) {
      const auto shift = static_cast<Eigen::Index>(units[static_cast<std::size_t>(y)]);
      const Eigen::Index len = width - std::abs(shift);
      if (len <= 0) continue;
      next.col(y).segment(std::max<Eigen::Index>(0, shift), len) =
          moved.col(y).segment(std::max<Eigen::Index>(0, -shift), len);
    }
    current.swap(next);
  }
  const Vector mass = current.rowwise().sum();
  double abs_mean = 0.0;
  for (Eigen::Index v = 0; v < width; ++v) {
    abs_mean += std::abs(static_cast<double>(v + offset)) * *step * mass(v);
  }
  result.abs_mean = abs_mean;
  result.value = std::numbers::pi * abs_mean * abs_mean / (2.0 * dn);
  return result;
}

}  // namespace cltlab
