#include "cltlab/gallery.hpp"

#include <cmath>
#include <sstream>

#include "cltlab/error.hpp"

namespace cltlab {

namespace {

void require_probability(const char* name, double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    std::ostringstream os;
    os.precision(17);
    os << name << " = " << value << " is outside [0, 1]";
    throw_validation("InvalidArgument", os.str());
  }
}

double renewal_weight(std::size_t i, double log_exponent) {
  const double x = static_cast<double>(i);
  return 1.0 / (2.0 * x * x * x * std::pow(std::log(x + 1.0), log_exponent));
}

void require_log_exponent(double log_exponent) {
  if (!(log_exponent > 0.0) || !std::isfinite(log_exponent)) {
    throw_validation("InvalidArgument", "log_exponent must be positive and finite");
  }
}

// sum_{i > start} w_i: explicit terms up to 2^20, then the integral of the
// summand from there on (the summand is decreasing, so this is within one
// term of the remainder, far below double resolution of the total).
double weight_sum_after(std::size_t start, double log_exponent) {
  constexpr std::size_t explicit_limit = std::size_t{1} << 20;
  double sum = 0.0;
  for (std::size_t i = explicit_limit; i > start; --i) sum += renewal_weight(i, log_exponent);
  const double k = static_cast<double>(std::max(start, explicit_limit));
  // int_k^inf dx / (2 x^3 log(x+1)^e) ~ 1 / (4 k^2 log(k+1)^e)
  sum += 1.0 / (4.0 * k * k * std::pow(std::log(k + 1.0), log_exponent));
  return sum;
}

}  // namespace

Model two_state(double a, double b, double f0, double f1) {
  require_probability("a", a);
  require_probability("b", b);
  if (a == 0.0 && b == 0.0) {
    throw_validation("DegenerateChain", "a = b = 0 leaves both states absorbing");
  }
  Matrix rows(2, 2);
  rows << 1.0 - a, a, b, 1.0 - b;
  Kernel kernel = validate_kernel(rows);
  Vector pi(2);
  pi << b / (a + b), a / (a + b);
  StationaryLaw law = make_stationary_law(kernel, pi, 1e-12);
  Vector raw(2);
  raw << f0, f1;
  Vector f = center_observable(raw, law);
  return Model(std::move(kernel), std::move(law), std::move(f));
}

Model iid_chain(const Vector& probs, const Vector& raw_f) {
  if (probs.size() == 0) throw_validation("InvalidArgument", "empty distribution");
  Matrix rows(probs.size(), probs.size());
  for (Eigen::Index x = 0; x < probs.size(); ++x) rows.row(x) = probs.transpose();
  Kernel kernel = validate_kernel(rows);
  StationaryLaw law = make_stationary_law(kernel, probs, 1e-12);
  Vector f = center_observable(raw_f, law);
  return Model(std::move(kernel), std::move(law), std::move(f));
}

Model iid_rademacher() { return two_state(0.5, 0.5, -1.0, 1.0); }

Model flip_flop() { return two_state(1.0, 1.0, -1.0, 1.0); }

double renewal_tail_mass(std::size_t max_jump, double log_exponent) {
  require_log_exponent(log_exponent);
  const double total = weight_sum_after(0, log_exponent);
  return 0.5 * weight_sum_after(max_jump, log_exponent) / total;
}

RenewalChain truncated_renewal(std::size_t max_jump, double log_exponent) {
  if (max_jump < 2) throw_validation("InvalidArgument", "truncation N must be at least 2");
  require_log_exponent(log_exponent);
  const auto size = static_cast<Eigen::Index>(max_jump + 1);
  double weights = 0.0;
  for (std::size_t i = max_jump; i >= 1; --i) weights += renewal_weight(i, log_exponent);
  const double kappa = 0.5 / weights;

  Matrix rows = Matrix::Zero(size, size);
  rows(0, 0) = 0.5;
  for (Eigen::Index i = 1; i < size; ++i) {
    rows(0, i) = kappa * renewal_weight(static_cast<std::size_t>(i), log_exponent);
    rows(i, i - 1) = 1.0;
  }
  Kernel kernel = validate_kernel(rows);
  Vector indicator = Vector::Zero(size);
  indicator(0) = 1.0;
  RenewalChain chain{Model::from_raw(std::move(kernel), indicator), kappa,
                     renewal_tail_mass(max_jump, log_exponent)};
  return chain;
}

Model product_chain(const Model& first, const Model& second) {
  const std::size_t sy = first.size();
  const std::size_t sz = second.size();
  if (sy * sz > kProductStateLimit) {
    throw_validation("StateSpaceTooLarge", std::to_string(sy) + " x " + std::to_string(sz) +
                                               " states exceeds " +
                                               std::to_string(kProductStateLimit));
  }
  const auto ny = static_cast<Eigen::Index>(sy);
  const auto nz = static_cast<Eigen::Index>(sz);
  const Matrix& py = first.kernel().rows();
  const Matrix& pz = second.kernel().rows();
  Matrix rows(ny * nz, ny * nz);
  Vector pi(ny * nz);
  Vector f(ny * nz);
  for (Eigen::Index y = 0; y < ny; ++y) {
    for (Eigen::Index z = 0; z < nz; ++z) {
      const Eigen::Index from = y * nz + z;
      pi(from) = first.pi().probs(y) * second.pi().probs(z);
      f(from) = first.f()(y) * second.f()(z);
      for (Eigen::Index y2 = 0; y2 < ny; ++y2) {
        rows.block(from, y2 * nz, 1, nz) = py(y, y2) * pz.row(z);
      }
    }
  }
  Kernel kernel = validate_kernel(rows);
  StationaryLaw law = make_stationary_law(kernel, pi);
  Vector centered = center_observable(f, law);
  return Model(std::move(kernel), std::move(law), std::move(centered));
}

Model block_diagonal(const std::vector<std::pair<double, Model>>& components) {
  if (components.empty()) throw_validation("BadWeights", "no components");
  double weight_sum = 0.0;
  Eigen::Index size = 0;
  for (const auto& [weight, model] : components) {
    if (!(weight > 0.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "component weight " << weight << " is not positive";
      throw_validation("BadWeights", os.str());
    }
    weight_sum += weight;
    size += static_cast<Eigen::Index>(model.size());
  }
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "weights sum to " << weight_sum;
    throw_validation("BadWeights", os.str());
  }
  Matrix rows = Matrix::Zero(size, size);
  Vector pi(size);
  Vector f(size);
  Eigen::Index offset = 0;
  for (const auto& [weight, model] : components) {
    const auto s = static_cast<Eigen::Index>(model.size());
    rows.block(offset, offset, s, s) = model.kernel().rows();
    pi.segment(offset, s) = weight * model.pi().probs;
    f.segment(offset, s) = model.f();
    offset += s;
  }
  pi /= pi.sum();
  Kernel kernel = validate_kernel(rows);
  StationaryLaw law = make_stationary_law(kernel, pi);
  Vector centered = center_observable(f, law);
  return Model(std::move(kernel), std::move(law), std::move(centered));
}

std::vector<GalleryModel> standard_gallery() {
  std::vector<GalleryModel> out;
  out.push_back({"iid_rademacher", iid_rademacher(), std::nullopt});
  out.push_back({"two_state_0.25", two_state(0.25, 0.25, -1.0, 1.0), std::nullopt});
  out.push_back({"two_state_asymmetric", two_state(0.2, 0.3, 0.0, 1.0), std::nullopt});
  out.push_back({"flip_flop", flip_flop(), std::nullopt});
  for (auto [n, e] : {std::pair<std::size_t, double>{32, 2.0}, {64, 1.0}, {64, 2.0}}) {
    RenewalChain chain = truncated_renewal(n, e);
    std::ostringstream name;
    name << "renewal_N" << n << "_e" << e;
    out.push_back({name.str(), std::move(chain.model), chain.tail_mass});
  }
  out.push_back({"product_two_state",
                 product_chain(two_state(0.25, 0.25, -1.0, 1.0),
                               two_state(0.125, 0.125, -1.0, 1.0)),
                 std::nullopt});
  RenewalChain small = truncated_renewal(8, 1.0);
  out.push_back({"product_two_state_renewal",
                 product_chain(two_state(0.25, 0.25, -1.0, 1.0), small.model),
                 small.tail_mass});
  out.push_back({"mixture_two_state_iid",
                 block_diagonal({{0.5, two_state(0.25, 0.25, -1.0, 1.0)},
                                 {0.5, iid_rademacher()}}),
                 std::nullopt});
  return out;
}

}  // namespace cltlab
