#include "cltlab/bridge.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cltlab/error.hpp"
#include "cltlab/parallel.hpp"

namespace cltlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_state(const Kernel& kernel, std::size_t s, const char* what) {
  if (s >= kernel.size()) {
    throw_validation("InvalidArgument", std::string(what) + " state " +
                                            std::to_string(s) + " out of range");
  }
}

[[noreturn]] void unreachable(std::size_t x, std::size_t y, std::size_t n) {
  throw_validation("UnreachablePair", "P^" + std::to_string(n) + "(" +
                                          std::to_string(x) + "," +
                                          std::to_string(y) + ") = 0");
}

// Numerator and denominator rows for one source state; see bridge_sum_table.
using RowRef = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

template <class Scalar>
void sweep_row(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& step,
               const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>& f, std::size_t x,
               std::size_t n, RowRef numerator, RowRef denominator) {
  using Rows = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;
  const Eigen::Index size = step.rows();
  Rows state = Rows::Zero(2, size);  // row 0: alpha_k, row 1: acc_k
  state(0, static_cast<Eigen::Index>(x)) = Scalar(1);
  Rows next(2, size);
  for (std::size_t k = 1; k <= n; ++k) {
    next.noalias() = state * step;
    next.row(1) += next.row(0).cwiseProduct(f);
    state.swap(next);
  }
  numerator = state.row(1).template cast<double>();
  denominator = state.row(0).template cast<double>();
}

}  // namespace

double BridgeTable::at(std::size_t x, std::size_t y) const {
  if (x >= static_cast<std::size_t>(values.rows()) ||
      y >= static_cast<std::size_t>(values.cols())) {
    throw_validation("InvalidArgument", "bridge cell out of range");
  }
  if (!reachable(x, y)) unreachable(x, y, n);
  return values(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
}

Vector bridge_marginal(const Kernel& kernel, std::size_t n, std::size_t k,
                       std::size_t x, std::size_t y) {
  check_state(kernel, x, "start");
  check_state(kernel, y, "end");
  if (k > n) throw_validation("InvalidArgument", "bridge index k exceeds horizon n");
  const auto ix = static_cast<Eigen::Index>(x);
  const auto iy = static_cast<Eigen::Index>(y);
  const double total = (*kernel.power(n))(ix, iy);
  if (!(total > 0.0)) unreachable(x, y, n);
  const auto forward = kernel.power(k);
  const auto backward = kernel.power(n - k);
  Vector law = forward->row(ix).transpose().cwiseProduct(backward->col(iy)) / total;
  return law;
}

BridgeTable bridge_sum_table(const Model& model, std::size_t n, std::size_t workers) {
  if (n == 0) throw_validation("InvalidArgument", "bridge horizon must be at least 1");
  const auto size = static_cast<Eigen::Index>(model.size());
  Matrix numerator(size, size);
  Matrix denominator(size, size);

  const bool extended = n > kExtendedPrecisionHorizon;
  const Eigen::MatrixX<long double> step_ext =
      extended ? model.kernel().rows().cast<long double>() : Eigen::MatrixX<long double>();
  const Eigen::RowVectorX<long double> f_ext =
      extended ? model.f().transpose().cast<long double>() : Eigen::RowVectorX<long double>();
  const Eigen::RowVectorXd f_row = model.f().transpose();

  detail::parallel_for(static_cast<std::size_t>(size), workers, [&](std::size_t x) {
    const auto ix = static_cast<Eigen::Index>(x);
    if (extended) {
      sweep_row<long double>(step_ext, f_ext, x, n, numerator.row(ix), denominator.row(ix));
    } else {
      sweep_row<double>(model.kernel().rows(), f_row, x, n, numerator.row(ix),
                        denominator.row(ix));
    }
  });

  BridgeTable table;
  table.n = n;
  table.transition = denominator;
  table.support_mask = denominator.array() > 0.0;
  table.values = Matrix::Constant(size, size, kNaN);
  for (Eigen::Index x = 0; x < size; ++x) {
    for (Eigen::Index y = 0; y < size; ++y) {
      if (table.support_mask(x, y)) table.values(x, y) = numerator(x, y) / denominator(x, y);
    }
  }
  return table;
}

double endpoint_second_moment(const Model& model, const BridgeTable& table) {
  const Vector& pi = model.pi().probs;
  double total = 0.0;
  for (Eigen::Index x = 0; x < table.values.rows(); ++x) {
    if (!(pi(x) > 0.0)) continue;
    double row = 0.0;
    for (Eigen::Index y = 0; y < table.values.cols(); ++y) {
      if (!table.support_mask(x, y)) continue;
      const double b = table.values(x, y);
      row += table.transition(x, y) * b * b;
    }
    total += pi(x) * row;
  }
  return total;
}

namespace {

double clamp_centered(double value) {
  if (value >= 0.0) return value;
  std::ostringstream os;
  os.precision(17);
  os << "centered variance " << value;
  if (value < -1e-6) {
    os << " violates the projection identity";
    throw_invariant("NegativeVariance", os.str());
  }
  if (value < -1e-9) warn(os.str() + " clamped to 0");
  return 0.0;
}

}  // namespace

double centered_sigma(const Model& model, const BridgeTable& table) {
  const double n = static_cast<double>(table.n);
  const double total = partial_sum_variance(model, table.n);
  return clamp_centered((total - endpoint_second_moment(model, table)) / n);
}

double centered_sigma(const Model& model, std::size_t n) {
  return centered_sigma(model, bridge_sum_table(model, n));
}

double endpoint_projection_norm(const Model& model, const BridgeTable& table) {
  return endpoint_second_moment(model, table) / static_cast<double>(table.n);
}

double endpoint_projection_norm(const Model& model, std::size_t n) {
  return endpoint_projection_norm(model, bridge_sum_table(model, n));
}

double x0_two_sided_norm(const Model& model, std::size_t n) {
  if (n == 0) throw_validation("InvalidArgument", "horizon must be at least 1");
  const auto half = model.kernel().power(n);
  const auto full = model.kernel().power(2 * n);
  const Matrix middle = (*half) * model.f().asDiagonal() * (*half);
  const Vector& pi = model.pi().probs;
  double total = 0.0;
  for (Eigen::Index x = 0; x < middle.rows(); ++x) {
    if (!(pi(x) > 0.0)) continue;
    double row = 0.0;
    for (Eigen::Index y = 0; y < middle.cols(); ++y) {
      const double p = (*full)(x, y);
      if (p > 0.0) row += middle(x, y) * middle(x, y) / p;
    }
    total += pi(x) * row;
  }
  return total;
}

Vector expected_sum_given_start(const Model& model, std::size_t n) {
  Vector v = model.f();
  Vector total = Vector::Zero(v.size());
  for (std::size_t k = 1; k <= n; ++k) {
    v = model.kernel().rows() * v;
    total += v;
  }
  return total;
}

Vector expected_sum_given_end(const Model& model, std::size_t n) {
  const Kernel reversed = reversed_kernel(model.kernel(), model.pi());
  Vector v = model.f();
  Vector total = Vector::Zero(v.size());
  for (std::size_t j = 0; j < n; ++j) {
    if (j > 0) v = reversed.rows() * v;
    total += v;
  }
  for (Eigen::Index y = 0; y < total.size(); ++y) {
    if (!(model.pi().probs(y) > 0.0)) total(y) = kNaN;
  }
  return total;
}

BridgeSweep::BridgeSweep(const Model& model) : model_(model) {
  const auto size = static_cast<Eigen::Index>(model.size());
  power_ = Matrix::Identity(size, size);
  numerator_ = Matrix::Zero(size, size);
  second_ = Matrix::Zero(size, size);
}

void BridgeSweep::advance() {
  const Matrix& step = model_.kernel().rows();
  const auto f = model_.f().asDiagonal();
  const Vector f2 = model_.f().cwiseProduct(model_.f());
  Matrix carried = numerator_ * step;  // A_{n-1} P
  Matrix power = power_ * step;
  Matrix second = second_ * step;
  second.noalias() += 2.0 * carried * f;
  second.noalias() += power * f2.asDiagonal();
  carried.noalias() += power * f;
  power_ = std::move(power);
  numerator_ = std::move(carried);
  second_ = std::move(second);
  ++n_;
}

BridgeTable BridgeSweep::table() const {
  const auto size = power_.rows();
  BridgeTable table;
  table.n = n_;
  table.transition = power_;
  table.support_mask = power_.array() > 0.0;
  table.values = Matrix::Constant(size, size, kNaN);
  for (Eigen::Index x = 0; x < size; ++x) {
    for (Eigen::Index y = 0; y < size; ++y) {
      if (table.support_mask(x, y)) table.values(x, y) = numerator_(x, y) / power_(x, y);
    }
  }
  return table;
}

double BridgeSweep::endpoint_projection_norm() const {
  if (n_ == 0) return 0.0;
  const Vector& pi = model_.pi().probs;
  double total = 0.0;
  for (Eigen::Index x = 0; x < power_.rows(); ++x) {
    if (!(pi(x) > 0.0)) continue;
    double row = 0.0;
    for (Eigen::Index y = 0; y < power_.cols(); ++y) {
      const double p = power_(x, y);
      if (p > 0.0) row += numerator_(x, y) * numerator_(x, y) / p;
    }
    total += pi(x) * row;
  }
  return total / static_cast<double>(n_);
}

double BridgeSweep::second_moment_per_step() const {
  if (n_ == 0) return 0.0;
  return model_.pi().probs.dot(second_.rowwise().sum()) / static_cast<double>(n_);
}

double BridgeSweep::centered_sigma_direct() const {
  if (n_ == 0) return 0.0;
  const Vector& pi = model_.pi().probs;
  double total = 0.0;
  for (Eigen::Index x = 0; x < power_.rows(); ++x) {
    if (!(pi(x) > 0.0)) continue;
    double row = 0.0;
    for (Eigen::Index y = 0; y < power_.cols(); ++y) {
      const double p = power_(x, y);
      if (p > 0.0) row += second_(x, y) - numerator_(x, y) * numerator_(x, y) / p;
    }
    total += pi(x) * row;
  }
  return total / static_cast<double>(n_);
}

}  // namespace cltlab
