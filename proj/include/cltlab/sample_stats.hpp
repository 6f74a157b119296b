#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace cltlab::detail {

// Neumaier-compensated sum of values in the given order.
class CompensatedSum {
 public:
  void add(double value) noexcept {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;
  double mean_half_width = 0.0;
  double variance_half_width = 0.0;
};

// Moments of an already sorted sample with normal-approximation half-widths
// at critical value z.
inline SampleMoments moments_of_sorted(const std::vector<double>& sorted, double z) {
  SampleMoments m;
  const auto count = static_cast<double>(sorted.size());
  if (sorted.empty()) return m;
  CompensatedSum sum;
  for (double v : sorted) sum.add(v);
  m.mean = sum.value() / count;
  CompensatedSum second, fourth;
  for (double v : sorted) {
    const double d = (v - m.mean) * (v - m.mean);
    second.add(d);
    fourth.add(d * d);
  }
  m.variance = sorted.size() > 1 ? second.value() / (count - 1.0) : 0.0;
  const double m2 = second.value() / count;
  const double m4 = fourth.value() / count;
  m.mean_half_width = z * std::sqrt(m.variance / count);
  m.variance_half_width = z * std::sqrt(std::max(0.0, m4 - m2 * m2) / count);
  return m;
}

}  // namespace cltlab::detail
