#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "cltlab/error.hpp"
#include "cltlab/gallery.hpp"
#include "cltlab/moments.hpp"

namespace testing {

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline cltlab::Model model_of(const std::vector<std::vector<double>>& rows,
                              const std::vector<double>& f) {
  cltlab::Vector raw(static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) raw(static_cast<Eigen::Index>(i)) = f[i];
  return cltlab::Model::from_raw(cltlab::validate_kernel(rows), raw);
}

// Random kernels on 2..4 states, about a quarter of the entries zeroed (the
// diagonal is kept positive so every row has mass), with a random observable.
inline std::vector<cltlab::Model> random_small_models(unsigned seed, int count) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<cltlab::Model> out;
  while (static_cast<int>(out.size()) < count) {
    const std::size_t size = 2 + gen() % 3;
    std::vector<std::vector<double>> rows(size, std::vector<double>(size));
    for (std::size_t x = 0; x < size; ++x) {
      double sum = 0.0;
      for (std::size_t y = 0; y < size; ++y) {
        const double w = (x != y && unit(gen) < 0.25) ? 0.0 : unit(gen) + 0.05;
        rows[x][y] = w;
        sum += w;
      }
      for (auto& p : rows[x]) p /= sum;
      // Exact row sums: put the rounding on the diagonal.
      double others = 0.0;
      for (std::size_t y = 0; y < size; ++y) {
        if (y != x) others += rows[x][y];
      }
      rows[x][x] = 1.0 - others;
    }
    std::vector<double> f(size);
    for (auto& v : f) v = 4.0 * unit(gen) - 2.0;
    out.push_back(model_of(rows, f));
  }
  return out;
}

// Small models with a fixed shape: the named examples plus random ones.
inline std::vector<cltlab::Model> small_models() {
  std::vector<cltlab::Model> out = {
      cltlab::iid_rademacher(), cltlab::two_state(0.25, 0.25, -1.0, 1.0),
      cltlab::two_state(0.2, 0.3, 0.0, 1.0), cltlab::flip_flop(),
      cltlab::product_chain(cltlab::two_state(0.25, 0.25, -1.0, 1.0),
                            cltlab::two_state(0.125, 0.125, -1.0, 1.0)),
      cltlab::block_diagonal({{0.5, cltlab::two_state(0.25, 0.25, -1.0, 1.0)},
                              {0.5, cltlab::iid_rademacher()}}),
      model_of({{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.5, 0.0, 0.5}}, {1.0, -2.0, 0.5}),
      model_of({{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.0, 0.0, 1.0}}, {1.0, 2.0, 3.0}),
  };
  for (auto& m : random_small_models(20240611u, 8)) out.push_back(std::move(m));
  return out;
}

template <class Fn>
std::string error_code(Fn&& fn) {
  try {
    fn();
  } catch (const cltlab::Error& e) {
    return e.code();
  }
  return "";
}

template <class Fn>
cltlab::ErrorCategory error_category(Fn&& fn) {
  try {
    fn();
  } catch (const cltlab::Error& e) {
    return e.category();
  }
  throw std::logic_error("no error raised");
}

}  // namespace testing
