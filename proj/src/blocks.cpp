#include "cltlab/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cltlab/error.hpp"
#include "cltlab/parallel.hpp"
#include "cltlab/sample_stats.hpp"

namespace cltlab {

namespace {

void require_block_length(std::size_t m) {
  if (m == 0) throw_validation("InvalidArgument", "block length m must be at least 1");
}

void require_blocks(std::size_t m, std::size_t u) {
  require_block_length(m);
  if (u == 0) throw_validation("InvalidArgument", "block count u must be at least 1");
}

}  // namespace

BlockDecomposition block_decompose(const Model& model, const std::vector<std::size_t>& path,
                                   std::size_t m) {
  require_block_length(m);
  if (path.size() < 2 * m + 1) {
    throw_validation("BlockTooLong", "path of length " + std::to_string(path.size() - 1) +
                                         " is shorter than two blocks of m=" +
                                         std::to_string(m));
  }
  return block_decompose(model, path, bridge_sum_table(model, m));
}

BlockDecomposition block_decompose(const Model& model, const std::vector<std::size_t>& path,
                                   const BridgeTable& table) {
  const std::size_t m = table.n;
  require_block_length(m);
  if (path.empty() || path.size() - 1 < 2 * m) {
    throw_validation("BlockTooLong",
                     "path of length " + std::to_string(path.empty() ? 0 : path.size() - 1) +
                         " is shorter than two blocks of m=" + std::to_string(m));
  }
  for (std::size_t state : path) {
    if (state >= model.size()) {
      throw_validation("StateOutOfRange", "path state " + std::to_string(state) +
                                              " outside a chain of size " +
                                              std::to_string(model.size()));
    }
  }
  const std::size_t n = path.size() - 1;
  const Vector& f = model.f();
  const double root = std::sqrt(static_cast<double>(m));

  BlockDecomposition out;
  out.m = m;
  out.u = n / m;
  out.block_sums.resize(out.u);
  out.martingale.resize(out.u);
  out.remainder.resize(out.u);
  for (std::size_t k = 0; k < out.u; ++k) {
    double y = 0.0;
    for (std::size_t i = k * m + 1; i <= (k + 1) * m; ++i) y += f(static_cast<Eigen::Index>(path[i]));
    const double centre = table.at(path[k * m], path[(k + 1) * m]);
    out.block_sums[k] = y;
    out.remainder[k] = centre / root;
    out.martingale[k] = (y - centre) / root;
    out.martingale_total += out.martingale[k];
    out.remainder_total += out.remainder[k];
  }
  for (std::size_t i = out.u * m + 1; i <= n; ++i) {
    out.tail_sum += f(static_cast<Eigen::Index>(path[i]));
  }
  return out;
}

double remainder_second_moment(const Model& model, std::size_t m, std::size_t u) {
  require_blocks(m, u);
  if (model.size() > kExactStateLimit || u * m > kExactHorizonLimit) {
    throw_budget("ExactModeBudgetExceeded",
                 "exact remainder moment needs S <= " + std::to_string(kExactStateLimit) +
                     " and u*m <= " + std::to_string(kExactHorizonLimit) + " (got S=" +
                     std::to_string(model.size()) + ", u*m=" + std::to_string(u * m) +
                     "); use the Monte Carlo estimate instead");
  }
  const BridgeTable table = bridge_sum_table(model, m);
  const Matrix& g = table.transition;
  const Vector& pi = model.pi().probs;
  const Eigen::Index size = g.rows();

  Matrix h(size, size);
  double diagonal = 0.0;
  for (Eigen::Index x = 0; x < size; ++x) {
    for (Eigen::Index y = 0; y < size; ++y) {
      const bool live = table.support_mask(x, y);
      const double b = live ? table.values(x, y) : 0.0;
      h(x, y) = live ? g(x, y) * b : 0.0;
      diagonal += pi(x) * h(x, y) * b;
    }
  }
  const Vector ones = Vector::Ones(size);
  const Vector hh = h * ones;
  Eigen::RowVectorXd left = pi.transpose() * h;  // pi^T H G^{d-1}

  double total = static_cast<double>(u) * diagonal;
  for (std::size_t d = 1; d < u; ++d) {
    total += 2.0 * static_cast<double>(u - d) * left.dot(hh);
    left = left * g;
  }
  return total / static_cast<double>(m);
}

IdentityCheck identity_check(const Model& model, std::size_t m, std::size_t u) {
  require_blocks(m, u);
  IdentityCheck check;
  check.lhs = partial_sum_variance(model, u * m) / static_cast<double>(u * m);
  check.rhs = centered_sigma(model, m) +
              remainder_second_moment(model, m, u) / static_cast<double>(u);
  check.residual = std::abs(check.lhs - check.rhs);
  if (!(check.residual <= 1e-8)) {
    std::ostringstream os;
    os.precision(17);
    os << "m=" << m << ", u=" << u << ": |" << check.lhs << " - " << check.rhs
       << "| = " << check.residual << " > 1e-8";
    throw_invariant("IdentityViolated", os.str());
  }
  return check;
}

namespace {

// Sum over all paths of length n from pi of prob(path) * M_u * R_u.
double enumerate_cross_moment(const Model& model, const BridgeTable& table, std::size_t u) {
  const std::size_t m = table.n;
  const std::size_t n = u * m;
  const std::size_t size = model.size();
  const Vector& pi = model.pi().probs;
  const Kernel& kernel = model.kernel();

  std::vector<std::size_t> path(n + 1, 0);
  detail::CompensatedSum total;
  for (;;) {
    double prob = pi(static_cast<Eigen::Index>(path[0]));
    for (std::size_t i = 1; i <= n && prob > 0.0; ++i) prob *= kernel(path[i - 1], path[i]);
    if (prob > 0.0) {
      const BlockDecomposition blocks = block_decompose(model, path, table);
      total.add(prob * blocks.martingale_total * blocks.remainder_total);
    }
    std::size_t pos = 0;
    while (pos <= n && ++path[pos] == size) path[pos++] = 0;
    if (pos > n) break;
  }
  return total.value();
}

}  // namespace

OrthogonalityCheck orthogonality_check(const Model& model, std::size_t m, std::size_t u,
                                       std::size_t reps, SeedSpec seed, std::size_t workers) {
  require_blocks(m, u);
  if (u < 2) throw_validation("BlockTooLong", "orthogonality needs at least two blocks");
  const BridgeTable table = bridge_sum_table(model, m);
  OrthogonalityCheck check;
  if (model.size() <= kEnumerationStateLimit && u * m <= kEnumerationHorizonLimit) {
    check.mode = CheckMode::exact;
    check.value = enumerate_cross_moment(model, table, u);
    check.ok = std::abs(check.value) <= 1e-12;
    return check;
  }
  if (reps < 2) throw_validation("InvalidArgument", "Monte Carlo orthogonality needs reps >= 2");
  std::vector<double> products(reps);
  detail::parallel_for(reps, workers, [&](std::size_t r) {
    const auto path = sample_path(model, u * m, seed.stream(r));
    const BlockDecomposition blocks = block_decompose(model, path, table);
    products[r] = blocks.martingale_total * blocks.remainder_total;
  });
  std::sort(products.begin(), products.end());
  const auto moments = detail::moments_of_sorted(products, kZ99);
  check.mode = CheckMode::monte_carlo;
  check.value = moments.mean;
  check.half_width = moments.mean_half_width;
  check.reps = reps;
  check.ok = std::abs(check.value) <= check.half_width;
  return check;
}

}  // namespace cltlab
