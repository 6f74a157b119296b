#include "cltlab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <mutex>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "cltlab/error.hpp"

namespace cltlab {

// LRU memo of kernel powers keyed by exponent. Safe for concurrent use.
class PowerCache {
 public:
  explicit PowerCache(std::size_t capacity) : capacity_(capacity) {}

  std::shared_ptr<const Matrix> find(std::size_t k) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(k);
    if (it == entries_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second.second);
    return it->second.first;
  }

  void insert(std::size_t k, std::shared_ptr<const Matrix> value) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (entries_.count(k) != 0) return;
    order_.push_front(k);
    entries_.emplace(k, std::make_pair(std::move(value), order_.begin()));
    while (entries_.size() > capacity_) {
      entries_.erase(order_.back());
      order_.pop_back();
    }
  }

 private:
  std::mutex mutex_;
  std::size_t capacity_;
  std::list<std::size_t> order_;
  std::unordered_map<std::size_t,
                     std::pair<std::shared_ptr<const Matrix>,
                               std::list<std::size_t>::iterator>>
      entries_;
};

namespace {

std::size_t cache_capacity(std::size_t size) {
  constexpr std::size_t kBudgetBytes = std::size_t{256} << 20;
  const std::size_t bytes = std::max<std::size_t>(1, size * size * sizeof(double));
  return std::clamp<std::size_t>(kBudgetBytes / bytes, 8, 4096);
}

std::string describe_cell(std::size_t x, std::size_t y) {
  std::ostringstream os;
  os << "(" << x << "," << y << ")";
  return os.str();
}

using Graph = std::vector<std::vector<std::size_t>>;

Graph transition_graph(const Matrix& rows, const std::vector<bool>& keep) {
  const auto n = static_cast<std::size_t>(rows.rows());
  Graph g(n);
  for (std::size_t x = 0; x < n; ++x) {
    if (!keep[x]) continue;
    for (std::size_t y = 0; y < n; ++y) {
      if (keep[y] && rows(static_cast<Eigen::Index>(x),
                          static_cast<Eigen::Index>(y)) > 0.0) {
        g[x].push_back(y);
      }
    }
  }
  return g;
}

// Iterative Tarjan. Returns the component id of each node (or SIZE_MAX for
// nodes not in `keep`) and the number of components.
std::pair<std::vector<std::size_t>, std::size_t> strongly_connected(
    const Graph& g, const std::vector<bool>& keep) {
  constexpr auto kUnset = static_cast<std::size_t>(-1);
  const std::size_t n = g.size();
  std::vector<std::size_t> index(n, kUnset), low(n, 0), comp(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // node, next edge
  std::size_t counter = 0, components = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (!keep[root] || index[root] != kUnset) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, edge] = call.back();
      if (edge < g[v].size()) {
        const std::size_t w = g[v][edge++];
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = components;
        } while (w != v);
        ++components;
      }
      const std::size_t finished = v;
      call.pop_back();
      if (!call.empty()) {
        auto& parent = call.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }
  return {comp, components};
}

double l1_residual(const Matrix& rows, const Vector& pi) {
  return (rows.transpose() * pi - pi).lpNorm<1>();
}

Vector lazy_power_iteration(const Matrix& rows, Vector start, double tol) {
  Vector pi = std::move(start);
  for (std::size_t it = 0; it < kPowerIterationBudget; ++it) {
    Vector next = rows.transpose() * pi;
    if ((next - pi).lpNorm<1>() <= tol) return pi;
    pi = 0.5 * (pi + next);
  }
  throw_budget("NoConvergence",
               "stationary power iteration exceeded " +
                   std::to_string(kPowerIterationBudget) + " iterations");
}

Vector solve_closed_class(const Matrix& rows, double tol) {
  const Eigen::Index n = rows.rows();
  if (n == 1) return Vector::Ones(1);
  Vector pi;
  if (static_cast<std::size_t>(n) <= kDirectSolveLimit) {
    Matrix a = rows.transpose() - Matrix::Identity(n, n);
    a.row(n - 1).setOnes();
    Vector b = Vector::Zero(n);
    b(n - 1) = 1.0;
    pi = a.fullPivLu().solve(b);
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    if (l1_residual(rows, pi) > tol) pi = lazy_power_iteration(rows, pi, tol);
  } else {
    pi = lazy_power_iteration(rows, Vector::Constant(n, 1.0 / double(n)), tol);
  }
  return pi;
}

std::size_t gcd_of_cycles(const Graph& g, const std::vector<std::size_t>& comp,
                          std::size_t component, std::size_t root) {
  constexpr auto kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> level(g.size(), kUnset);
  std::vector<std::size_t> queue{root};
  level[root] = 0;
  std::size_t period = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t v = queue[head];
    for (std::size_t w : g[v]) {
      if (comp[w] != component) continue;
      if (level[w] == kUnset) {
        level[w] = level[v] + 1;
        queue.push_back(w);
      } else {
        const auto diff = static_cast<std::ptrdiff_t>(level[v] + 1) -
                          static_cast<std::ptrdiff_t>(level[w]);
        period = std::gcd(period, static_cast<std::size_t>(std::abs(diff)));
      }
    }
  }
  return period;  // 0 when the component has no cycle
}

}  // namespace

Kernel::Kernel(Matrix rows)
    : rows_(std::move(rows)),
      cache_(std::make_shared<PowerCache>(cache_capacity(size()))) {}

std::shared_ptr<const Matrix> Kernel::power(std::size_t k) const {
  if (auto hit = cache_->find(k)) return hit;
  auto result = std::make_shared<Matrix>();
  const Eigen::Index n = rows_.rows();
  if (k == 0) {
    *result = Matrix::Identity(n, n);
  } else if (k == 1) {
    *result = rows_;
  } else if (k % 2 == 0) {
    const auto half = power(k / 2);
    result->noalias() = (*half) * (*half);
  } else {
    const auto prev = power(k - 1);
    result->noalias() = (*prev) * rows_;
  }
  cache_->insert(k, result);
  return result;
}

Kernel validate_kernel(Matrix rows) {
  if (rows.rows() < 1 || rows.rows() != rows.cols()) {
    throw_validation("NotSquare", "kernel must be a non-empty square matrix, got " +
                                      std::to_string(rows.rows()) + "x" +
                                      std::to_string(rows.cols()));
  }
  const auto n = static_cast<std::size_t>(rows.rows());
  for (std::size_t x = 0; x < n; ++x) {
    double sum = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      const double p = rows(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
      if (!(p >= 0.0)) {
        std::ostringstream os;
        os << "entry " << describe_cell(x, y) << " = " << p << " is negative";
        throw_validation("NegativeEntry", os.str());
      }
      sum += p;
    }
    const double deviation = sum - 1.0;
    if (std::abs(deviation) > kRowSumTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << x << " sums to " << sum << " (deviation " << deviation
         << ")";
      throw_validation("RowSumDeviation", os.str());
    }
  }
  return Kernel(std::move(rows));
}

Kernel validate_kernel(const std::vector<std::vector<double>>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix m(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    const auto& row = rows[static_cast<std::size_t>(x)];
    if (static_cast<Eigen::Index>(row.size()) != n) {
      throw_validation("NotSquare", "row " + std::to_string(x) + " has " +
                                        std::to_string(row.size()) +
                                        " entries, expected " + std::to_string(n));
    }
    for (Eigen::Index y = 0; y < n; ++y) m(x, y) = row[static_cast<std::size_t>(y)];
  }
  return validate_kernel(std::move(m));
}

Matrix kernel_power(const Kernel& kernel, std::size_t k) {
  return *kernel.power(k);
}

std::vector<std::vector<std::size_t>> closed_classes(const Kernel& kernel) {
  const std::size_t n = kernel.size();
  const std::vector<bool> all(n, true);
  const Graph g = transition_graph(kernel.rows(), all);
  const auto [comp, count] = strongly_connected(g, all);

  std::vector<bool> closed(count, true);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t w : g[v]) {
      if (comp[w] != comp[v]) closed[comp[v]] = false;
    }
  }
  std::vector<std::vector<std::size_t>> by_comp(count);
  for (std::size_t v = 0; v < n; ++v) {
    if (closed[comp[v]]) by_comp[comp[v]].push_back(v);
  }
  std::vector<std::vector<std::size_t>> classes;
  for (auto& c : by_comp) {
    if (!c.empty()) classes.push_back(std::move(c));
  }
  std::sort(classes.begin(), classes.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return classes;
}

Kernel restrict_kernel(const Kernel& kernel,
                       const std::vector<std::size_t>& states) {
  const auto m = static_cast<Eigen::Index>(states.size());
  Matrix sub(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      sub(i, j) = kernel(states[static_cast<std::size_t>(i)],
                         states[static_cast<std::size_t>(j)]);
    }
  }
  return validate_kernel(std::move(sub));
}

StationaryLaw stationary_law(const Kernel& kernel, double tol) {
  if (!(tol > 0.0)) throw_validation("InvalidArgument", "tolerance must be positive");
  const auto classes = closed_classes(kernel);
  const auto n = static_cast<Eigen::Index>(kernel.size());
  StationaryLaw law;
  law.probs = Vector::Zero(n);
  law.closed_classes = classes.size();
  law.unique = classes.size() == 1;
  const double weight = 1.0 / static_cast<double>(classes.size());
  for (const auto& members : classes) {
    const Kernel sub = restrict_kernel(kernel, members);
    const Vector local = solve_closed_class(sub.rows(), tol);
    for (std::size_t i = 0; i < members.size(); ++i) {
      law.probs(static_cast<Eigen::Index>(members[i])) =
          weight * local(static_cast<Eigen::Index>(i));
    }
  }
  law.residual = l1_residual(kernel.rows(), law.probs);
  if (law.residual > tol) {
    throw_budget("NoConvergence", "stationary residual " +
                                      std::to_string(law.residual) +
                                      " exceeds tolerance");
  }
  return law;
}

StationaryLaw make_stationary_law(const Kernel& kernel, Vector probs, double tol) {
  if (static_cast<std::size_t>(probs.size()) != kernel.size()) {
    throw_validation("SizeMismatch", "pi has " + std::to_string(probs.size()) +
                                         " entries, kernel has " +
                                         std::to_string(kernel.size()) + " states");
  }
  if ((probs.array() < 0.0).any()) {
    throw_validation("NegativeEntry", "pi has a negative entry");
  }
  if (std::abs(probs.sum() - 1.0) > kRowSumTolerance) {
    throw_validation("RowSumDeviation",
                     "pi sums to " + std::to_string(probs.sum()));
  }
  StationaryLaw law;
  law.residual = l1_residual(kernel.rows(), probs);
  if (law.residual > tol) {
    throw_validation("NotStationary", "||pi P - pi||_1 = " +
                                          std::to_string(law.residual));
  }
  law.probs = std::move(probs);
  law.closed_classes = closed_classes(kernel).size();
  law.unique = law.closed_classes == 1;
  return law;
}

ErgodicityReport ergodicity_report(const Kernel& kernel, const StationaryLaw& pi) {
  const std::size_t n = kernel.size();
  if (static_cast<std::size_t>(pi.probs.size()) != n) {
    throw_validation("EmptySupport", "stationary law does not match kernel size");
  }
  ErgodicityReport report;
  std::vector<bool> keep(n, false);
  for (std::size_t x = 0; x < n; ++x) {
    if (pi.probs(static_cast<Eigen::Index>(x)) > 0.0) {
      keep[x] = true;
      report.support.push_back(x);
    }
  }
  if (report.support.empty()) {
    throw_validation("EmptySupport", "stationary law has no positive entry");
  }
  const Graph g = transition_graph(kernel.rows(), keep);
  const auto [comp, count] = strongly_connected(g, keep);
  report.irreducible = count == 1;

  std::size_t period = 0;
  std::vector<bool> seen(count, false);
  for (std::size_t v : report.support) {
    if (seen[comp[v]]) continue;
    seen[comp[v]] = true;
    period = std::gcd(period, gcd_of_cycles(g, comp, comp[v], v));
  }
  report.period = period == 0 ? 1 : period;
  report.totally_ergodic = report.irreducible && report.period == 1;
  return report;
}

Kernel reversed_kernel(const Kernel& kernel, const StationaryLaw& pi) {
  const auto n = static_cast<Eigen::Index>(kernel.size());
  const Vector& p = pi.probs;
  const Vector inflow = kernel.rows().transpose() * p;
  Matrix rev = Matrix::Zero(n, n);
  for (Eigen::Index y = 0; y < n; ++y) {
    if (!(p(y) > 0.0) || !(inflow(y) > 0.0)) {
      rev(y, y) = 1.0;
      continue;
    }
    for (Eigen::Index x = 0; x < n; ++x) {
      rev(y, x) = p(x) * kernel.rows()(x, y) / inflow(y);
    }
  }
  return validate_kernel(std::move(rev));
}

}  // namespace cltlab
