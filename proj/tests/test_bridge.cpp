#include <doctest.h>

#include "cltlab/bridge.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace cltlab;
using testing::error_code;
using testing::near;

TEST_SUITE("bridge") {
  TEST_CASE("bridge_marginal examples") {
    const Model sym = two_state(0.25, 0.25, -1.0, 1.0);
    const Vector start = bridge_marginal(sym.kernel(), 5, 0, 1, 0);
    CHECK(start(1) == 1.0);
    CHECK(start(0) == 0.0);
    const Vector end = bridge_marginal(sym.kernel(), 5, 5, 1, 0);
    CHECK(near(end(0), 1.0, 1e-15));
    const Vector mid = bridge_marginal(sym.kernel(), 2, 1, 0, 0);
    CHECK(near(mid(0), 0.9, 1e-15));
    CHECK(near(mid(1), 0.1, 1e-15));
    const Model iid = iid_chain(Vector::Constant(3, 1.0 / 3.0), Vector::LinSpaced(3, -1, 1));
    const Vector flat = bridge_marginal(iid.kernel(), 4, 2, 0, 2);
    for (int z = 0; z < 3; ++z) CHECK(near(flat(z), 1.0 / 3.0, 1e-15));
    CHECK(error_code([&] { bridge_marginal(flip_flop().kernel(), 2, 1, 0, 1); }) ==
          "UnreachablePair");
  }

  TEST_CASE("bridge marginals sum to one") {
    for (const auto& model : testing::small_models()) {
      const auto pn = kernel_power(model.kernel(), 6);
      for (std::size_t x = 0; x < model.size(); ++x) {
        for (std::size_t y = 0; y < model.size(); ++y) {
          if (!(pn(x, y) > 0.0)) continue;
          for (std::size_t k = 0; k <= 6; ++k) {
            CHECK(near(bridge_marginal(model.kernel(), 6, k, x, y).sum(), 1.0, 1e-12));
          }
        }
      }
    }
  }

  TEST_CASE("bridge_sum_table examples") {
    const Model iid = iid_chain(Vector::Constant(3, 1.0 / 3.0), Vector::LinSpaced(3, -1, 1));
    const BridgeTable t = bridge_sum_table(iid, 7);
    for (std::size_t x = 0; x < 3; ++x) {
      for (std::size_t y = 0; y < 3; ++y) CHECK(near(t.at(x, y), iid.f()(y), 1e-14));
    }
    const BridgeTable two = bridge_sum_table(two_state(0.25, 0.25, -1.0, 1.0), 2);
    CHECK(near(two.at(0, 0), -1.8, 1e-15));

    const Model flip = flip_flop();
    for (std::size_t n : {1u, 2u, 5u, 6u}) {
      const BridgeTable ft = bridge_sum_table(flip, n);
      for (std::size_t x = 0; x < 2; ++x) {
        std::size_t state = x;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          state = 1 - state;
          s += flip.f()(static_cast<Eigen::Index>(state));
        }
        CHECK(ft.reachable(x, state));
        CHECK_FALSE(ft.reachable(x, 1 - state));
        CHECK(std::isnan(ft.values(static_cast<Eigen::Index>(x),
                                   static_cast<Eigen::Index>(1 - state))));
        CHECK(ft.at(x, state) == s);
        CHECK(error_code([&] { ft.at(x, 1 - state); }) == "UnreachablePair");
      }
    }
  }

  TEST_CASE("oracle equivalence of bridge quantities") {
    for (const auto& model : testing::small_models()) {
      const std::size_t limit = model.size() <= 3 ? 8 : 6;
      for (std::size_t n = 1; n <= limit; ++n) {
        const BridgeTable table = bridge_sum_table(model, n);
        const oracle::Bridge ob = oracle::bridge(model, n);
        for (std::size_t x = 0; x < model.size(); ++x) {
          for (std::size_t y = 0; y < model.size(); ++y) {
            CHECK(table.reachable(x, y) == ob.reachable(x, y));
            if (ob.reachable(x, y)) CHECK(near(table.at(x, y), ob.value(x, y), 1e-12));
          }
        }
        const auto [centered, projection] = oracle::centered_and_projection(model, n);
        CHECK(near(centered_sigma(model, table), centered, 1e-12));
        CHECK(near(endpoint_projection_norm(model, table), projection, 1e-12));
        if (n <= 4) CHECK(near(x0_two_sided_norm(model, n), oracle::x0_two_sided_norm(model, n), 1e-12));
      }
    }
  }

  TEST_CASE("centered_sigma examples") {
    const Model iid = iid_rademacher();
    for (std::size_t n : {1u, 2u, 10u, 100u}) {
      CHECK(near(centered_sigma(iid, n), double(n - 1) / double(n), 1e-13));
      CHECK(near(endpoint_projection_norm(iid, n), 1.0 / double(n), 1e-13));
    }
    for (std::size_t n : {1u, 2u, 3u, 64u, 257u, 1000u}) {
      CHECK(near(centered_sigma(flip_flop(), n), 0.0, 1e-12));
      if (n % 2 == 1) CHECK(near(endpoint_projection_norm(flip_flop(), n), 1.0 / double(n), 1e-12));
    }
    const Model sym = two_state(0.25, 0.25, -1.0, 1.0);
    CHECK(near(centered_sigma(sym, 1024), 3.0, 0.05));
    CHECK(endpoint_projection_norm(sym, 1024) <= 0.05);
  }

  TEST_CASE("Pythagoras and total expectation") {
    for (const auto& model : testing::small_models()) {
      BridgeSweep sweep(model);
      for (std::size_t n = 1; n <= 256; ++n) {
        sweep.advance();
        const double total = partial_sum_variance(model, n) / double(n);
        if (n % 37 == 1 || n == 256) {
          const BridgeTable table = bridge_sum_table(model, n);
          const double c = centered_sigma(model, table);
          const double p = endpoint_projection_norm(model, table);
          CHECK(near(total, c + p, 1e-9));
          const Vector& pi = model.pi().probs;
          double mean = 0.0;
          for (Eigen::Index x = 0; x < table.values.rows(); ++x) {
            for (Eigen::Index y = 0; y < table.values.cols(); ++y) {
              if (table.support_mask(x, y)) mean += pi(x) * table.transition(x, y) * table.values(x, y);
            }
          }
          CHECK(near(mean, 0.0, 1e-9));
          CHECK(near(sweep.centered_sigma_direct(), c, 1e-9));
          CHECK(near(sweep.endpoint_projection_norm(), p, 1e-9));
        }
        CHECK(near(total, sweep.centered_sigma_direct() + sweep.endpoint_projection_norm(), 1e-9));
        CHECK(near(sweep.second_moment_per_step(), total, 1e-9));
      }
    }
  }

  TEST_CASE("extended precision path agrees with the sweep") {
    const Model renewal = truncated_renewal(16, 2.0).model;
    const BridgeTable table = bridge_sum_table(renewal, 300, 2);
    BridgeSweep sweep(renewal);
    for (int i = 0; i < 300; ++i) sweep.advance();
    const BridgeTable direct = sweep.table();
    for (Eigen::Index x = 0; x < table.values.rows(); ++x) {
      for (Eigen::Index y = 0; y < table.values.cols(); ++y) {
        CHECK(table.support_mask(x, y) == direct.support_mask(x, y));
        if (table.support_mask(x, y)) {
          CHECK(near(table.values(x, y), direct.values(x, y), 1e-8 * (1.0 + std::abs(direct.values(x, y)))));
        }
      }
    }
  }

  TEST_CASE("table does not depend on the worker count") {
    const Model renewal = truncated_renewal(12, 1.0).model;
    const BridgeTable one = bridge_sum_table(renewal, 40, 1);
    const BridgeTable four = bridge_sum_table(renewal, 40, 4);
    CHECK(one.support_mask.cwiseEqual(four.support_mask).all());
    for (Eigen::Index x = 0; x < one.values.rows(); ++x) {
      for (Eigen::Index y = 0; y < one.values.cols(); ++y) {
        if (one.support_mask(x, y)) CHECK(one.values(x, y) == four.values(x, y));
      }
    }
  }

  TEST_CASE("tower property against one-sided expectations") {
    for (const auto& model : testing::small_models()) {
      for (std::size_t n : {1u, 3u, 8u, 32u}) {
        const BridgeTable table = bridge_sum_table(model, n);
        const Vector given_start = expected_sum_given_start(model, n);
        const Vector given_end = expected_sum_given_end(model, n);
        const Vector& pi = model.pi().probs;
        const auto size = static_cast<Eigen::Index>(model.size());
        for (Eigen::Index x = 0; x < size; ++x) {
          double s = 0.0;
          for (Eigen::Index y = 0; y < size; ++y) {
            if (table.support_mask(x, y)) s += table.transition(x, y) * table.values(x, y);
          }
          CHECK(near(s, given_start(x), 1e-10));
        }
        for (Eigen::Index y = 0; y < size; ++y) {
          double mass = 0.0, s = 0.0;
          for (Eigen::Index x = 0; x < size; ++x) {
            if (!table.support_mask(x, y)) continue;
            mass += pi(x) * table.transition(x, y);
            s += pi(x) * table.transition(x, y) * table.values(x, y);
          }
          if (mass > 0.0) {
            CHECK(near(s / mass, given_end(y), 1e-10));
          } else {
            CHECK(std::isnan(given_end(y)));
          }
        }
      }
    }
  }

  TEST_CASE("x0_two_sided_norm examples and monotonicity") {
    for (std::size_t n : {1u, 2u, 9u}) CHECK(near(x0_two_sided_norm(iid_rademacher(), n), 0.0, 1e-15));
    CHECK(near(x0_two_sided_norm(flip_flop(), 1), 1.0, 1e-15));
    const Model sym = two_state(0.25, 0.25, -1.0, 1.0);
    CHECK(near(x0_two_sided_norm(sym, 1), oracle::x0_two_sided_norm(sym, 1), 1e-12));
    for (const auto& model : testing::small_models()) {
      double previous = x0_two_sided_norm(model, 1);
      for (std::size_t n = 2; n <= 64; ++n) {
        const double current = x0_two_sided_norm(model, n);
        CHECK(current <= previous + 1e-12);
        previous = current;
      }
    }
  }
}
