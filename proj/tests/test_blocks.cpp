#include <doctest.h>

#include <map>

#include "cltlab/blocks.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace cltlab;
using testing::error_code;
using testing::near;

TEST_SUITE("blocks") {
  TEST_CASE("block_decompose examples") {
    const Model iid = iid_rademacher();
    const auto path = sample_path(iid, 40, SeedSpec{1}.stream(0));
    for (std::size_t m : {1u, 2u, 4u, 8u}) {
      const auto blocks = block_decompose(iid, path, m);
      CHECK(blocks.u == 40 / m);
      for (std::size_t k = 0; k < blocks.u; ++k) {
        CHECK(near(blocks.remainder[k],
                   iid.f()(static_cast<Eigen::Index>(path[(k + 1) * m])) / std::sqrt(double(m)),
                   1e-15));
      }
    }

    const Model flip = flip_flop();
    const auto alternating = sample_path(flip, 30, SeedSpec{2}.stream(0));
    for (std::size_t m : {1u, 2u, 3u, 5u}) {
      const auto blocks = block_decompose(flip, alternating, m);
      for (double d : blocks.martingale) CHECK(near(d, 0.0, 1e-14));
    }

    const Model sym = two_state(0.25, 0.25, -1.0, 1.0);
    const auto blocks = block_decompose(sym, {0, 0, 1, 1, 0}, 2);
    REQUIRE(blocks.u == 2);
    CHECK(blocks.block_sums[0] == 0.0);
    const double b201 = oracle::bridge(sym, 2).value(0, 1);
    CHECK(near(blocks.remainder[0], b201 / std::sqrt(2.0), 1e-15));
    CHECK(near(blocks.martingale[0], -blocks.remainder[0], 1e-15));
  }

  TEST_CASE("block_decompose errors") {
    const Model sym = two_state(0.25, 0.25, -1.0, 1.0);
    CHECK(error_code([&] { block_decompose(sym, {0, 1, 0}, 2); }) == "BlockTooLong");
    CHECK(error_code([&] { block_decompose(flip_flop(), {0, 0, 0}, 1); }) == "UnreachablePair");
  }

  TEST_CASE("per-path reconstruction") {
    for (const auto& model : testing::small_models()) {
      for (std::uint64_t r = 0; r < 5; ++r) {
        const std::size_t n = 37;
        const auto path = sample_path(model, n, SeedSpec{99}.stream(r));
        double s = 0.0;
        for (std::size_t i = 1; i <= n; ++i) s += model.f()(static_cast<Eigen::Index>(path[i]));
        for (std::size_t m : {2u, 3u, 5u, 8u}) {
          const auto blocks = block_decompose(model, path, m);
          const double root = std::sqrt(double(m));
          double rebuilt = blocks.tail_sum;
          double full = 0.0;
          for (std::size_t k = 0; k < blocks.u; ++k) {
            CHECK(near(root * (blocks.martingale[k] + blocks.remainder[k]), blocks.block_sums[k], 1e-12));
            rebuilt += root * (blocks.martingale[k] + blocks.remainder[k]);
            full += blocks.block_sums[k];
          }
          CHECK(near(rebuilt, s, 1e-10));
          CHECK(near(blocks.martingale_total + blocks.remainder_total, full / root, 1e-10));
        }
      }
    }
  }

  TEST_CASE("remainder_second_moment examples") {
    for (std::size_t m : {1u, 2u, 4u}) {
      for (std::size_t u : {1u, 3u, 8u}) {
        CHECK(near(remainder_second_moment(iid_rademacher(), m, u), double(u) / double(m), 1e-12));
      }
    }
    for (std::size_t u : {1u, 2u, 5u}) CHECK(near(remainder_second_moment(flip_flop(), 2, u), 0.0, 1e-14));
    const Model sym = two_state(0.25, 0.25, -1.0, 1.0);
    CHECK(near(remainder_second_moment(sym, 2, 2), oracle::remainder_second_moment(sym, 2, 2), 1e-12));
  }

  TEST_CASE("remainder_second_moment matches enumeration") {
    for (const auto& model : testing::small_models()) {
      for (auto [m, u] : {std::pair<std::size_t, std::size_t>{1, 4}, {2, 2}, {2, 3}, {3, 2}, {4, 2}}) {
        if (model.size() == 4 && m * u > 6) continue;
        CHECK(near(remainder_second_moment(model, m, u), oracle::remainder_second_moment(model, m, u), 1e-12));
      }
    }
  }

  TEST_CASE("remainder_second_moment budget") {
    const Model big = truncated_renewal(64, 2.0).model;
    CHECK(error_code([&] { remainder_second_moment(big, 2, 2); }) == "ExactModeBudgetExceeded");
    CHECK(testing::error_category([&] { remainder_second_moment(big, 2, 2); }) == ErrorCategory::budget);
    CHECK(error_code([] { remainder_second_moment(iid_rademacher(), 64, 65); }) ==
          "ExactModeBudgetExceeded");
  }

  TEST_CASE("identity_check examples") {
    const auto iid = identity_check(iid_rademacher(), 4, 8);
    CHECK(iid.residual <= 1e-10);
    CHECK(near(iid.lhs, 1.0, 1e-12));
    CHECK(near(iid.rhs, 1.0, 1e-12));
    const auto flip = identity_check(flip_flop(), 2, 4);
    CHECK(flip.residual <= 1e-10);
    CHECK(near(flip.lhs, 0.0, 1e-12));
    CHECK(identity_check(two_state(0.25, 0.25, -1.0, 1.0), 4, 4).residual <= 1e-8);
  }

  TEST_CASE("identity holds across the gallery") {
    for (const auto& entry : standard_gallery()) {
      if (entry.model.size() > kExactStateLimit) continue;
      for (std::size_t m : {2u, 4u, 8u}) {
        for (std::size_t u : {2u, 4u, 8u}) {
          CHECK_MESSAGE(identity_check(entry.model, m, u).residual <= 1e-8, entry.name);
        }
      }
    }
  }

  TEST_CASE("orthogonality examples") {
    const auto iid = orthogonality_check(iid_rademacher(), 2, 3);
    CHECK(iid.mode == CheckMode::exact);
    CHECK(std::abs(iid.value) <= 1e-12);
    const Model sym = two_state(0.25, 0.25, -1.0, 1.0);
    const auto exact = orthogonality_check(sym, 2, 2);
    CHECK(exact.mode == CheckMode::exact);
    CHECK(std::abs(exact.value) <= 1e-12);
    CHECK(near(exact.value, oracle::cross_moment(sym, 2, 2), 1e-12));
    const auto mc = orthogonality_check(sym, 8, 64, 100'000, SeedSpec{12345}, 2);
    CHECK(mc.mode == CheckMode::monte_carlo);
    CHECK(mc.reps == 100'000);
    CHECK(mc.ok);
    CHECK(std::abs(mc.value) <= mc.half_width);
  }

  TEST_CASE("orthogonality in exact mode across small models") {
    for (const auto& model : testing::small_models()) {
      for (auto [m, u] : {std::pair<std::size_t, std::size_t>{1, 5}, {2, 3}, {3, 2}, {2, 5}}) {
        if (model.size() == 4 && m * u > 8) continue;
        const auto check = orthogonality_check(model, m, u);
        CHECK(check.mode == CheckMode::exact);
        CHECK(check.ok);
        CHECK(near(check.value, oracle::cross_moment(model, m, u), 1e-12));
      }
    }
  }

  TEST_CASE("martingale differences have zero conditional mean given the past") {
    for (const auto& model : testing::small_models()) {
      if (model.size() > 3) continue;
      const std::size_t m = 2, u = 4;
      const BridgeTable table = bridge_sum_table(model, m);
      for (std::size_t k = 0; k < u; ++k) {
        std::map<std::vector<std::size_t>, std::pair<double, double>> by_prefix;
        double second = 0.0;
        oracle::for_each_path(model, u * m, [&](const oracle::Path& p, double prob) {
          const auto blocks = block_decompose(model, p, table);
          auto& cell = by_prefix[std::vector<std::size_t>(p.begin(), p.begin() + k * m + 1)];
          cell.first += prob;
          cell.second += prob * blocks.martingale[k];
          second += prob * blocks.martingale[k] * blocks.martingale[k];
        });
        for (const auto& [prefix, cell] : by_prefix) CHECK(near(cell.second / cell.first, 0.0, 1e-12));
        CHECK(near(second, centered_sigma(model, m), 1e-10));
      }
    }
  }
}
