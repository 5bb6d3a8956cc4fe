#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "mfgswitch/discretization.hpp"
#include "mfgswitch/errors.hpp"
#include "mfgswitch/value_solver.hpp"
#include "support.hpp"

using namespace mfg;

namespace {

bool near(double a, double b) { return std::abs(a - b) <= 1e-12; }

}  // namespace

TEST_CASE("rounding to the nearest partition node") {
  const EpsPartition part(1.0, 10);
  CHECK(part.epsilon() == doctest::Approx(0.1));
  auto r = round_instant(0.234, part);
  REQUIRE(r.size() == 1);
  CHECK(near(r[0], 0.2));
  r = round_instant(0.25, part);
  REQUIRE(r.size() == 2);
  CHECK(near(r[0], 0.2));
  CHECK(near(r[1], 0.3));
  r = round_instant(0.27, part);
  REQUIRE(r.size() == 1);
  CHECK(near(r[0], 0.3));
  CHECK(round_instant(1.0, part) == std::vector<double>{1.0});
  CHECK(round_instant(0.0, part) == std::vector<double>{0.0});
  CHECK_THROWS_AS(round_instant(1.2, part), Error);
  CHECK_THROWS_AS(round_instant(-0.1, part), Error);
}

TEST_CASE("partition nodes are fixed points") {
  for (int m : {1, 3, 8, 10, 64}) {
    const EpsPartition part(2.0, m);
    for (int k = 0; k <= m; ++k) {
      const auto r = round_instant(part.node(k), part);
      REQUIRE(r.size() == 1);
      CHECK(r[0] == part.node(k));
    }
  }
}

TEST_CASE("rounding error stays within half a cell") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int m : {4, 16, 256}) {
    const EpsPartition part(3.0, m);
    for (int i = 0; i < 2000; ++i) {
      const double tau = u(rng);
      for (double x : round_instant(tau, part)) CHECK(std::abs(x - tau) <= part.epsilon() / 2 + 1e-15);
    }
  }
}

TEST_CASE("integer rounding on the value grid") {
  const EpsPartition part(1.0, 4, 8);
  CHECK(part.value_grid().steps() == 32);
  CHECK(round_grid_index(0, part) == std::vector<int>{0});
  CHECK(round_grid_index(3, part) == std::vector<int>{0});
  CHECK(round_grid_index(4, part) == std::vector<int>{0, 1});
  CHECK(round_grid_index(5, part) == std::vector<int>{1});
  CHECK(round_grid_index(8, part) == std::vector<int>{1});
  CHECK(round_grid_index(32, part) == std::vector<int>{4});
  CHECK_THROWS_AS(round_grid_index(33, part), Error);
  for (int j = 0; j <= 32; ++j) {
    std::vector<double> a;
    for (int k : round_grid_index(j, part)) a.push_back(part.node(k));
    const auto b = round_instant(part.value_grid().time(j), part);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(near(a[i], b[i]));
  }
}

TEST_CASE("single target optimal pair is the horizon") {
  const auto params = testing_support::uniform_params(1, 1.0);
  std::vector<double> m{1.0, 0.0};
  const auto rho = MassField::constant(1.0, m);
  const EpsPartition part(1.0, 8, 4);
  const auto table = solve_value(rho, params, part.value_grid(), {});
  for (int k = 0; k < 8; ++k) {
    const auto pairs = eps_argmin_map(table, part, Node(1, 0), k);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].successor == Node(1, 1));
    CHECK(pairs[0].node_index == 8);
    CHECK(pairs[0].tau == 1.0);
  }
  CHECK_THROWS_AS(eps_argmin_map(table, part, Node(1, 0), 8), Error);
  CHECK_THROWS_AS(eps_argmin_map(table, part, Node(1, 1), 0), Error);
}

TEST_CASE("rounded pairs match the grid optima") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto params = testing_support::random_params(2, 1.0, rng);
    const auto rho = testing_support::random_field(2, 1.0, rng);
    const EpsPartition part(1.0, 8, 16);
    const auto table = solve_value(rho, params, part.value_grid(), {});
    for (int k = 0; k < 8; ++k) {
      const Node p(2, 0);
      const auto opt = table.argmins(p, k * part.grid_divisor());
      const auto pairs = eps_argmin_map(table, part, p, k);
      CHECK(pairs.size() >= opt.size());
      CHECK(pairs.size() <= 2 * opt.size());
      for (const auto& e : pairs) {
        CHECK(e.node_index > k);
        if (!e.bumped) CHECK(std::abs(e.tau - e.source_tau) <= part.epsilon() / 2 + 1e-15);
        const bool known = std::any_of(opt.begin(), opt.end(), [&](const ArgminPair& a) {
          return a.successor == e.successor && a.tau == e.source_tau;
        });
        CHECK(known);
      }
    }
  }
}

TEST_CASE("grid must refine the partition") {
  const auto params = testing_support::uniform_params(1, 1.0);
  std::vector<double> m{1.0, 0.0};
  const auto table = solve_value(MassField::constant(1.0, m), params, TimeGrid(1.0, 12), {});
  CHECK_THROWS_AS(eps_argmin_map(table, EpsPartition(1.0, 8, 2), Node(1, 0), 0), Error);
  CHECK_THROWS_AS(EpsPartition(1.0, 0), Error);
  CHECK_THROWS_AS(EpsPartition(0.0, 4), Error);
}
