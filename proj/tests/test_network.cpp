#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "mfgswitch/errors.hpp"
#include "mfgswitch/network.hpp"

using namespace mfg;

namespace {

std::vector<std::string> bit_strings(const std::vector<Node>& nodes) {
  std::vector<std::string> out;
  for (const auto& n : nodes) out.push_back(n.bits());
  return out;
}

int factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

}  // namespace

TEST_CASE("bit strings round trip") {
  for (int N = 1; N <= 5; ++N) {
    for (std::uint32_t id = 0; id < (1u << N); ++id) {
      const Node p(N, id);
      CHECK(Node::from_bits(p.bits()) == p);
      CHECK(static_cast<int>(p.bits().size()) == N);
    }
  }
  CHECK(Node::from_bits("100").id() == 1);
  CHECK(Node::from_bits("001").id() == 4);
  CHECK_THROWS_AS(Node::from_bits("10x"), Error);
  CHECK_THROWS_AS(Node::from_bits(""), Error);
  CHECK_THROWS_AS(Node(3, 8), Error);
}

TEST_CASE("successors of the three-target cube") {
  CHECK(bit_strings(successors(Node::from_bits("000"))) == std::vector<std::string>{"100", "010", "001"});
  CHECK(successors(Node::from_bits("111")).empty());
  CHECK(bit_strings(successors(Node::from_bits("001"))) == std::vector<std::string>{"101", "011"});
}

TEST_CASE("ones count") {
  CHECK(ones_count(Node::from_bits("000")) == 0);
  CHECK(ones_count(Node::from_bits("111")) == 3);
  CHECK(ones_count(Node::from_bits("101")) == 2);
}

TEST_CASE("lattice properties") {
  for (int N = 1; N <= 6; ++N) {
    std::size_t edges = 0;
    for (std::uint32_t id = 0; id < node_count(N); ++id) {
      const Node p(N, id);
      const auto s = successors(p);
      CHECK(static_cast<int>(s.size()) == N - p.ones_count());
      for (const auto& q : s) {
        CHECK(q.ones_count() == p.ones_count() + 1);
        CHECK(is_successor(p, q));
        CHECK(p.dominated_by(q));
      }
      CHECK(std::is_sorted(s.begin(), s.end()));
      edges += s.size();
    }
    CHECK(edges == static_cast<std::size_t>(N) << (N - 1));
    CHECK(static_cast<int>(enumerate_node_paths(Node::origin(N), Node::destination(N)).size()) == factorial(N));
  }
}

TEST_CASE("path enumeration") {
  const auto all = enumerate_node_paths(Node::origin(3), Node::destination(3));
  REQUIRE(all.size() == 6);
  std::set<std::vector<std::uint32_t>> distinct;
  for (const auto& path : all) {
    REQUIRE(path.size() == 4);
    std::vector<std::uint32_t> ids;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) CHECK(is_successor(path[i], path[i + 1]));
    for (const auto& n : path) ids.push_back(n.id());
    distinct.insert(ids);
  }
  CHECK(distinct.size() == 6);
  CHECK(std::is_sorted(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }));

  const auto one = enumerate_node_paths(Node::from_bits("110"), Node::from_bits("111"));
  REQUIRE(one.size() == 1);
  CHECK(bit_strings(one[0]) == std::vector<std::string>{"110", "111"});
  CHECK_THROWS_AS(enumerate_node_paths(Node::from_bits("100"), Node::from_bits("011")), Error);
}

TEST_CASE("node bound") {
  CHECK(node_count(10) == 1024);
  CHECK_THROWS_AS(node_count(11), Error);
  CHECK_THROWS_AS(node_count(0), Error);
  CHECK(node_count(12, 12) == 4096);
}

TEST_CASE("admissible controls") {
  const int N = 2;
  SwitchPath ok{{Node(N, 0), Node(N, 1), Node(N, 3)}, {0.0, 0.4, 0.9}};
  CHECK(is_admissible(ok, 1.0));
  SwitchPath stop_early{{Node(N, 0), Node(N, 1)}, {0.0, 0.4}};
  std::string why;
  CHECK_FALSE(is_admissible(stop_early, 1.0, &why));
  CHECK_FALSE(why.empty());
  SwitchPath stop_at_T{{Node(N, 0), Node(N, 1)}, {0.0, 1.0}};
  CHECK(is_admissible(stop_at_T, 1.0));
  SwitchPath jump{{Node(N, 0), Node(N, 3)}, {0.0, 1.0}};
  CHECK_FALSE(is_admissible(jump, 1.0));
  SwitchPath backwards{{Node(N, 0), Node(N, 1), Node(N, 3)}, {0.0, 0.5, 0.5}};
  CHECK_FALSE(is_admissible(backwards, 1.0));
  SwitchPath late{{Node(N, 0), Node(N, 2), Node(N, 3)}, {0.0, 0.5, 1.5}};
  CHECK_FALSE(is_admissible(late, 1.0));
}
