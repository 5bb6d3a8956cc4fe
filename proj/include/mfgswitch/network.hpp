#pragma once

// The visiting network: N-bit strings, edges flip a single 0 to 1.
// Bit i of the integer id is the component p^{i+1}.

#include <cstdint>
#include <string>
#include <vector>

namespace mfg {

inline constexpr int kDefaultMaxTargets = 10;

class Node {
 public:
  Node() = default;
  Node(int num_targets, std::uint32_t id);

  static Node origin(int num_targets) { return Node(num_targets, 0); }
  static Node destination(int num_targets);
  /// Parses "p^1 p^2 ... p^N" written as a string of '0'/'1' characters.
  static Node from_bits(const std::string& bits);

  std::uint32_t id() const noexcept { return id_; }
  int num_targets() const noexcept { return n_; }
  bool bit(int i) const noexcept { return (id_ >> i) & 1u; }
  int ones_count() const noexcept;
  bool is_destination() const noexcept { return ones_count() == n_; }
  /// Componentwise p <= q.
  bool dominated_by(const Node& q) const noexcept { return (id_ & ~q.id_) == 0; }
  std::string bits() const;

  friend bool operator==(const Node& a, const Node& b) noexcept {
    return a.n_ == b.n_ && a.id_ == b.id_;
  }
  friend bool operator<(const Node& a, const Node& b) noexcept { return a.id_ < b.id_; }

 private:
  int n_ = 0;
  std::uint32_t id_ = 0;
};

/// Validates N against the configured bound and returns 2^N.
std::size_t node_count(int num_targets, int max_targets = kDefaultMaxTargets);

/// Nodes reachable by one switch, ordered by increasing id. Empty for p̄.
std::vector<Node> successors(const Node& p);

int ones_count(const Node& p);

bool is_successor(const Node& p, const Node& q);

/// All successor chains from `from` to `to`, lexicographic on ids at each
/// branch. Throws EmptyResult when `to` does not dominate `from`.
std::vector<std::vector<Node>> enumerate_node_paths(const Node& from, const Node& to);

/// A control (r, sigma, pi): nodes p_0..p_r and instants t_0 < ... < t_r.
struct SwitchPath {
  std::vector<Node> nodes;
  std::vector<double> times;

  int switches() const { return static_cast<int>(nodes.size()) - 1; }
};

/// Checks the admissibility rules of a control on the horizon [0, T].
bool is_admissible(const SwitchPath& path, double horizon, std::string* why = nullptr);

}  // namespace mfg
