#pragma once

// Reduced games with the switching instants given as data: agents only
// choose which branch of a tree to follow, and each node charges
// residence * slope * mass.

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mfg {

using Rational = boost::multiprecision::cpp_rational;

struct FixedNode {
  std::string label;
  /// Index of the parent node; -1 for the root.
  int parent = -1;
  double entry = 0.0;
  double exit = 0.0;
  double slope = 0.0;

  double residence() const { return exit - entry; }
};

/// Node 0 is the root where all agents start. Every node's children are
/// entered at its exit instant. Leaves exit into the destination at T.
class FixedSwitchInstance {
 public:
  explicit FixedSwitchInstance(std::vector<FixedNode> nodes);

  /// Root [0, 1] and one leaf per slope on [1, 2].
  static FixedSwitchInstance parallel_links(const std::vector<double>& slopes);
  /// Root [0, 1]; leaf p1 on [1, 2] and p2 on [1, 3/2] with leaves p3, p4 on
  /// [3/2, 2]. Slopes 1, 4, 3, 2.
  static FixedSwitchInstance example_tree();

  const std::vector<FixedNode>& nodes() const noexcept { return nodes_; }
  const std::vector<int>& children(int i) const { return children_.at(static_cast<std::size_t>(i)); }
  /// Root-to-leaf node sequences, root excluded, children in index order.
  const std::vector<std::vector<int>>& paths() const noexcept { return paths_; }
  bool is_parallel() const;
  /// Same tree with slope of node i replaced; validation of slopes skipped.
  FixedSwitchInstance with_slope(int i, double slope) const;

 private:
  FixedSwitchInstance() = default;
  void index();

  std::vector<FixedNode> nodes_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<int>> paths_;
};

/// Branch shares at each node (index by child node), the resulting node
/// masses per unit initial mass, and the common path cost per unit mass.
template <class Scalar>
struct FixedSolution {
  std::vector<Scalar> share;
  std::vector<Scalar> mass;
  std::vector<Scalar> path_cost;
};

/// Equal cost along every root-to-leaf path. A node's effective slope is
/// residence * slope plus the harmonic combination of its children's; each
/// child's share is proportional to the reciprocal effective slope.
/// Throws BadSlope for a non-positive slope or residence.
FixedSolution<Rational> solve_fixed_exact(const FixedSwitchInstance& inst);
FixedSolution<double> solve_fixed(const FixedSwitchInstance& inst);

/// Shares (1/c_i) / sum_j (1/c_j). Throws BadSlope, InvalidArgument if rho0 <= 0.
std::vector<Rational> solve_parallel_links_exact(const std::vector<Rational>& slopes);
std::vector<double> solve_parallel_links(const std::vector<double>& slopes, double rho0 = 1.0);

struct Example3Solution {
  Rational lambda1, lambda2, lambda23, lambda24;
  /// Masses at p1, p2, p3, p4 per unit initial mass.
  std::vector<Rational> distribution;
  Rational path_cost;
};

Example3Solution solve_example3();

/// Per-path costs for per-leaf masses `flows` (sum rho0), unit of cost.
std::vector<double> fixed_path_costs(const FixedSwitchInstance& inst, const std::vector<double>& flows);

struct FixedCertificate {
  bool certified = false;
  std::vector<double> path_costs;
  /// Paths attaining the minimum cost, which generate the extremal distributions.
  std::vector<int> optimal_paths;
  std::string message;
};

/// Accepts leaf flows whose positive entries all sit on minimum-cost paths.
FixedCertificate certify_fixed(const FixedSwitchInstance& inst, const std::vector<double>& flows, double tol = 1e-9);

struct FixedPlayOptions {
  int max_iter = 10000;
  /// Constant step; 0 selects 1/(k+1).
  double eta = 0.0;
  double tol = 1e-6;
  /// Paths with flow at or below this fraction are off the trial support.
  double support_floor = 1e-3;
};

struct FixedPlayReport {
  bool certified = false;
  int iterations = 0;
  std::vector<double> flows;
  /// Shares per node as in FixedSolution.
  std::vector<double> shares;
  std::vector<double> trace;
  std::string message;
};

/// Fictitious play on leaf flows starting from per-node shares `start`.
/// Every iteration equalizes costs exactly on the current support and
/// accepts the result if no unused path is cheaper.
FixedPlayReport fixed_fictitious_play(const FixedSwitchInstance& inst, const std::vector<double>& start,
                                      double rho0 = 1.0, const FixedPlayOptions& opts = {});

struct MonotonicityReport {
  std::string form;  // "parallel" or "tree"
  int samples = 0;
  /// Smallest observed left-hand side per inequality.
  std::vector<double> min_values;
  std::vector<int> violations;
  /// Samples where a single link's term vanished although its coefficient moved.
  int strictness_violations = 0;
  std::vector<std::string> messages;

  bool passed() const;
};

/// Samples distinct pairs of convex coefficient tuples and evaluates the
/// monotonicity sum for parallel links, or the two branch inequalities for
/// the two-level tree of example_tree().
MonotonicityReport check_monotonicity(const FixedSwitchInstance& inst, int trials,
                                      const std::vector<double>& rho0_samples, std::uint64_t seed = 1);

}  // namespace mfg
