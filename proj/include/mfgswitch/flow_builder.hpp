#pragma once

// Mass evolutions generated by eps-optimal paths: extremal fields, their
// per-decision-node convex combinations, and recovery of the coefficients
// from a candidate field.

#include <cstddef>
#include <string>
#include <vector>

#include "mfgswitch/discretization.hpp"
#include "mfgswitch/mass_profile.hpp"
#include "mfgswitch/network.hpp"
#include "mfgswitch/value_solver.hpp"

namespace mfg {

inline constexpr std::size_t kDefaultMaxPaths = 100000;

/// Nodes p_0..p_r with partition indices k_0 = 0 < k_1 < ... < k_r.
struct EpsPath {
  std::vector<Node> nodes;
  std::vector<int> node_indices;
  std::vector<double> instants;

  int switches() const { return static_cast<int>(nodes.size()) - 1; }
};

/// Agents sitting at `node` from partition instant k decide where to go next.
struct DecisionState {
  Node node;
  int k = 0;

  friend bool operator==(const DecisionState& a, const DecisionState& b) { return a.node == b.node && a.k == b.k; }
  friend bool operator<(const DecisionState& a, const DecisionState& b) {
    return a.k != b.k ? a.k < b.k : a.node.id() < b.node.id();
  }
};

struct PlanTarget {
  Node successor;
  int k = 0;
  double tau = 0.0;
  double lambda = 0.0;
};

struct PlanEntry {
  DecisionState state;
  double t = 0.0;
  std::vector<PlanTarget> targets;
  /// No mass reaches this node, so its coefficients are unconstrained.
  bool free = false;
};

/// Convex coefficients per decision node, ordered by (k, node id).
struct DecisionPlan {
  std::vector<PlanEntry> entries;

  const PlanEntry* find(const DecisionState& s) const;
};

/// The decision states reachable from the initial distribution through
/// P_eps, in time order, with their eps-optimal targets.
struct FlowGraph {
  int num_targets = 0;
  EpsPartition partition{1.0, 1};
  std::vector<double> initial;  // per node, quantized
  double total = 0.0;
  std::vector<PlanEntry> states;
};

/// Depth-first expansion from decision time 0 for every node with positive
/// initial mass. Throws PathExplosion beyond max_paths.
std::vector<EpsPath> enumerate_eps_paths(const ValueTable& table, const EpsPartition& part,
                                         const MassField& initial, std::size_t max_paths = kDefaultMaxPaths);

FlowGraph build_flow_graph(const ValueTable& table, const EpsPartition& part, const MassField& initial);

/// Equal coefficients over every eps-optimal pair at every decision node.
DecisionPlan uniform_plan(const FlowGraph& graph);

/// The field obtained when all of `mass` follows `path`.
MassField extremal_evolution(const EpsPath& path, double mass, const EpsPartition& part);

/// The convexified field: each node carries the sum over path prefixes of
/// the products of coefficients times the starting mass. Splits are rounded
/// to a binary quantum of the total mass so that conservation holds exactly.
/// Throws BadCoefficients for negative coefficients, sums off 1 by more than
/// 1e-12, positive weight on a pair not used by `paths`, or a decision node
/// with mass but no entry.
MassField combine(const DecisionPlan& plan, const std::vector<EpsPath>& paths, const MassField& initial,
                  const EpsPartition& part);

/// Same, with the support checked against the pairs of a flow graph.
MassField combine(const DecisionPlan& plan, const FlowGraph& graph, const MassField& initial);

struct Certificate {
  bool certified = false;
  DecisionPlan plan;
  double l2_residual = 0.0;
  double sup_residual = 0.0;
  /// For a refusal: the first decision node whose recovered flow does not
  /// reproduce the candidate, and the local defect.
  DecisionState first_inconsistent{};
  double local_residual = 0.0;
  std::string message;
};

/// Recovers edge masses by non-negative least squares on the piece values
/// and conservation at every decision node, turns them into coefficients,
/// recombines, and accepts when the L2 and sup residuals are within tol.
Certificate certify_membership(const MassField& candidate, const ValueTable& table, const EpsPartition& part,
                               const MassField& initial, double tol);

}  // namespace mfg
