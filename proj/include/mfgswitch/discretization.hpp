#pragma once

// The uniform partition {0, eps, ..., T} with eps = T/m, the rounding map F
// onto it, and the eps-optimal switching map built on a ValueTable.

#include <vector>

#include "mfgswitch/network.hpp"
#include "mfgswitch/value_solver.hpp"

namespace mfg {

class EpsPartition {
 public:
  /// eps = T/m; the value grid refines each cell into grid_divisor steps.
  EpsPartition(double horizon, int m, int grid_divisor = 1);

  double horizon() const noexcept { return horizon_; }
  int m() const noexcept { return m_; }
  int grid_divisor() const noexcept { return divisor_; }
  double epsilon() const noexcept { return horizon_ / m_; }
  /// k * eps, computed as T * k / m so that node(m) == T.
  double node(int k) const noexcept { return horizon_ * k / m_; }
  /// Grid with m * grid_divisor steps on which node k is index k * grid_divisor.
  TimeGrid value_grid() const { return TimeGrid(horizon_, m_ * divisor_); }
  /// Partition index of t if t is a node, otherwise -1.
  int index_of(double t) const noexcept;

 private:
  double horizon_;
  int m_;
  int divisor_;
};

/// F(tau): the nearest partition node, both neighbours at the exact midpoint.
/// Times within 1e-12 T of a node or midpoint are treated as equal to it.
std::vector<double> round_instant(double tau, const EpsPartition& part);

/// F on a value-grid index, in exact integer arithmetic. Returns partition
/// indices in increasing order.
std::vector<int> round_grid_index(int j, const EpsPartition& part);

struct EpsPair {
  Node successor;
  /// Partition index of the rounded instant.
  int node_index = 0;
  double tau = 0.0;
  /// The optimal instant that was rounded (lower end for interval optima).
  double source_tau = 0.0;
  /// Rounding landed at or before the decision instant and was moved to the
  /// next partition node.
  bool bumped = false;
};

/// P_eps(p, s) for s = node(k): every optimal pair rounded by F, plus every
/// partition node spanned by a run of tied adjacent grid instants for one
/// successor. Ordered by successor id then instant. Throws BoundaryQuery.
std::vector<EpsPair> eps_argmin_map(const ValueTable& table, const EpsPartition& part, const Node& p, int k);

}  // namespace mfg
