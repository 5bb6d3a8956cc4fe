#pragma once

// Backward dynamic programming for V(p, t) on a uniform time grid, the
// argmin switching map, and the optimal instants along a fixed node chain
// for the reciprocal-gap cost family.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mfgswitch/cost_model.hpp"
#include "mfgswitch/mass_profile.hpp"
#include "mfgswitch/network.hpp"

namespace mfg {

class TimeGrid {
 public:
  TimeGrid(double horizon, int steps);

  double horizon() const noexcept { return horizon_; }
  int steps() const noexcept { return steps_; }
  double step() const noexcept { return horizon_ / steps_; }
  double time(int i) const noexcept { return horizon_ * i / steps_; }
  /// Index of t if t is exactly a grid point, otherwise -1.
  int index_of(double t) const noexcept;

 private:
  double horizon_;
  int steps_;
};

enum class SolveMode { Grid, Analytic };

struct ArgminPair {
  Node successor;
  double tau = 0.0;
  /// Grid index of tau, or -1 when tau is off the grid (analytic mode).
  int grid_index = -1;
};

struct SolveOptions {
  SolveMode mode = SolveMode::Grid;
  /// Argmin membership: value <= V + tie_rel * (1 + |V|).
  double tie_rel = 1e-9;
  bool check_grid = true;
  /// GridTooCoarse fires when halving the step moves V by more than
  /// grid_check_rel * (1 + |V|) at an under-resolved cell.
  double grid_check_rel = 1e-6;
};

class ValueTable {
 public:
  ValueTable(int num_targets, TimeGrid grid, SolveMode mode, double tie_rel);

  int num_targets() const noexcept { return n_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  SolveMode mode() const noexcept { return mode_; }
  double tie_tolerance(double v) const noexcept { return tie_rel_ * (1.0 + std::abs(v)); }

  double value(std::uint32_t node, int i) const { return values_[cell(node, i)]; }
  double value(const Node& p, int i) const { return value(p.id(), i); }
  /// Minimizing pairs at (p, t_i), ordered by successor id then tau.
  const std::vector<ArgminPair>& argmins(const Node& p, int i) const { return argmins_[cell(p.id(), i)]; }

  /// Smallest tau - t over optimal pairs reachable from t = 0.
  double min_gap() const noexcept { return min_gap_; }
  /// False if some cell has two optimal instants for the same successor.
  bool phi_single_valued() const noexcept { return single_valued_; }

  // Filled by the solver.
  void set_value(std::uint32_t node, int i, double v) { values_[cell(node, i)] = v; }
  void set_argmins(std::uint32_t node, int i, std::vector<ArgminPair> a) { argmins_[cell(node, i)] = std::move(a); }
  void set_min_gap(double gap);
  void finalize();

 private:
  std::size_t cell(std::uint32_t node, int i) const {
    return static_cast<std::size_t>(node) * static_cast<std::size_t>(grid_.steps() + 1) + static_cast<std::size_t>(i);
  }

  int n_;
  TimeGrid grid_;
  SolveMode mode_;
  double tie_rel_;
  std::vector<double> values_;
  std::vector<std::vector<ArgminPair>> argmins_;
  double min_gap_ = std::numeric_limits<double>::infinity();
  bool single_valued_ = true;
};

/// Solves the DP system for an arbitrary cost model (grid mode), or for the
/// reciprocal-gap family with continuous switching instants (analytic mode).
ValueTable solve_value(const CostModel& model, const TimeGrid& grid, const SolveOptions& opts = {});
ValueTable solve_value(const MassField& rho, const CostParams& params, const TimeGrid& grid,
                       const SolveOptions& opts = {});

/// Best value at (p, t_i) among controls whose first switch goes to q.
/// `model` must be the cost the table was solved with.
double successor_value(const ValueTable& table, const CostModel& model, const Node& p, const Node& q, int i);

/// P(p, t_i). Throws BoundaryQuery for the destination or i == steps.
const std::vector<ArgminPair>& argmin_map(const ValueTable& table, const Node& p, int i);

/// Optimal first switching instant on a two-edge chain ending at the
/// destination at T: (sqrt(c_in / c_out) T + t) / (sqrt(c_in / c_out) + 1).
double phi_two_step(double cbar_in, double cbar_out, double t, double horizon);

struct ChainSolution {
  /// Switching instants tau_1 < ... < tau_r = T.
  std::vector<double> instants;
  double value = 0.0;
};

/// Optimal instants along a fixed chain of edges with congestion constants
/// `cbars`, decided at t, last switch at T, plus `terminal`. Each inner
/// minimization is the root of its first-order condition, bracketed and
/// solved by TOMS 748; derivatives of inner values come from the envelope
/// identity W'(s) = c / (phi(s) - s)^2.
ChainSolution solve_chain(std::span<const double> cbars, double t, double horizon, double terminal);

/// The chain problem for a node path ending at the destination.
ChainSolution phi_chain(std::span<const Node> path, const MassField& rho, const CostParams& params, double t);

}  // namespace mfg
