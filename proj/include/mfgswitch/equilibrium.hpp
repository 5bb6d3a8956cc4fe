#pragma once

#include <string>
#include <vector>

#include "mfgswitch/cost_model.hpp"
#include "mfgswitch/discretization.hpp"
#include "mfgswitch/fixed_instant.hpp"
#include "mfgswitch/flow_builder.hpp"
#include "mfgswitch/mass_profile.hpp"
#include "mfgswitch/value_solver.hpp"

namespace mfg {

struct EquilibriumOptions {
  double tol = 1e-6;
  int max_iter = 10000;
  /// Constant damping; 0 selects 1/(k+2) at iteration k.
  double eta = 0.0;
  SolveOptions solve{};
  /// Try to equalize branch values on the current support each iteration.
  bool polish = true;
  int polish_rounds = 4;
};

struct EquilibriumReport {
  MassField rho;
  bool certified = false;
  /// Reconstruction residual of the certificate when certified, otherwise
  /// the L2 distance between the last iterate and its best response.
  double residual = 0.0;
  int iterations = 0;
  /// L2 distance between iterate k and its best response.
  std::vector<double> trace;
  double min_gap = 0.0;
  bool phi_single_valued = true;
  DecisionPlan plan;
  std::string message;
};

/// Damped best-response iteration on mass fields: the best response is the
/// uniform combination over the eps-optimal pairs of the value table solved
/// for the current iterate.
EquilibriumReport find_equilibrium(const CostParams& params, const MassField& initial, const EpsPartition& part,
                                   const EquilibriumOptions& opts = {});

struct RefinementReport {
  std::vector<int> m;
  std::vector<EquilibriumReport> reports;
  /// L2 distance between consecutive equilibria.
  std::vector<double> distances;
  std::vector<std::size_t> piece_counts;
  std::vector<bool> single_valued;

  bool all_certified() const;
  bool distances_decreasing() const;
};

/// One equilibrium per eps = T/m on a common value grid of `grid_steps`
/// points, which every m must divide.
RefinementReport refine_epsilon(const CostParams& params, const MassField& initial, const std::vector<int>& m_sequence,
                                int grid_steps, const EquilibriumOptions& opts = {});

}  // namespace mfg
