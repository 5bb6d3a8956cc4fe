#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mfgswitch/mass_profile.hpp"
#include "mfgswitch/network.hpp"

namespace mfg {

struct CostParams {
  int num_targets = 1;
  double horizon = 1.0;
  /// Congestion weight a(p), indexed by node id (2^N entries).
  std::vector<double> weights;
  /// Terminal cost at the destination: earliness_rate * (T - t).
  double earliness_rate = 1.0;
  /// Terminal cost at t = T elsewhere: miss_penalty per unvisited target.
  double miss_penalty = 1.0;

  /// Throws ValidationError naming the first violated invariant.
  void validate() const;
};

/// C-bar per admissible edge for one fixed mass field.
class EdgeCongestion {
 public:
  EdgeCongestion(const CostParams& params, const MassField& rho);

  /// a(p)/T * int rho_p + a(q)/T * int rho_q for q a successor of p.
  double cbar(const Node& p, const Node& q) const;
  double node_average(std::uint32_t id) const { return averages_.at(id); }

 private:
  int n_;
  std::vector<double> averages_;  // a(p)/T * int rho_p
};

/// Switching and terminal costs seen by one agent for a fixed mass field.
class CostModel {
 public:
  virtual ~CostModel() = default;
  virtual int num_targets() const = 0;
  virtual double horizon() const = 0;
  virtual double switch_cost(const Node& p, const Node& q, double t, double tau) const = 0;
  virtual double terminal_cost(const Node& p, double t) const = 0;
};

/// C(p, q, t, tau, rho) = C-bar(p, q, rho) / (tau - t) with the two-case
/// terminal cost.
class ReciprocalGapCost final : public CostModel {
 public:
  ReciprocalGapCost(CostParams params, const MassField& rho);

  int num_targets() const override { return params_.num_targets; }
  double horizon() const override { return params_.horizon; }
  double switch_cost(const Node& p, const Node& q, double t, double tau) const override;
  double terminal_cost(const Node& p, double t) const override;

  const CostParams& params() const noexcept { return params_; }
  const EdgeCongestion& congestion() const noexcept { return congestion_; }
  double cbar(const Node& p, const Node& q) const { return congestion_.cbar(p, q); }

 private:
  CostParams params_;
  EdgeCongestion congestion_;
};

double switch_cost(const Node& p, const Node& q, double t, double tau, const MassField& rho,
                   const CostParams& params);

double terminal_cost(const Node& p, double t, const CostParams& params);

using CostFactory = std::function<std::unique_ptr<CostModel>(const MassField&)>;

CostFactory reciprocal_gap_factory(CostParams params);

struct AssumptionReport {
  int samples = 0;
  int monotonicity_violations = 0;
  int blowup_failures = 0;
  int zero_cbar_edges = 0;
  double lipschitz_t_observed = 0.0;
  double lipschitz_t_bound = 0.0;
  double lipschitz_rho_observed = 0.0;
  double lipschitz_rho_bound = 0.0;
  std::vector<std::string> messages;

  bool passed() const {
    return monotonicity_violations == 0 && blowup_failures == 0 && zero_cbar_edges == 0 &&
           lipschitz_t_observed <= lipschitz_t_bound && lipschitz_rho_observed <= lipschitz_rho_bound;
  }
};

/// Randomized spot checks of decrease in tau, blow-up as tau -> t+, and the
/// Lipschitz bounds in t and rho on tau - t >= T/8. The rho bound is the
/// reciprocal-gap one: (a(p) + a(q)) / (sqrt(T) h).
AssumptionReport validate_assumptions(const CostFactory& factory, const CostParams& params,
                                      const MassField& rho, int samples, std::uint64_t seed = 1);

}  // namespace mfg
