#include "mfgswitch/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mfgswitch/errors.hpp"

namespace mfg {

void CostParams::validate() const {
  const std::size_t nodes = node_count(num_targets);
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::ValidationError, "T must be positive");
  if (weights.size() != nodes) throw Error(ErrorCode::ValidationError, "weights must have 2^N entries");
  for (double a : weights) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw Error(ErrorCode::ValidationError, "weights must be >= 0");
  }
  for (std::uint32_t id = 0; id < nodes; ++id) {
    const Node p(num_targets, id);
    for (const Node& q : successors(p)) {
      if (weights[p.id()] <= 0.0 && weights[q.id()] <= 0.0) {
        throw Error(ErrorCode::ValidationError,
                    "weights: edge " + p.bits() + "->" + q.bits() + " has no positive weight");
      }
    }
  }
  if (!(earliness_rate > 0.0) || !std::isfinite(earliness_rate)) {
    throw Error(ErrorCode::ValidationError, "earliness_rate must be > 0 (strictly decreasing earliness cost)");
  }
  if (!(miss_penalty >= 0.0) || !std::isfinite(miss_penalty)) {
    throw Error(ErrorCode::ValidationError, "miss_penalty must be >= 0");
  }
}

EdgeCongestion::EdgeCongestion(const CostParams& params, const MassField& rho) : n_(params.num_targets) {
  if (rho.size() != params.weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "mass field and weights over different networks");
  }
  if (rho.horizon() != params.horizon) throw Error(ErrorCode::DimensionMismatch, "mass field horizon differs from T");
  averages_.resize(rho.size());
  for (std::size_t k = 0; k < rho.size(); ++k) {
    averages_[k] = params.weights[k] / params.horizon * time_integral(rho[k]);
  }
}

double EdgeCongestion::cbar(const Node& p, const Node& q) const {
  if (!is_successor(p, q)) throw Error(ErrorCode::NotAdmissible, p.bits() + "->" + q.bits() + " is not a switch");
  return averages_[p.id()] + averages_[q.id()];
}

ReciprocalGapCost::ReciprocalGapCost(CostParams params, const MassField& rho)
    : params_(std::move(params)), congestion_(params_, rho) {}

double ReciprocalGapCost::switch_cost(const Node& p, const Node& q, double t, double tau) const {
  const double c = congestion_.cbar(p, q);
  if (!(tau > t) || t < 0.0 || tau > params_.horizon) {
    throw Error(ErrorCode::BadTimes, "need 0 <= t < tau <= T");
  }
  return c / (tau - t);
}

double ReciprocalGapCost::terminal_cost(const Node& p, double t) const {
  return mfg::terminal_cost(p, t, params_);
}

double switch_cost(const Node& p, const Node& q, double t, double tau, const MassField& rho,
                   const CostParams& params) {
  return ReciprocalGapCost(params, rho).switch_cost(p, q, t, tau);
}

double terminal_cost(const Node& p, double t, const CostParams& params) {
  const double T = params.horizon;
  if (p.is_destination()) {
    if (t < 0.0 || t > T) throw Error(ErrorCode::InvalidTerminalState, "time outside [0, T]");
    return params.earliness_rate * (T - t);
  }
  if (t != T) throw Error(ErrorCode::InvalidTerminalState, "only the destination may stop before T");
  return params.miss_penalty * static_cast<double>(p.num_targets() - p.ones_count());
}

CostFactory reciprocal_gap_factory(CostParams params) {
  return [params = std::move(params)](const MassField& rho) -> std::unique_ptr<CostModel> {
    return std::make_unique<ReciprocalGapCost>(params, rho);
  };
}

namespace {

MassField random_field(const MassField& like, std::mt19937_64& rng) {
  // Random mixture of "stay" and "leave at a random time" per node, same total.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double T = like.horizon();
  std::vector<StepProfile> profiles;
  for (std::size_t k = 0; k < like.size(); ++k) {
    const double cut = T * (0.05 + 0.9 * u(rng));
    const double a = like.total_mass() * u(rng);
    const double b = like.total_mass() * u(rng);
    profiles.emplace_back(std::vector<double>{0.0, cut, T}, std::vector<double>{a, b}, b);
  }
  return MassField(std::move(profiles), like.total_mass());
}

}  // namespace

AssumptionReport validate_assumptions(const CostFactory& factory, const CostParams& params,
                                      const MassField& rho, int samples, std::uint64_t seed) {
  params.validate();
  AssumptionReport rep;
  rep.samples = samples;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int N = params.num_targets;
  const double T = params.horizon;
  const double h = T / 8.0;
  const auto model = factory(rho);

  std::vector<std::pair<Node, Node>> edges;
  double max_weight_sum = 0.0;
  for (std::uint32_t id = 0; id < params.weights.size(); ++id) {
    const Node p(N, id);
    for (const Node& q : successors(p)) {
      edges.emplace_back(p, q);
      max_weight_sum = std::max(max_weight_sum, params.weights[p.id()] + params.weights[q.id()]);
    }
  }
  rep.lipschitz_t_bound = max_weight_sum * rho.total_mass() / (h * h);
  rep.lipschitz_rho_bound = max_weight_sum / (std::sqrt(T) * h);

  EdgeCongestion cong(params, rho);
  for (const auto& [p, q] : edges) {
    if (cong.cbar(p, q) <= 0.0) {
      ++rep.zero_cbar_edges;
      rep.messages.push_back("C-bar is zero on " + p.bits() + "->" + q.bits() + ": no blow-up as tau -> t");
    }
  }

  std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
  for (int s = 0; s < samples; ++s) {
    const auto& [p, q] = edges[pick(rng)];
    const double t = (T - h) * u(rng);
    double tau1 = t + (T - t) * (0.01 + 0.98 * u(rng));
    double tau2 = t + (T - t) * (0.01 + 0.98 * u(rng));
    if (tau1 > tau2) std::swap(tau1, tau2);
    if (tau1 < tau2 && !(model->switch_cost(p, q, t, tau1) > model->switch_cost(p, q, t, tau2))) {
      if (rep.monotonicity_violations++ == 0) {
        rep.messages.push_back("cost not decreasing in tau on " + p.bits() + "->" + q.bits());
      }
    }

    const double near = model->switch_cost(p, q, t, t + 1e-6 * T);
    const double mid = model->switch_cost(p, q, t, t + 0.5 * (T - t));
    if (!(near > 100.0 * mid) || !(near > 0.0)) {
      if (rep.blowup_failures++ == 0) {
        rep.messages.push_back("no blow-up as tau -> t+ on " + p.bits() + "->" + q.bits());
      }
    }

    // Lipschitz in t with tau fixed, both decision times at least h before tau.
    const double tau = h + (T - h) * u(rng);
    const double t1 = (tau - h) * u(rng);
    const double t2 = (tau - h) * u(rng);
    if (t1 != t2) {
      const double ratio = std::abs(model->switch_cost(p, q, t1, tau) - model->switch_cost(p, q, t2, tau)) /
                           std::abs(t1 - t2);
      rep.lipschitz_t_observed = std::max(rep.lipschitz_t_observed, ratio);
    }
  }

  for (int s = 0; s < std::max(1, samples / 10); ++s) {
    const MassField other = random_field(rho, rng);
    const double d = field_l2_distance(rho, other);
    if (d <= 0.0) continue;
    const auto other_model = factory(other);
    const auto& [p, q] = edges[pick(rng)];
    const double tau = h + (T - h) * u(rng);
    const double t = (tau - h) * u(rng);
    const double ratio = std::abs(model->switch_cost(p, q, t, tau) - other_model->switch_cost(p, q, t, tau)) / d;
    rep.lipschitz_rho_observed = std::max(rep.lipschitz_rho_observed, ratio);
  }
  if (rep.lipschitz_t_observed > rep.lipschitz_t_bound) rep.messages.push_back("Lipschitz bound in t exceeded");
  if (rep.lipschitz_rho_observed > rep.lipschitz_rho_bound) rep.messages.push_back("Lipschitz bound in rho exceeded");
  return rep;
}

}  // namespace mfg
