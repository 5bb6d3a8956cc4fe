#include "mfgswitch/value_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "mfgswitch/errors.hpp"

namespace mfg {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::InvalidArgument, "T must be positive");
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "a time grid needs at least one step");
}

int TimeGrid::index_of(double t) const noexcept {
  if (t < 0.0 || t > horizon_) return -1;
  const double k = std::nearbyint(t / horizon_ * steps_);
  const int i = static_cast<int>(k);
  return time(i) == t ? i : -1;
}

ValueTable::ValueTable(int num_targets, TimeGrid grid, SolveMode mode, double tie_rel)
    : n_(num_targets),
      grid_(grid),
      mode_(mode),
      tie_rel_(tie_rel),
      values_(node_count(num_targets) * static_cast<std::size_t>(grid.steps() + 1), 0.0),
      argmins_(values_.size()) {}

void ValueTable::set_min_gap(double gap) { min_gap_ = gap; }

void ValueTable::finalize() {
  const std::size_t nodes = node_count(n_);
  const int steps = grid_.steps();
  single_valued_ = true;
  for (std::size_t c = 0; c < argmins_.size(); ++c) {
    const auto& a = argmins_[c];
    for (std::size_t k = 1; k < a.size(); ++k) {
      if (a[k].successor == a[k - 1].successor) single_valued_ = false;
    }
  }
  if (mode_ != SolveMode::Grid) return;

  // Cells reached from t = 0 by following optimal pairs.
  std::vector<char> seen(values_.size(), 0);
  std::vector<std::pair<std::uint32_t, int>> stack;
  for (std::uint32_t id = 0; id < nodes; ++id) {
    if (!Node(n_, id).is_destination()) stack.emplace_back(id, 0);
  }
  min_gap_ = std::numeric_limits<double>::infinity();
  while (!stack.empty()) {
    const auto [id, i] = stack.back();
    stack.pop_back();
    const Node p(n_, id);
    if (p.is_destination() || i >= steps || seen[cell(id, i)]) continue;
    seen[cell(id, i)] = 1;
    for (const auto& pair : argmins_[cell(id, i)]) {
      min_gap_ = std::min(min_gap_, pair.tau - grid_.time(i));
      stack.emplace_back(pair.successor.id(), pair.grid_index);
    }
  }
}

namespace {

void require_decision_cell(const Node& p, int i, const TimeGrid& grid) {
  if (p.is_destination()) throw Error(ErrorCode::BoundaryQuery, "no decision at the destination");
  if (i >= grid.steps()) throw Error(ErrorCode::BoundaryQuery, "no decision at t = T");
  if (i < 0) throw Error(ErrorCode::OutOfRange, "time not on the grid");
}

std::vector<std::uint32_t> nodes_backward(int N) {
  std::vector<std::uint32_t> order(node_count(N));
  for (std::uint32_t id = 0; id < order.size(); ++id) order[id] = id;
  std::stable_sort(order.begin(), order.end(), [N](std::uint32_t a, std::uint32_t b) {
    return Node(N, a).ones_count() > Node(N, b).ones_count();
  });
  return order;
}

void fill_boundaries(ValueTable& table, const CostModel& model) {
  const int N = model.num_targets();
  const auto& grid = table.grid();
  for (std::uint32_t id = 0; id < node_count(N); ++id) {
    const Node p(N, id);
    if (p.is_destination()) {
      for (int i = 0; i <= grid.steps(); ++i) table.set_value(id, i, model.terminal_cost(p, grid.time(i)));
    } else {
      table.set_value(id, grid.steps(), model.terminal_cost(p, grid.horizon()));
    }
  }
}

ValueTable solve_grid(const CostModel& model, const TimeGrid& grid, double tie_rel) {
  const int N = model.num_targets();
  const int n = grid.steps();
  ValueTable table(N, grid, SolveMode::Grid, tie_rel);
  fill_boundaries(table, model);
  std::vector<double> scan;
  for (std::uint32_t id : nodes_backward(N)) {
    const Node p(N, id);
    if (p.is_destination()) continue;
    const auto succ = successors(p);
    for (int i = n - 1; i >= 0; --i) {
      const double t = grid.time(i);
      scan.assign(succ.size() * static_cast<std::size_t>(n - i), 0.0);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < succ.size(); ++s) {
        for (int j = i + 1; j <= n; ++j) {
          const double v = table.value(succ[s], j) + model.switch_cost(p, succ[s], t, grid.time(j));
          scan[s * static_cast<std::size_t>(n - i) + static_cast<std::size_t>(j - i - 1)] = v;
          best = std::min(best, v);
        }
      }
      const double cut = best + table.tie_tolerance(best);
      std::vector<ArgminPair> pairs;
      for (std::size_t s = 0; s < succ.size(); ++s) {
        for (int j = i + 1; j <= n; ++j) {
          if (scan[s * static_cast<std::size_t>(n - i) + static_cast<std::size_t>(j - i - 1)] <= cut) {
            pairs.push_back({succ[s], grid.time(j), j});
          }
        }
      }
      table.set_value(id, i, best);
      table.set_argmins(id, i, std::move(pairs));
    }
  }
  table.finalize();
  return table;
}

void check_resolution(const ValueTable& coarse, const CostModel& model, double tie_rel, double rel) {
  const int N = coarse.num_targets();
  const auto& grid = coarse.grid();
  const int n = grid.steps();
  // Cells reached from t = 0 whose optimum sits one step ahead.
  std::vector<std::pair<std::uint32_t, int>> flagged;
  std::vector<char> seen(node_count(N) * static_cast<std::size_t>(n + 1), 0);
  std::vector<std::pair<std::uint32_t, int>> stack;
  for (std::uint32_t id = 0; id < node_count(N); ++id) stack.emplace_back(id, 0);
  while (!stack.empty()) {
    const auto [id, i] = stack.back();
    stack.pop_back();
    const Node p(N, id);
    if (p.is_destination() || i >= n) continue;
    auto& mark = seen[static_cast<std::size_t>(id) * static_cast<std::size_t>(n + 1) + static_cast<std::size_t>(i)];
    if (mark) continue;
    mark = 1;
    bool tight = false;
    for (const auto& pair : coarse.argmins(p, i)) {
      if (pair.grid_index == i + 1 && i + 1 < n) tight = true;
      stack.emplace_back(pair.successor.id(), pair.grid_index);
    }
    if (tight) flagged.emplace_back(id, i);
  }
  if (flagged.empty()) return;
  const ValueTable fine = solve_grid(model, TimeGrid(grid.horizon(), 2 * n), tie_rel);
  for (const auto& [id, i] : flagged) {
    const double a = coarse.value(id, i);
    const double b = fine.value(id, 2 * i);
    if (std::abs(a - b) > rel * (1.0 + std::abs(a))) {
      throw Error(ErrorCode::GridTooCoarse,
                  "optimum at the first grid point for node " + Node(N, id).bits() + " at t = " +
                      std::to_string(grid.time(i)) + "; halving the step changes V by " +
                      std::to_string(std::abs(a - b)));
    }
  }
}

// Successor chains of length >= 1 starting at p, as prefixes of paths to the
// destination, without duplicates.
std::vector<std::vector<Node>> chains_from(const Node& p) {
  std::vector<std::vector<Node>> out;
  std::vector<Node> cur{p};
  const std::function<void()> dfs = [&] {
    if (cur.size() >= 2) out.push_back(cur);
    if (out.size() > 100000) throw Error(ErrorCode::PathExplosion, "too many node chains for analytic mode");
    for (const Node& q : successors(cur.back())) {
      cur.push_back(q);
      dfs();
      cur.pop_back();
    }
  };
  dfs();
  return out;
}

ValueTable solve_analytic(const ReciprocalGapCost& model, const TimeGrid& grid, double tie_rel) {
  const int N = model.num_targets();
  const int n = grid.steps();
  const double T = grid.horizon();
  ValueTable table(N, grid, SolveMode::Analytic, tie_rel);
  fill_boundaries(table, model);
  double gap = std::numeric_limits<double>::infinity();
  for (std::uint32_t id = 0; id < node_count(N); ++id) {
    const Node p(N, id);
    if (p.is_destination()) continue;
    const auto chains = chains_from(p);
    std::vector<std::vector<double>> cbars;
    std::vector<double> terminals;
    for (const auto& c : chains) {
      std::vector<double> cb;
      for (std::size_t k = 0; k + 1 < c.size(); ++k) cb.push_back(model.cbar(c[k], c[k + 1]));
      cbars.push_back(std::move(cb));
      terminals.push_back(model.terminal_cost(c.back(), T));
    }
    for (int i = 0; i < n; ++i) {
      const double t = grid.time(i);
      std::vector<ChainSolution> sols;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < chains.size(); ++c) {
        sols.push_back(solve_chain(cbars[c], t, T, terminals[c]));
        best = std::min(best, sols.back().value);
      }
      const double cut = best + table.tie_tolerance(best);
      std::vector<ArgminPair> pairs;
      for (std::size_t c = 0; c < chains.size(); ++c) {
        if (sols[c].value > cut) continue;
        const double tau = sols[c].instants.front();
        const bool dup = std::any_of(pairs.begin(), pairs.end(), [&](const ArgminPair& a) {
          return a.successor == chains[c][1] && std::abs(a.tau - tau) <= 1e-12 * T;
        });
        if (!dup) pairs.push_back({chains[c][1], tau, grid.index_of(tau)});
        if (i == 0) {
          double prev = t;
          for (double x : sols[c].instants) {
            gap = std::min(gap, x - prev);
            prev = x;
          }
        }
      }
      std::sort(pairs.begin(), pairs.end(), [](const ArgminPair& a, const ArgminPair& b) {
        return a.successor.id() != b.successor.id() ? a.successor.id() < b.successor.id() : a.tau < b.tau;
      });
      table.set_value(id, i, best);
      table.set_argmins(id, i, std::move(pairs));
    }
  }
  table.finalize();
  table.set_min_gap(gap);
  return table;
}

}  // namespace

ValueTable solve_value(const CostModel& model, const TimeGrid& grid, const SolveOptions& opts) {
  if (model.horizon() != grid.horizon()) throw Error(ErrorCode::DimensionMismatch, "grid horizon differs from T");
  if (opts.mode == SolveMode::Analytic) {
    const auto* rg = dynamic_cast<const ReciprocalGapCost*>(&model);
    if (rg == nullptr) throw Error(ErrorCode::InvalidArgument, "analytic mode needs the reciprocal-gap cost");
    return solve_analytic(*rg, grid, opts.tie_rel);
  }
  ValueTable table = solve_grid(model, grid, opts.tie_rel);
  if (opts.check_grid) check_resolution(table, model, opts.tie_rel, opts.grid_check_rel);
  return table;
}

ValueTable solve_value(const MassField& rho, const CostParams& params, const TimeGrid& grid,
                       const SolveOptions& opts) {
  params.validate();
  return solve_value(ReciprocalGapCost(params, rho), grid, opts);
}

const std::vector<ArgminPair>& argmin_map(const ValueTable& table, const Node& p, int i) {
  require_decision_cell(p, i, table.grid());
  return table.argmins(p, i);
}

double successor_value(const ValueTable& table, const CostModel& model, const Node& p, const Node& q, int i) {
  require_decision_cell(p, i, table.grid());
  if (!is_successor(p, q)) throw Error(ErrorCode::NotAdmissible, p.bits() + "->" + q.bits() + " is not a switch");
  const auto& grid = table.grid();
  const double t = grid.time(i);
  double best = std::numeric_limits<double>::infinity();
  if (table.mode() == SolveMode::Grid) {
    for (int j = i + 1; j <= grid.steps(); ++j) {
      best = std::min(best, table.value(q, j) + model.switch_cost(p, q, t, grid.time(j)));
    }
    return best;
  }
  const auto* rg = dynamic_cast<const ReciprocalGapCost*>(&model);
  if (rg == nullptr) throw Error(ErrorCode::InvalidArgument, "analytic mode needs the reciprocal-gap cost");
  for (const auto& chain : chains_from(p)) {
    if (!(chain[1] == q)) continue;
    std::vector<double> cb;
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) cb.push_back(rg->cbar(chain[k], chain[k + 1]));
    best = std::min(best, solve_chain(cb, t, grid.horizon(), rg->terminal_cost(chain.back(), grid.horizon())).value);
  }
  return best;
}

double phi_two_step(double cbar_in, double cbar_out, double t, double horizon) {
  if (!(cbar_in > 0.0) || !(cbar_out > 0.0)) throw Error(ErrorCode::DegenerateCost, "C-bar must be positive");
  if (!(t < horizon)) throw Error(ErrorCode::BadTimes, "need t < T");
  const double r = std::sqrt(cbar_in / cbar_out);
  return (r * horizon + t) / (r + 1.0);
}

namespace {

class ChainFoc {
 public:
  ChainFoc(std::span<const double> c, double T) : c_(c), T_(T) {}

  // Optimal next instant for edge k decided at s.
  double phi(std::size_t k, double s) const {
    if (k + 1 == c_.size()) return T_;
    const double span = T_ - s;
    const auto g = [&](double tau) { return slope(k + 1, tau) - c_[k] / ((tau - s) * (tau - s)); };
    // Walk the bracket ends geometrically toward s and T until the sign
    // change is visible with finite values.
    double lo = s + 0.5 * span;
    double glo = g(lo);
    for (int j = 2; !(glo < 0.0) && j < 60; ++j) glo = g(lo = s + std::ldexp(span, -j));
    double hi = s + 0.5 * span;
    double ghi = glo < 0.0 && lo == hi ? glo : g(hi);
    for (int j = 2; !(ghi > 0.0 && std::isfinite(ghi)) && j < 60; ++j) {
      const double next = T_ - std::ldexp(span, -j);
      if (!(next > hi) || !(next < T_)) break;
      ghi = g(hi = next);
    }
    if (!(glo < 0.0) || !(ghi > 0.0) || !std::isfinite(ghi)) {
      throw Error(ErrorCode::NonConvergence, "first-order condition is not a sign change");
    }
    std::uintmax_t iters = 500;
    const auto r = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi,
                                                     boost::math::tools::eps_tolerance<double>(52), iters);
    if (r.second - r.first > 1e-9 * span) throw Error(ErrorCode::NonConvergence, "root finding did not converge");
    return 0.5 * (r.first + r.second);
  }

  // Derivative of the inner value of edges k.. at decision time s.
  double slope(std::size_t k, double s) const {
    const double gap = phi(k, s) - s;
    if (!(gap > 0.0)) return std::numeric_limits<double>::infinity();
    return c_[k] / (gap * gap);
  }

 private:
  std::span<const double> c_;
  double T_;
};

}  // namespace

ChainSolution solve_chain(std::span<const double> cbars, double t, double horizon, double terminal) {
  if (cbars.empty()) throw Error(ErrorCode::NotAPath, "a chain needs at least one edge");
  for (double c : cbars) {
    if (!(c > 0.0)) throw Error(ErrorCode::DegenerateCost, "C-bar must be positive along the chain");
  }
  if (!(t >= 0.0 && t < horizon)) throw Error(ErrorCode::BadTimes, "need 0 <= t < T");
  const ChainFoc foc(cbars, horizon);
  ChainSolution sol;
  double s = t;
  sol.value = terminal;
  for (std::size_t k = 0; k < cbars.size(); ++k) {
    const double tau = foc.phi(k, s);
    sol.value += cbars[k] / (tau - s);
    sol.instants.push_back(tau);
    s = tau;
  }
  return sol;
}

ChainSolution phi_chain(std::span<const Node> path, const MassField& rho, const CostParams& params, double t) {
  if (path.size() < 2) throw Error(ErrorCode::NotAPath, "a path needs at least two nodes");
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    if (!is_successor(path[k], path[k + 1])) throw Error(ErrorCode::NotAPath, "consecutive nodes are not a switch");
  }
  if (!path.back().is_destination()) throw Error(ErrorCode::NotAPath, "path must end at the destination");
  params.validate();
  const EdgeCongestion cong(params, rho);
  std::vector<double> cb;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) cb.push_back(cong.cbar(path[k], path[k + 1]));
  return solve_chain(cb, t, params.horizon, terminal_cost(path.back(), params.horizon, params));
}

}  // namespace mfg
