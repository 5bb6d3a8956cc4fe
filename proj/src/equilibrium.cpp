#include "mfgswitch/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include <Eigen/Dense>

#include "mfgswitch/errors.hpp"

namespace mfg {

namespace {

struct Group {
  Node successor;
  std::vector<std::size_t> targets;
  std::vector<double> within;
};

struct SplitState {
  std::size_t entry = 0;
  std::vector<Group> groups;
  std::vector<std::size_t> active;
};

// Coefficients on a fixed flow graph parametrized by the branch shares of
// every decision node with more than one successor.
class BranchShares {
 public:
  BranchShares(const FlowGraph& graph, const DecisionPlan& start) : graph_(graph), plan_(start) {
    for (std::size_t e = 0; e < plan_.entries.size(); ++e) {
      auto& entry = plan_.entries[e];
      SplitState st;
      st.entry = e;
      for (std::size_t t = 0; t < entry.targets.size(); ++t) {
        auto it = std::find_if(st.groups.begin(), st.groups.end(),
                               [&](const Group& g) { return g.successor == entry.targets[t].successor; });
        if (it == st.groups.end()) {
          st.groups.push_back({entry.targets[t].successor, {}, {}});
          it = st.groups.end() - 1;
        }
        it->targets.push_back(t);
      }
      for (auto& g : st.groups) {
        double sum = 0.0;
        for (std::size_t t : g.targets) sum += entry.targets[t].lambda;
        for (std::size_t t : g.targets) {
          g.within.push_back(sum > 0.0 ? entry.targets[t].lambda / sum : 1.0 / static_cast<double>(g.targets.size()));
        }
      }
      if (st.groups.size() < 2) {
        for (std::size_t t = 0; t < entry.targets.size(); ++t) entry.targets[t].lambda = st.groups[0].within[t];
        continue;
      }
      for (std::size_t g = 0; g < st.groups.size(); ++g) st.active.push_back(g);
      splits_.push_back(std::move(st));
    }
  }

  std::vector<SplitState>& splits() { return splits_; }

  Eigen::VectorXd shares() const {
    std::vector<double> x;
    for (const auto& st : splits_) {
      const auto& entry = plan_.entries[st.entry];
      for (std::size_t a = 1; a < st.active.size(); ++a) {
        double sum = 0.0;
        for (std::size_t t : st.groups[st.active[a]].targets) sum += entry.targets[t].lambda;
        x.push_back(sum);
      }
    }
    return Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  }

  /// Writes shares into the plan; the first active group takes the rest.
  /// Returns false if some share leaves [0, 1].
  bool apply(const Eigen::VectorXd& x) {
    Eigen::Index pos = 0;
    bool inside = true;
    for (auto& st : splits_) {
      auto& entry = plan_.entries[st.entry];
      for (auto& t : entry.targets) t.lambda = 0.0;
      double rest = 1.0;
      for (std::size_t a = 1; a < st.active.size(); ++a) {
        const double s = x(pos++);
        if (s < 0.0) inside = false;
        rest -= s;
        const auto& g = st.groups[st.active[a]];
        for (std::size_t j = 0; j < g.targets.size(); ++j) entry.targets[g.targets[j]].lambda = std::max(0.0, s) * g.within[j];
      }
      if (rest < 0.0) inside = false;
      const auto& g0 = st.groups[st.active[0]];
      for (std::size_t j = 0; j < g0.targets.size(); ++j) entry.targets[g0.targets[j]].lambda = std::max(0.0, rest) * g0.within[j];
      double sum = 0.0;
      for (const auto& t : entry.targets) sum += t.lambda;
      for (auto& t : entry.targets) t.lambda /= sum;
    }
    return inside;
  }

  const DecisionPlan& plan() const { return plan_; }
  const FlowGraph& graph() const { return graph_; }

 private:
  const FlowGraph& graph_;
  DecisionPlan plan_;
  std::vector<SplitState> splits_;
};

struct Evaluation {
  MassField rho;
  Eigen::VectorXd gaps;
  double scale = 1.0;
};

class Equalizer {
 public:
  Equalizer(const CostParams& params, const MassField& initial, const EpsPartition& part, const SolveOptions& solve)
      : params_(params), initial_(initial), part_(part), solve_(solve) {}

  // Value differences between each active branch and the first one.
  Evaluation evaluate(BranchShares& shares, const Eigen::VectorXd& x) const {
    shares.apply(x);
    Evaluation ev{combine(shares.plan(), shares.graph(), initial_), {}, 1.0};
    const ReciprocalGapCost model(params_, ev.rho);
    const auto table = solve_value(model, part_.value_grid(), no_check());
    std::vector<double> d;
    for (const auto& st : shares.splits()) {
      const auto& state = shares.plan().entries[st.entry].state;
      const int i = state.k * part_.grid_divisor();
      const double q0 = successor_value(table, model, state.node, st.groups[st.active[0]].successor, i);
      ev.scale = std::max(ev.scale, 1.0 + std::abs(q0));
      for (std::size_t a = 1; a < st.active.size(); ++a) {
        d.push_back(successor_value(table, model, state.node, st.groups[st.active[a]].successor, i) - q0);
      }
    }
    ev.gaps = Eigen::Map<Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
    return ev;
  }

  // Newton on the branch shares with a forward-difference Jacobian. A branch
  // pushed below zero share is dropped from the split.
  MassField run(BranchShares& shares) const {
    for (int restart = 0; restart < 32; ++restart) {
      Eigen::VectorXd x = shares.shares();
      Evaluation ev = evaluate(shares, x);
      bool dropped = false;
      for (int it = 0; it < 40 && ev.gaps.size() > 0; ++it) {
        if (ev.gaps.cwiseAbs().maxCoeff() <= 1e-12 * ev.scale) break;
        const Eigen::Index n = x.size();
        Eigen::MatrixXd J(n, n);
        const double h = 1e-7;
        for (Eigen::Index j = 0; j < n; ++j) {
          Eigen::VectorXd xh = x;
          xh(j) += h;
          J.col(j) = (evaluate(shares, xh).gaps - ev.gaps) / h;
        }
        if (drop_inert(shares, J)) {
          dropped = true;
          break;
        }
        const Eigen::VectorXd dx = J.colPivHouseholderQr().solve(-ev.gaps);
        if (!dx.allFinite()) break;
        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 12; ++ls, alpha *= 0.5) {
          const Eigen::VectorXd xn = x + alpha * dx;
          if (!shares.apply(xn)) {
            if (ls == 0 && drop_exhausted(shares, xn)) {
              dropped = true;
              break;
            }
            continue;
          }
          Evaluation en = evaluate(shares, xn);
          if (en.gaps.norm() < ev.gaps.norm()) {
            x = xn;
            ev = std::move(en);
            moved = true;
            break;
          }
        }
        if (dropped || !moved) break;
      }
      if (!dropped) {
        shares.apply(x);
        return ev.rho;
      }
    }
    return evaluate(shares, shares.shares()).rho;
  }

 private:
  SolveOptions no_check() const {
    SolveOptions o = solve_;
    o.check_grid = false;
    return o;
  }

  // Splits that no mass reaches do not move the field; they are left as is.
  static bool drop_inert(BranchShares& shares, const Eigen::MatrixXd& J) {
    Eigen::Index pos = 0;
    bool any = false;
    for (auto& st : shares.splits()) {
      const auto n = static_cast<Eigen::Index>(st.active.size()) - 1;
      if (J.middleCols(pos, n).cwiseAbs().maxCoeff() == 0.0) {
        st.active.resize(1);
        any = true;
      }
      pos += n;
    }
    std::erase_if(shares.splits(), [](const SplitState& st) { return st.active.size() < 2; });
    return any;
  }

  // Removes from each split the branch whose share the full step drives
  // most negative. Returns true if a branch was removed.
  static bool drop_exhausted(BranchShares& shares, const Eigen::VectorXd& x) {
    Eigen::Index pos = 0;
    bool any = false;
    for (auto& st : shares.splits()) {
      double rest = 1.0, worst = 0.0;
      std::size_t drop = st.active.size();
      for (std::size_t a = 1; a < st.active.size(); ++a) {
        const double s = x(pos++);
        rest -= s;
        if (s < worst) worst = s, drop = a;
      }
      if (rest < worst) drop = 0;
      if (drop < st.active.size() && st.active.size() > 1) {
        st.active.erase(st.active.begin() + static_cast<std::ptrdiff_t>(drop));
        any = true;
      }
    }
    std::erase_if(shares.splits(), [](const SplitState& st) { return st.active.size() < 2; });
    return any;
  }

  const CostParams& params_;
  const MassField& initial_;
  const EpsPartition& part_;
  SolveOptions solve_;
};

bool target_less(const PlanTarget& a, const PlanTarget& b) {
  return a.k != b.k ? a.k < b.k : a.successor.id() < b.successor.id();
}

// acc <- (1 - w) acc + w add, target by target; states missing on one side
// count as zero there.
void absorb(DecisionPlan& acc, const DecisionPlan& add, double w) {
  for (auto& e : acc.entries) {
    for (auto& t : e.targets) t.lambda *= 1.0 - w;
  }
  for (const auto& e : add.entries) {
    auto it = std::lower_bound(acc.entries.begin(), acc.entries.end(), e.state,
                               [](const PlanEntry& x, const DecisionState& s) { return x.state < s; });
    if (it == acc.entries.end() || !(it->state == e.state)) {
      PlanEntry fresh = e;
      fresh.targets.clear();
      fresh.free = false;
      it = acc.entries.insert(it, std::move(fresh));
    }
    for (const auto& t : e.targets) {
      auto jt = std::lower_bound(it->targets.begin(), it->targets.end(), t, target_less);
      if (jt == it->targets.end() || !(jt->successor == t.successor && jt->k == t.k)) {
        PlanTarget fresh = t;
        fresh.lambda = 0.0;
        jt = it->targets.insert(jt, fresh);
      }
      jt->lambda += w * t.lambda;
    }
  }
}

ValueTable solve_for(const MassField& rho, const CostParams& params, const EpsPartition& part,
                     const SolveOptions& solve) {
  return solve_value(rho, params, part.value_grid(), solve);
}

bool decides(const Node& p, int k, const EpsPartition& part) { return !p.is_destination() && k < part.m(); }

// Rounded instants of the best switch from (p, k) to q alone.
std::vector<int> best_instants(const ValueTable& table, const CostModel& model, const EpsPartition& part,
                               const Node& p, int k, const Node& q) {
  const auto& grid = table.grid();
  const int i = k * part.grid_divisor();
  std::vector<double> v;
  double best = std::numeric_limits<double>::infinity();
  for (int j = i + 1; j <= grid.steps(); ++j) {
    v.push_back(table.value(q, j) + model.switch_cost(p, q, grid.time(i), grid.time(j)));
    best = std::min(best, v.back());
  }
  std::vector<int> out;
  for (int j = i + 1; j <= grid.steps(); ++j) {
    if (v[static_cast<std::size_t>(j - i - 1)] > best + table.tie_tolerance(best)) continue;
    for (int kk : round_grid_index(j, part)) out.push_back(std::max(kk, k + 1));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

using SuccessorShares = std::map<DecisionState, std::vector<std::pair<Node, double>>>;

SuccessorShares successor_shares(const DecisionPlan& plan, double floor) {
  SuccessorShares out;
  for (const auto& e : plan.entries) {
    std::vector<std::pair<Node, double>> sh;
    double sum = 0.0;
    for (const auto& t : e.targets) {
      auto it = std::find_if(sh.begin(), sh.end(), [&](const auto& x) { return x.first == t.successor; });
      if (it == sh.end()) sh.emplace_back(t.successor, t.lambda);
      else it->second += t.lambda;
      sum += t.lambda;
    }
    if (!(sum > 0.0)) continue;
    std::erase_if(sh, [&](const auto& x) { return !(x.second > floor * sum); });
    double kept = 0.0;
    for (const auto& x : sh) kept += x.second;
    for (auto& x : sh) x.second /= kept;
    out.emplace(e.state, std::move(sh));
  }
  return out;
}

struct Polished {
  MassField rho;
  ValueTable table;
  Certificate cert;
  DecisionPlan plan;
  double defect = 0.0;
};

using Layout = std::map<DecisionState, std::vector<PlanTarget>>;

// Decision states reachable from the initial masses. A state listed in
// `fixed` keeps its targets; otherwise its successors come from `shares`
// (or the eps-optimal pairs) and each one switches at its rounded optimum.
FlowGraph lay_out(const ValueTable& table, const CostModel& model, const EpsPartition& part,
                  const MassField& initial, const SuccessorShares& shares, const Layout& fixed,
                  DecisionPlan& plan) {
  FlowGraph g = build_flow_graph(table, part, initial);
  g.states.clear();
  std::map<DecisionState, PlanEntry> states;
  for (std::uint32_t id = 0; id < g.initial.size(); ++id) {
    const Node p(g.num_targets, id);
    if (g.initial[id] > 0.0 && decides(p, 0, part)) states[{p, 0}];
  }
  for (auto it = states.begin(); it != states.end(); ++it) {
    const DecisionState s = it->first;
    PlanEntry& e = it->second;
    e.state = s;
    e.t = part.node(s.k);
    if (auto f = fixed.find(s); f != fixed.end()) {
      e.targets = f->second;
    } else {
      std::vector<std::pair<Node, double>> succ;
      if (auto f2 = shares.find(s); f2 != shares.end()) {
        succ = f2->second;
      } else {
        for (const auto& pair : eps_argmin_map(table, part, s.node, s.k)) {
          if (std::none_of(succ.begin(), succ.end(), [&](const auto& x) { return x.first == pair.successor; })) {
            succ.emplace_back(pair.successor, 0.0);
          }
        }
        for (auto& x : succ) x.second = 1.0 / static_cast<double>(succ.size());
      }
      for (const auto& [q, share] : succ) {
        const auto ks = best_instants(table, model, part, s.node, s.k, q);
        for (int kq : ks) e.targets.push_back({q, kq, part.node(kq), share / static_cast<double>(ks.size())});
      }
    }
    std::sort(e.targets.begin(), e.targets.end(), target_less);
    for (const auto& t : e.targets) {
      if (decides(t.successor, t.k, part)) states[{t.successor, t.k}];
    }
  }
  plan.entries.clear();
  for (auto& [st, e] : states) {
    g.states.push_back(e);
    plan.entries.push_back(std::move(e));
  }
  return g;
}

// Sum over used targets of the distance between the partition instant and
// the earliest optimal grid instant for that successor.
double rounding_defect(const DecisionPlan& plan, const ValueTable& table, const CostModel& model,
                       const EpsPartition& part) {
  const auto& grid = table.grid();
  double total = 0.0;
  for (const auto& e : plan.entries) {
    const int i = e.state.k * part.grid_divisor();
    for (const auto& t : e.targets) {
      if (!(t.lambda > 0.0)) continue;
      double best = std::numeric_limits<double>::infinity();
      int arg = i + 1;
      for (int j = i + 1; j <= grid.steps(); ++j) {
        const double v = table.value(t.successor, j) + model.switch_cost(e.state.node, t.successor, grid.time(i), grid.time(j));
        if (j == i + 1 || v < best - table.tie_tolerance(best)) best = v, arg = j;
      }
      total += std::abs(part.node(t.k) - grid.time(arg));
    }
  }
  return total;
}

std::optional<Polished> equalize(const CostParams& params, const MassField& initial, const EpsPartition& part,
                                 const EquilibriumOptions& opts, const Equalizer& equalizer, const FlowGraph& g,
                                 const DecisionPlan& plan) {
  BranchShares bs(g, plan);
  MassField cand = equalizer.run(bs);
  ValueTable ctable = solve_for(cand, params, part, opts.solve);
  Certificate cert = certify_membership(cand, ctable, part, initial, opts.tol);
  if (!cert.certified) return std::nullopt;
  const ReciprocalGapCost model(params, cand);
  const double d = rounding_defect(bs.plan(), ctable, model, part);
  return Polished{std::move(cand), std::move(ctable), std::move(cert), bs.plan(), d};
}

// Among certified fields reachable by moving one switch instant by one
// partition step at a time, keeps the one with the smallest rounding defect.
Polished select_nearest(const CostParams& params, const MassField& initial, const EpsPartition& part,
                        const EquilibriumOptions& opts, const Equalizer& equalizer, Polished best) {
  for (int pass = 0; pass < 8; ++pass) {
    bool improved = false;
    for (std::size_t ei = 0; ei < best.plan.entries.size() && !improved; ++ei) {
      const auto& e = best.plan.entries[ei];
      for (std::size_t ti = 0; ti < e.targets.size() && !improved; ++ti) {
        const auto& t = e.targets[ti];
        if (!(t.lambda > 0.0) || t.k >= part.m()) continue;
        for (int variant = 0; variant < 4 && !improved; ++variant) {
          const int d = variant % 2 == 0 ? -1 : 1;
          const bool together = variant >= 2;
          const int kk = t.k + d;
          if (kk <= e.state.k || kk >= part.m()) continue;
          Layout fixed;
          for (const auto& x : best.plan.entries) {
            if (x.state.k <= e.state.k) fixed[x.state] = x.targets;
          }
          for (auto& y : fixed[e.state]) {
            if (&y - fixed[e.state].data() == static_cast<std::ptrdiff_t>(ti) || (together && y.k == t.k)) {
              y.k = kk;
              y.tau = part.node(kk);
            }
          }
          auto& moved = fixed[e.state];
          std::sort(moved.begin(), moved.end(), target_less);
          const ReciprocalGapCost model(params, best.rho);
          DecisionPlan plan;
          const FlowGraph g = lay_out(best.table, model, part, initial, successor_shares(best.plan, 0.0), fixed, plan);
          auto trial = equalize(params, initial, part, opts, equalizer, g, plan);
          if (trial && trial->defect < best.defect - 1e-12) {
            best = std::move(*trial);
            improved = true;
          }
        }
      }
    }
    if (!improved) break;
  }
  return best;
}

// Alternates between fixing the switch instants of every used branch at
// their rounded optima for the current field and equalizing the branch
// values by Newton on the branch shares.
std::optional<Polished> polish(const CostParams& params, const MassField& initial, const EpsPartition& part,
                               const EquilibriumOptions& opts, const Equalizer& equalizer,
                               const DecisionPlan& history, const MassField& start) {
  SuccessorShares shares = successor_shares(history, 1e-3);
  MassField field = start;
  std::vector<DecisionPlan> seen;
  for (int round = 0; round < opts.polish_rounds; ++round) {
    const ValueTable table = solve_for(field, params, part, opts.solve);
    const ReciprocalGapCost model(params, field);
    DecisionPlan plan;
    const FlowGraph g = lay_out(table, model, part, initial, shares, {}, plan);
    BranchShares bs(g, plan);
    MassField cand = equalizer.run(bs);
    ValueTable ctable = solve_for(cand, params, part, opts.solve);
    Certificate cert = certify_membership(cand, ctable, part, initial, opts.tol);
    if (cert.certified) {
      const ReciprocalGapCost cmodel(params, cand);
      const double d = rounding_defect(bs.plan(), ctable, cmodel, part);
      return select_nearest(params, initial, part, opts, equalizer,
                            Polished{std::move(cand), std::move(ctable), std::move(cert), bs.plan(), d});
    }
    shares = successor_shares(bs.plan(), 0.0);
    field = std::move(cand);
  }
  return std::nullopt;
}

}  // namespace

EquilibriumReport find_equilibrium(const CostParams& params, const MassField& initial, const EpsPartition& part,
                                   const EquilibriumOptions& opts) {
  params.validate();
  if (initial.horizon() != params.horizon || part.horizon() != params.horizon) {
    throw Error(ErrorCode::DimensionMismatch, "initial field, partition and cost horizon differ");
  }
  EquilibriumReport rep;
  // Iterate 0 spreads the total evenly over all nodes, so every edge is
  // congested and the first best response already uses every branch.
  const std::vector<double> spread(initial.size(), initial.total_mass() / static_cast<double>(initial.size()));
  MassField rho = MassField::constant(params.horizon, spread);
  const Equalizer equalizer(params, initial, part, opts.solve);
  auto finish = [&](const MassField& field, const ValueTable& table, const Certificate& cert) {
    rep.rho = field;
    rep.certified = true;
    rep.residual = std::max(cert.l2_residual, cert.sup_residual);
    rep.plan = cert.plan;
    rep.min_gap = table.min_gap();
    rep.phi_single_valued = table.phi_single_valued();
    rep.message = "certified after " + std::to_string(rep.iterations) + " iterations";
  };

  double best_residual = std::numeric_limits<double>::infinity();
  std::optional<MassField> best;
  // Running average of the best-response coefficients; its pairs are the
  // support tried by the polish step.
  DecisionPlan history;
  for (int k = 0; k < opts.max_iter; ++k) {
    try {
      const ValueTable table = solve_for(rho, params, part, opts.solve);
      const FlowGraph graph = build_flow_graph(table, part, initial);
      const DecisionPlan br_plan = uniform_plan(graph);
      const MassField br = combine(br_plan, graph, initial);
      const double r = field_l2_distance(rho, br);
      rep.trace.push_back(r);
      rep.iterations = k + 1;

      const Certificate cert = certify_membership(rho, table, part, initial, opts.tol);
      if (cert.certified) {
        finish(rho, table, cert);
        return rep;
      }
      if (r < best_residual) {
        best_residual = r;
        best = rho;
        rep.min_gap = table.min_gap();
        rep.phi_single_valued = table.phi_single_valued();
      }

      const double eta = opts.eta > 0.0 ? opts.eta : 1.0 / (k + 2.0);
      absorb(history, br_plan, k == 0 ? 1.0 : eta);

      if (opts.polish) {
        if (auto done = polish(params, initial, part, opts, equalizer, history, rho)) {
          finish(done->rho, done->table, done->cert);
          return rep;
        }
      }

      if (r < opts.tol) {
        rep.rho = rho;
        rep.residual = r;
        rep.message = "best-response residual below tolerance but the field was not certified";
        return rep;
      }
      rho = blend(rho, br, eta);
    } catch (const Error& e) {
      rep.message = std::string("iteration stopped: ") + e.what();
      break;
    }
  }
  rep.rho = best ? *best : rho;
  rep.residual = best_residual;
  if (rep.message.empty()) rep.message = "not certified within max_iter";
  return rep;
}

bool RefinementReport::all_certified() const {
  return std::all_of(reports.begin(), reports.end(), [](const EquilibriumReport& r) { return r.certified; });
}

bool RefinementReport::distances_decreasing() const {
  for (std::size_t i = 1; i < distances.size(); ++i) {
    if (!(distances[i] < distances[i - 1])) return false;
  }
  return true;
}

RefinementReport refine_epsilon(const CostParams& params, const MassField& initial, const std::vector<int>& m_sequence,
                                int grid_steps, const EquilibriumOptions& opts) {
  RefinementReport rep;
  for (std::size_t i = 0; i < m_sequence.size(); ++i) {
    const int m = m_sequence[i];
    if (i > 0 && !(m > m_sequence[i - 1])) throw Error(ErrorCode::InvalidArgument, "m_sequence must increase");
    if (m < 1 || grid_steps % m != 0) {
      throw Error(ErrorCode::InvalidArgument, "grid steps " + std::to_string(grid_steps) + " not divisible by m = " +
                                                  std::to_string(m));
    }
    const EpsPartition part(params.horizon, m, grid_steps / m);
    rep.m.push_back(m);
    rep.reports.push_back(find_equilibrium(params, initial, part, opts));
    const auto& r = rep.reports.back();
    rep.piece_counts.push_back(r.rho.max_piece_count());
    rep.single_valued.push_back(r.phi_single_valued);
    if (i > 0) rep.distances.push_back(field_l2_distance(rep.reports[i - 1].rho, r.rho));
  }
  return rep;
}

}  // namespace mfg
