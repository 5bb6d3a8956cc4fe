#include "mfgswitch/flow_builder.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <tuple>

#include <Eigen/Dense>

#include "mfgswitch/errors.hpp"
#include "nnls.hpp"

namespace mfg {

const PlanEntry* DecisionPlan::find(const DecisionState& s) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), s,
                             [](const PlanEntry& e, const DecisionState& x) { return e.state < x; });
  if (it == entries.end() || !(it->state == s)) return nullptr;
  return &*it;
}

namespace {

int network_size(const MassField& f) {
  int N = 0;
  while ((std::size_t{1} << N) < f.size()) ++N;
  return N;
}

bool decides(const Node& p, int k, const EpsPartition& part) { return !p.is_destination() && k < part.m(); }

std::vector<double> quantized_initial(const MassField& initial, double& total, double& quantum) {
  const auto m0 = initial.initial_masses();
  double raw = 0.0;
  for (double m : m0) {
    if (!(m >= 0.0)) throw Error(ErrorCode::InvalidArgument, "initial masses must be non-negative");
    raw += m;
  }
  quantum = mass_quantum(raw);
  std::vector<double> out;
  total = 0.0;
  for (double m : m0) {
    out.push_back(quantize_nearest(m, quantum));
    total += out.back();
  }
  return out;
}

using Transition = std::tuple<std::uint32_t, int, std::uint32_t, int>;

MassField combine_impl(const DecisionPlan& plan, const std::set<Transition>* allowed, const MassField& initial,
                       const EpsPartition& part) {
  const int N = network_size(initial);
  const int m = part.m();
  for (const auto& e : plan.entries) {
    double sum = 0.0;
    for (const auto& t : e.targets) {
      if (!(t.lambda >= 0.0)) throw Error(ErrorCode::BadCoefficients, "negative coefficient at " + e.state.node.bits());
      sum += t.lambda;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw Error(ErrorCode::BadCoefficients, "coefficients at " + e.state.node.bits() + ", t = " +
                                                  std::to_string(e.t) + " sum to " + std::to_string(sum));
    }
  }
  double total = 0.0, q = 0.0;
  const auto init = quantized_initial(initial, total, q);

  std::map<DecisionState, double> mass;
  for (std::uint32_t id = 0; id < init.size(); ++id) {
    if (init[id] > 0.0) mass[{Node(N, id), 0}] += init[id];
  }
  // Per node: events (index, signed mass) in arrival/departure order.
  std::vector<std::vector<std::pair<int, double>>> arrivals(init.size()), departures(init.size());
  for (auto it = mass.begin(); it != mass.end(); ++it) {
    const DecisionState s = it->first;
    const double M = it->second;
    if (M <= 0.0) continue;
    arrivals[s.node.id()].emplace_back(s.k, M);
    if (!decides(s.node, s.k, part)) continue;
    const PlanEntry* entry = plan.find(s);
    if (entry == nullptr) {
      throw Error(ErrorCode::BadCoefficients,
                  "no coefficients for decision node " + s.node.bits() + " at t = " + std::to_string(part.node(s.k)));
    }
    std::vector<const PlanTarget*> live;
    for (const auto& t : entry->targets) {
      if (t.lambda <= 0.0) continue;
      if (!is_successor(s.node, t.successor) || !(t.k > s.k) || t.k > m) {
        throw Error(ErrorCode::BadCoefficients, "target is not an admissible switch from " + s.node.bits());
      }
      if (allowed && !allowed->count({s.node.id(), s.k, t.successor.id(), t.k})) {
        throw Error(ErrorCode::BadCoefficients, "positive weight on a pair outside the eps-optimal paths at " +
                                                    s.node.bits() + ", t = " + std::to_string(entry->t));
      }
      live.push_back(&t);
    }
    double given = 0.0;
    for (std::size_t c = 0; c < live.size(); ++c) {
      const double share = c + 1 == live.size() ? M - given : quantize_down(live[c]->lambda * M, q);
      given += share;
      if (share <= 0.0) continue;
      departures[s.node.id()].emplace_back(live[c]->k, share);
      mass[{live[c]->successor, live[c]->k}] += share;
    }
  }

  std::vector<double> br(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k) br[static_cast<std::size_t>(k)] = part.node(k);
  std::vector<StepProfile> profiles;
  for (std::uint32_t id = 0; id < init.size(); ++id) {
    const Node p(N, id);
    auto& arr = arrivals[id];
    auto& dep = departures[id];
    std::sort(arr.begin(), arr.end());
    std::sort(dep.begin(), dep.end());
    std::vector<double> v(static_cast<std::size_t>(m), 0.0);
    double run = 0.0, at_end = 0.0, reached = 0.0;
    std::size_t ia = 0, id_ = 0;
    for (int c = 0; c < m; ++c) {
      while (ia < arr.size() && arr[ia].first == c) run += arr[ia++].second;
      while (id_ < dep.size() && dep[id_].first == c) run -= dep[id_++].second;
      v[static_cast<std::size_t>(c)] = run;
    }
    for (const auto& [k, x] : arr) {
      reached += x;
      if (k == m) at_end += x;
    }
    const double terminal = p.is_destination() ? reached : at_end;
    profiles.push_back(StepProfile(br, std::move(v), terminal).simplified());
  }
  return MassField(std::move(profiles), total);
}

}  // namespace

std::vector<EpsPath> enumerate_eps_paths(const ValueTable& table, const EpsPartition& part, const MassField& initial,
                                         std::size_t max_paths) {
  const int N = network_size(initial);
  std::vector<EpsPath> out;
  const auto m0 = initial.initial_masses();
  EpsPath cur;
  const std::function<void()> dfs = [&] {
    const Node p = cur.nodes.back();
    const int k = cur.node_indices.back();
    if (!decides(p, k, part)) {
      if (out.size() >= max_paths) {
        throw Error(ErrorCode::PathExplosion, "more than " + std::to_string(max_paths) + " eps-optimal paths");
      }
      out.push_back(cur);
      return;
    }
    for (const auto& pair : eps_argmin_map(table, part, p, k)) {
      cur.nodes.push_back(pair.successor);
      cur.node_indices.push_back(pair.node_index);
      cur.instants.push_back(pair.tau);
      dfs();
      cur.nodes.pop_back();
      cur.node_indices.pop_back();
      cur.instants.pop_back();
    }
  };
  for (std::uint32_t id = 0; id < m0.size(); ++id) {
    if (!(m0[id] > 0.0)) continue;
    cur = EpsPath{{Node(N, id)}, {0}, {0.0}};
    dfs();
  }
  return out;
}

FlowGraph build_flow_graph(const ValueTable& table, const EpsPartition& part, const MassField& initial) {
  FlowGraph g;
  g.num_targets = network_size(initial);
  g.partition = part;
  double q = 0.0;
  g.initial = quantized_initial(initial, g.total, q);
  std::set<DecisionState> pending;
  for (std::uint32_t id = 0; id < g.initial.size(); ++id) {
    const Node p(g.num_targets, id);
    if (g.initial[id] > 0.0 && decides(p, 0, part)) pending.insert({p, 0});
  }
  while (!pending.empty()) {
    const DecisionState s = *pending.begin();
    pending.erase(pending.begin());
    PlanEntry e;
    e.state = s;
    e.t = part.node(s.k);
    for (const auto& pair : eps_argmin_map(table, part, s.node, s.k)) {
      e.targets.push_back({pair.successor, pair.node_index, pair.tau, 0.0});
      if (decides(pair.successor, pair.node_index, part)) pending.insert({pair.successor, pair.node_index});
    }
    g.states.push_back(std::move(e));
  }
  return g;
}

DecisionPlan uniform_plan(const FlowGraph& graph) {
  DecisionPlan plan;
  plan.entries = graph.states;
  for (auto& e : plan.entries) {
    for (auto& t : e.targets) t.lambda = 1.0 / static_cast<double>(e.targets.size());
  }
  return plan;
}

MassField extremal_evolution(const EpsPath& path, double mass, const EpsPartition& part) {
  if (path.nodes.empty() || path.nodes.size() != path.node_indices.size()) {
    throw Error(ErrorCode::NotAPath, "path needs matching nodes and instants");
  }
  const int N = path.nodes.front().num_targets();
  const int m = part.m();
  std::vector<double> br(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k) br[static_cast<std::size_t>(k)] = part.node(k);
  std::vector<std::vector<double>> v(std::size_t{1} << N, std::vector<double>(static_cast<std::size_t>(m), 0.0));
  std::vector<double> terminal(v.size(), 0.0);
  for (std::size_t i = 0; i < path.nodes.size(); ++i) {
    const int from = path.node_indices[i];
    const int to = i + 1 < path.nodes.size() ? path.node_indices[i + 1] : m;
    for (int c = from; c < to; ++c) v[path.nodes[i].id()][static_cast<std::size_t>(c)] = mass;
  }
  terminal[path.nodes.back().id()] = mass;
  std::vector<StepProfile> profiles;
  for (std::size_t id = 0; id < v.size(); ++id) profiles.push_back(StepProfile(br, v[id], terminal[id]).simplified());
  return MassField(std::move(profiles), mass);
}

MassField combine(const DecisionPlan& plan, const std::vector<EpsPath>& paths, const MassField& initial,
                  const EpsPartition& part) {
  std::set<Transition> allowed;
  for (const auto& p : paths) {
    for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) {
      allowed.insert({p.nodes[i].id(), p.node_indices[i], p.nodes[i + 1].id(), p.node_indices[i + 1]});
    }
  }
  return combine_impl(plan, &allowed, initial, part);
}

MassField combine(const DecisionPlan& plan, const FlowGraph& graph, const MassField& initial) {
  std::set<Transition> allowed;
  for (const auto& e : graph.states) {
    for (const auto& t : e.targets) allowed.insert({e.state.node.id(), e.state.k, t.successor.id(), t.k});
  }
  return combine_impl(plan, &allowed, initial, graph.partition);
}

Certificate certify_membership(const MassField& candidate, const ValueTable& table, const EpsPartition& part,
                               const MassField& initial, double tol) {
  Certificate cert;
  const FlowGraph g = build_flow_graph(table, part, initial);
  const int m = part.m();
  const std::size_t nodes = g.initial.size();
  if (candidate.size() != nodes) throw Error(ErrorCode::DimensionMismatch, "candidate over a different network");

  struct Edge {
    std::size_t from;
    std::uint32_t to_node;
    int to_k;
  };
  std::map<DecisionState, std::size_t> index;
  for (std::size_t s = 0; s < g.states.size(); ++s) index[g.states[s].state] = s;
  std::vector<Edge> edges;
  for (std::size_t s = 0; s < g.states.size(); ++s) {
    for (const auto& t : g.states[s].targets) edges.push_back({s, t.successor.id(), t.k});
  }
  const auto E = static_cast<Eigen::Index>(edges.size());
  const auto S = static_cast<Eigen::Index>(g.states.size());
  const auto rows = static_cast<Eigen::Index>(nodes) * (m + 1) + S;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, E);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
  const double w_piece = std::sqrt(part.epsilon());
  const double w_cons = 1e3;
  auto piece_row = [&](std::size_t node, int c) { return static_cast<Eigen::Index>(node) * (m + 1) + c; };
  for (std::size_t p = 0; p < nodes; ++p) {
    for (int c = 0; c < m; ++c) {
      const double avg = time_integral(candidate[p], part.node(c), part.node(c + 1)) / (part.node(c + 1) - part.node(c));
      b(piece_row(p, c)) = w_piece * (avg - g.initial[p]);
    }
    const bool dest = Node(g.num_targets, static_cast<std::uint32_t>(p)).is_destination();
    b(piece_row(p, m)) = w_piece * (candidate[p].terminal() - (dest ? g.initial[p] : 0.0));
  }
  for (Eigen::Index e = 0; e < E; ++e) {
    const Edge& ed = edges[static_cast<std::size_t>(e)];
    const std::uint32_t src = g.states[ed.from].state.node.id();
    for (int c = ed.to_k; c < m; ++c) {
      A(piece_row(ed.to_node, c), e) += w_piece;
      A(piece_row(src, c), e) -= w_piece;
    }
    const bool dest = Node(g.num_targets, ed.to_node).is_destination();
    if (dest || ed.to_k == m) A(piece_row(ed.to_node, m), e) += w_piece;
    A(static_cast<Eigen::Index>(nodes) * (m + 1) + static_cast<Eigen::Index>(ed.from), e) += w_cons;
    auto it = index.find({Node(g.num_targets, ed.to_node), ed.to_k});
    if (it != index.end()) A(static_cast<Eigen::Index>(nodes) * (m + 1) + static_cast<Eigen::Index>(it->second), e) -= w_cons;
  }
  for (std::size_t s = 0; s < g.states.size(); ++s) {
    const auto& st = g.states[s].state;
    if (st.k == 0) b(static_cast<Eigen::Index>(nodes) * (m + 1) + static_cast<Eigen::Index>(s)) = w_cons * g.initial[st.node.id()];
  }
  const Eigen::VectorXd x = detail::nnls(A, b);

  cert.plan.entries = g.states;
  const double tiny = 1e-14 * std::max(1.0, g.total);
  std::size_t e = 0;
  for (auto& entry : cert.plan.entries) {
    double out = 0.0;
    for (std::size_t j = 0; j < entry.targets.size(); ++j) out += x(static_cast<Eigen::Index>(e + j));
    for (std::size_t j = 0; j < entry.targets.size(); ++j, ++e) {
      entry.targets[j].lambda =
          out > tiny ? x(static_cast<Eigen::Index>(e)) / out : 1.0 / static_cast<double>(entry.targets.size());
    }
    entry.free = !(out > tiny);
  }
  // Re-normalize: the division above can leave a sum one ulp off.
  for (auto& entry : cert.plan.entries) {
    double sum = 0.0;
    for (const auto& t : entry.targets) sum += t.lambda;
    for (auto& t : entry.targets) t.lambda /= sum;
  }

  const MassField rebuilt = combine_impl(cert.plan, nullptr, initial, part);
  cert.l2_residual = field_l2_distance(rebuilt, candidate);
  cert.sup_residual = field_sup_distance(rebuilt, candidate);
  cert.certified = cert.l2_residual <= tol && cert.sup_residual <= tol;
  if (cert.certified) {
    cert.message = "certified";
    return cert;
  }
  // Locate the first cell, in time order, where the rebuilt field departs.
  for (int c = 0; c <= m && cert.message.empty(); ++c) {
    for (std::size_t p = 0; p < nodes; ++p) {
      const double t = c < m ? 0.5 * (part.node(c) + part.node(c + 1)) : part.horizon();
      const double d = std::abs(rebuilt[p].at(t) - candidate[p].at(t));
      if (d <= tol) continue;
      const Node node(g.num_targets, static_cast<std::uint32_t>(p));
      DecisionState at{node, std::min(c, m)};
      for (const auto& st : g.states) {
        if (st.state.node == node && st.state.k <= c) at = st.state;
      }
      cert.first_inconsistent = at;
      cert.local_residual = d;
      cert.message = "no eps-optimal plan reproduces node " + node.bits() + " on piece " + std::to_string(c) +
                     " (defect " + std::to_string(d) + ")";
      break;
    }
  }
  if (cert.message.empty()) cert.message = "residual above tolerance";
  return cert;
}

}  // namespace mfg
