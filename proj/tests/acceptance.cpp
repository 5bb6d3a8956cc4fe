// One line per acceptance criterion: PASS or FAIL, the measured quantities
// and the wall time. Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mfgswitch/equilibrium.hpp"
#include "mfgswitch/errors.hpp"
#include "mfgswitch/fixed_instant.hpp"
#include "mfgswitch/flow_builder.hpp"
#include "mfgswitch/value_solver.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mfg;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void run(int id, const std::string& name, double limit_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.ok = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (s > limit_s) {
    o.ok = false;
    o.detail << " [over time limit " << limit_s << " s]";
  }
  if (!o.ok) ++failures;
  std::printf("%s criterion %d: %s;%s (%.3f s)\n", o.ok ? "PASS" : "FAIL", id, name.c_str(), o.detail.str().c_str(),
              s);
  std::fflush(stdout);
}

CostParams pair_params(std::vector<double> weights) {
  auto p = testing_support::uniform_params(2, 1.0);
  p.weights = std::move(weights);
  p.miss_penalty = 10.0;
  return p;
}

MassField origin_mass(int N, double T) {
  std::vector<double> m(std::size_t{1} << N, 0.0);
  m[0] = 1.0;
  return MassField::constant(T, m);
}

// Every pair used with positive weight is eps-optimal for the field's own table.
bool plan_within_eps_pairs(const DecisionPlan& plan, const MassField& rho, const CostParams& params,
                           const EpsPartition& part) {
  const auto table = solve_value(rho, params, part.value_grid(), {});
  for (const auto& e : plan.entries) {
    const auto pairs = eps_argmin_map(table, part, e.state.node, e.state.k);
    for (const auto& t : e.targets) {
      if (!(t.lambda > 0.0)) continue;
      const bool found = std::any_of(pairs.begin(), pairs.end(), [&](const EpsPair& q) {
        return q.successor == t.successor && q.node_index == t.k;
      });
      if (!found) return false;
    }
  }
  return true;
}

void parallel_links(Outcome& o) {
  const auto exact = solve_parallel_links_exact({Rational(1), Rational(2), Rational(3)});
  o.require(exact == std::vector<Rational>{Rational(6, 11), Rational(3, 11), Rational(2, 11)}, "rational tuple");
  const auto fl = solve_parallel_links({1.0, 2.0, 3.0});
  double err = 0.0;
  const double ref[3] = {6.0 / 11, 3.0 / 11, 2.0 / 11};
  for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(fl[i] - ref[i]));
  o.require(err <= 1e-12, "float tuple");
  const auto two = solve_parallel_links_exact({Rational(1), Rational(2)});
  o.require(two == std::vector<Rational>{Rational(2, 3), Rational(1, 3)}, "two-link tuple");

  const auto inst = FixedSwitchInstance::parallel_links({1.0, 2.0, 3.0});
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  double fp_err = 0.0;
  int certified = 0;
  for (int s = 0; s < 20; ++s) {
    const auto rep = fixed_fictitious_play(inst, {1.0, u(rng), u(rng), u(rng)});
    certified += rep.certified ? 1 : 0;
    for (int i = 0; i < 3; ++i) fp_err = std::max(fp_err, std::abs(rep.flows[i] - ref[i]));
  }
  o.require(certified == 20 && fp_err <= 1e-6, "fictitious play from 20 starts");
  o.detail << " float error " << err << ", play error " << fp_err << " over " << certified << "/20 certified";
}

void example_tree(Outcome& o) {
  const auto s = solve_example3();
  o.require(s.lambda1 == Rational(13, 18) && s.lambda2 == Rational(5, 18), "first-level shares");
  o.require(s.lambda23 == Rational(2, 5) && s.lambda24 == Rational(3, 5), "second-level shares");
  o.require(s.distribution ==
                std::vector<Rational>{Rational(13, 18), Rational(5, 18), Rational(1, 9), Rational(1, 6)},
            "distribution");
  o.require(s.path_cost == Rational(13, 18), "path cost");
  o.detail << " shares " << s.lambda1 << ", " << s.lambda2 << ", " << s.lambda23 << ", " << s.lambda24
           << "; cost " << s.path_cost;
}

void dp_brute_force(Outcome& o) {
  double worst = 0.0;
  int cells = 0;
  for (int N = 1; N <= 3; ++N) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      std::mt19937_64 rng(seed * 104729 + static_cast<std::uint64_t>(N));
      const auto params = testing_support::random_params(N, 2.0, rng);
      const auto mass = testing_support::random_masses(N, rng);
      const auto rho = MassField::constant(2.0, mass);
      const auto table = solve_value(rho, params, TimeGrid(2.0, 32), {});
      for (std::uint32_t id = 0; id < (1u << N); ++id) {
        const Node p(N, id);
        const double bf = oracles::brute_force(p, params.weights, mass, 2.0, 32, params.earliness_rate,
                                               params.miss_penalty);
        worst = std::max(worst, std::abs(table.value(p, 0) - bf));
        ++cells;
      }
    }
  }
  o.require(worst <= 1e-12, "max abs error");
  o.detail << " " << cells << " start nodes, max abs error " << worst;
}

void closed_forms(Outcome& o) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  double worst_phi = 0.0;
  bool phi_ok = true;
  for (int s = 0; s < 100; ++s) {
    const double ci = u(rng), co = u(rng), T = 2.0, t = 0.6 * u(rng);
    const int n = 20000;
    const double d = std::abs(phi_two_step(ci, co, t, T) - oracles::grid_two_step(ci, co, t, T, n));
    worst_phi = std::max(worst_phi, d / ((T - t) / n));
    phi_ok = phi_ok && d <= (T - t) / n;
  }
  o.require(phi_ok, "two-step instant within one grid step");

  double worst_n1 = 0.0;
  for (int s = 0; s < 5; ++s) {
    auto params = testing_support::uniform_params(1, 2.0, 0.2 + u(rng));
    params.weights[1] = 0.2 + u(rng);
    const std::vector<double> m{0.2 + u(rng), u(rng)};
    const auto rho = MassField::constant(2.0, m);
    const double cbar = params.weights[0] * m[0] + params.weights[1] * m[1];
    for (auto mode : {SolveMode::Grid, SolveMode::Analytic}) {
      SolveOptions opts;
      opts.mode = mode;
      const auto table = solve_value(rho, params, TimeGrid(2.0, 64), opts);
      for (int i = 0; i < 64; ++i) {
        const double ref = cbar / (2.0 - table.grid().time(i));
        worst_n1 = std::max(worst_n1, std::abs(table.value(0u, i) - ref) / ref);
      }
    }
  }
  o.require(worst_n1 <= 1e-13, "single-target value");

  double lo = 1.0, hi = 0.0;
  const double h = 1e-5;
  for (int s = 0; s < 10; ++s) {
    const auto params = testing_support::random_params(3, 2.0, rng);
    const auto rho = testing_support::random_field(3, 2.0, rng);
    const std::vector<Node> path{Node(3, 1), Node(3, 3), Node(3, 7)};
    for (double t = 0.0; t < 1.8; t += 0.15) {
      const auto a = phi_chain(path, rho, params, t);
      const auto b = phi_chain(path, rho, params, t + h);
      const double slope = (b.instants[0] - a.instants[0]) / h;
      lo = std::min(lo, slope);
      hi = std::max(hi, slope);
    }
  }
  o.require(lo >= 1e-6 && hi <= 1.0 - 1e-6, "chain slopes in (0, 1)");
  o.detail << " worst phi offset " << worst_phi << " grid steps, single-target rel error " << worst_n1
           << ", chain slopes in [" << lo << ", " << hi << "]";
}

void flow_display(Outcome& o) {
  using namespace oracles::three_paths;
  const EpsPartition part(2.0, 8);
  const auto ps = paths(part);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  bool conserved = true;
  for (int seed = 0; seed < 10; ++seed) {
    const double rho0 = 0.5 + u(rng), l01 = u(rng), l14 = u(rng);
    std::vector<double> m0(8, 0.0);
    m0[P0] = rho0;
    const auto rho = combine(plan(part, l01, l14), ps, MassField::constant(2.0, m0), part);
    conserved = conserved && check_conservation(rho, 0.0);
    for (const auto& p : ps) conserved = conserved && check_conservation(extremal_evolution(p, rho0, part), 0.0);
    const std::uint32_t ids[5] = {P0, P1, P3, P4, P6};
    for (int c = 0; c < 8; ++c) {
      const auto ref = display(c, rho0, l01, l14);
      const double t = (c + 0.5) * part.epsilon();
      for (int i = 0; i < 5; ++i) worst = std::max(worst, std::abs(rho[ids[i]].at(t) - ref[static_cast<std::size_t>(i)]));
      for (std::uint32_t z : {2u, 6u, P7}) worst = std::max(worst, std::abs(rho[z].at(t)));
    }
    worst = std::max(worst, std::abs(rho[P7].terminal() - rho0));
  }
  o.require(worst <= 1e-14, "display");
  o.require(conserved, "conservation at tol 0");
  o.detail << " max deviation " << worst << ", conservation exact: " << (conserved ? "yes" : "no");
}

void equilibrium_suite(Outcome& o) {
  const auto initial = origin_mass(2, 1.0);
  const std::vector<std::pair<std::string, std::vector<double>>> instances{
      {"symmetric", {1.0, 1.0, 1.0, 1.0}}, {"asymmetric", {1.0, 0.6, 1.7, 1.2}}, {"skewed", {0.7, 1.5, 0.9, 1.1}}};
  for (const auto& [name, w] : instances) {
    const auto params = pair_params(w);
    for (int m : {8, 16}) {
      const EpsPartition part(1.0, m, 256 / m);
      const auto rep = find_equilibrium(params, initial, part);
      const std::string tag = name + " m=" + std::to_string(m);
      o.require(rep.certified, tag + " certified");
      o.require(rep.residual < 1e-6, tag + " residual");
      o.require(check_conservation(rep.rho, 0.0), tag + " conservation");
      o.require(plan_within_eps_pairs(rep.plan, rep.rho, params, part), tag + " support");
      if (name == "symmetric") {
        double split = 0.0;
        for (double t : {0.8, 0.9, 0.99}) split = std::max(split, std::abs(rep.rho[1].at(t) - 0.5));
        for (double t : {0.8, 0.9, 0.99}) split = std::max(split, std::abs(rep.rho[2].at(t) - 0.5));
        o.require(split <= 1e-6, tag + " even split");
        o.detail << " " << tag << " split error " << split << ";";
      }
      o.detail << " " << tag << " residual " << rep.residual << " after " << rep.iterations << " it;";
    }
  }
}

void refinement(Outcome& o) {
  const auto params = pair_params({1.0, 1.0, 1.0, 1.0});
  const auto rep = refine_epsilon(params, origin_mass(2, 1.0), {8, 16, 32, 64}, 256);
  o.require(rep.all_certified(), "all certified");
  o.require(rep.distances_decreasing(), "strictly decreasing distances");
  std::size_t pieces = 0;
  for (auto n : rep.piece_counts) pieces = std::max(pieces, n);
  o.require(pieces <= 3, "piece counts bounded by 3");
  // phi must be single-valued on the decision cells the plans reach.
  int multi = 0, cells = 0;
  for (std::size_t r = 0; r < rep.reports.size(); ++r) {
    const int gd = 256 / rep.m[r];
    const auto table = solve_value(rep.reports[r].rho, params, TimeGrid(1.0, 256), {});
    for (const auto& e : rep.reports[r].plan.entries) {
      const auto& a = table.argmins(e.state.node, e.state.k * gd);
      ++cells;
      for (std::size_t i = 1; i < a.size(); ++i) {
        if (a[i].successor == a[i - 1].successor) {
          ++multi;
          break;
        }
      }
    }
  }
  o.require(multi == 0, "single-valued instants on reached decision cells");
  o.detail << " distances";
  for (double d : rep.distances) o.detail << " " << d;
  o.detail << "; " << cells - multi << "/" << cells << " reached cells single-valued";
  o.detail << "; max pieces " << pieces;
}

void monotonicity(Outcome& o) {
  const int samples = 100000;
  const auto par = check_monotonicity(FixedSwitchInstance::parallel_links({1.0, 2.0, 3.0}), samples, {0.5, 1.0, 2.0});
  o.require(par.violations[0] == 0 && par.min_values[0] > 0.0, "parallel inequality");
  const auto tree = check_monotonicity(FixedSwitchInstance::example_tree(), samples, {0.5, 1.0, 2.0});
  o.require(tree.violations[0] == 0 && tree.min_values[0] > 0.0, "tree inequality 1");
  o.require(tree.violations[1] == 0 && tree.min_values[1] > 0.0, "tree inequality 2");
  const auto flat = check_monotonicity(FixedSwitchInstance::parallel_links({1.0, 2.0, 3.0}).with_slope(2, 0.0), 2000,
                                       {1.0});
  o.require(!flat.passed(), "zero slope reported (parallel)");
  const auto flat_tree = check_monotonicity(FixedSwitchInstance::example_tree().with_slope(3, 0.0), 2000, {1.0});
  o.require(!flat_tree.passed(), "zero slope reported (tree)");
  o.detail << " parallel min " << par.min_values[0] << "; tree mins " << tree.min_values[0] << ", "
           << tree.min_values[1] << " with " << tree.violations[1] << "/" << tree.samples
           << " negative samples of inequality 2";
}

void regularity(Outcome& o) {
  const double T = 2.0, k = T / 8;
  const int n = 64;
  const int N = 2;
  std::mt19937_64 rng(31);
  const auto params = testing_support::random_params(N, T, rng);
  double a_max = 0.0;
  for (double w : params.weights) a_max = std::max(a_max, w);
  // Each chain value is (sum sqrt(C-bar))^2 / (T - t) with C-bar <= 2 a_max
  // (profiles are in [0, 1]); its t-derivative on [0, T - k] is at most
  // 2 N^2 a_max / k^2. A factor 2 absorbs the grid minimum.
  const double bound = 4.0 * N * N * a_max / (k * k) + params.earliness_rate;
  const TimeGrid grid(T, n);
  const int last = grid.index_of(T - k);
  double worst = 0.0;
  for (int s = 0; s < 10; ++s) {
    const auto rho = testing_support::random_field(N, T, rng);
    const auto table = solve_value(rho, params, grid, {});
    for (std::uint32_t id = 0; id < (1u << N); ++id) {
      for (int i = 0; i < last; ++i) {
        worst = std::max(worst, std::abs(table.value(id, i + 1) - table.value(id, i)) / grid.step());
      }
    }
  }
  o.require(worst <= bound, "difference quotients within the chain bound");

  const auto base = testing_support::random_field(N, T, rng);
  const auto dir = testing_support::random_field(N, T, rng);
  const auto v0 = solve_value(base, params, grid, {});
  std::vector<double> dist, change;
  for (double s : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const auto rho = blend(base, dir, s);
    const auto v = solve_value(rho, params, grid, {});
    double c = 0.0;
    for (std::uint32_t id = 0; id < (1u << N); ++id) {
      for (int i = 0; i <= n; ++i) c = std::max(c, std::abs(v.value(id, i) - v0.value(id, i)));
    }
    dist.push_back(field_l2_distance(base, rho));
    change.push_back(c);
  }
  bool mono = true;
  for (std::size_t i = 1; i < change.size(); ++i) mono = mono && change[i] < change[i - 1] && dist[i] < dist[i - 1];
  o.require(mono, "value change decreases with the perturbation");
  o.require(change.back() <= 2e-3 * change.front(), "value change tends to 0");
  o.detail << " max quotient " << worst << " (bound " << bound << "); changes";
  for (std::size_t i = 0; i < change.size(); ++i) o.detail << " " << change[i] << "@" << dist[i];
}

}  // namespace

int main() {
  run(1, "parallel links (6/11, 3/11, 2/11)", 1.0, parallel_links);
  run(2, "two-level tree (13/18, 5/18, 2/5, 3/5)", 1.0, example_tree);
  run(3, "grid value vs exhaustive enumeration", 30.0, dp_brute_force);
  run(4, "closed forms and chain slopes", 10.0, closed_forms);
  run(5, "convexified flow display and conservation", 5.0, flow_display);
  run(6, "certified eps-equilibria for two targets", 120.0, equilibrium_suite);
  run(7, "eps-refinement distances and piece counts", 600.0, refinement);
  run(8, "monotonicity checkers", 30.0, monotonicity);
  run(9, "value regularity in time and field", 60.0, regularity);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
