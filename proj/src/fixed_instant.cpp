#include "mfgswitch/fixed_instant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "mfgswitch/errors.hpp"

namespace mfg {

FixedSwitchInstance::FixedSwitchInstance(std::vector<FixedNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw Error(ErrorCode::ValidationError, "an instance needs a root and at least one branch");
  if (nodes_[0].parent != -1) throw Error(ErrorCode::ValidationError, "node 0 must be the root");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (!(n.exit > n.entry)) throw Error(ErrorCode::ValidationError, "node " + n.label + ": exit must follow entry");
    if (i == 0) continue;
    if (n.parent < 0 || n.parent >= static_cast<int>(i)) {
      throw Error(ErrorCode::ValidationError, "node " + n.label + ": parent must precede it");
    }
    if (n.entry != nodes_[static_cast<std::size_t>(n.parent)].exit) {
      throw Error(ErrorCode::ValidationError, "node " + n.label + " is not entered when its parent is left");
    }
  }
  index();
  const double T = nodes_[static_cast<std::size_t>(paths_.front().back())].exit;
  for (const auto& p : paths_) {
    if (nodes_[static_cast<std::size_t>(p.back())].exit != T) {
      throw Error(ErrorCode::ValidationError, "all leaves must exit at the same horizon");
    }
  }
}

void FixedSwitchInstance::index() {
  children_.assign(nodes_.size(), {});
  for (std::size_t i = 1; i < nodes_.size(); ++i) children_[static_cast<std::size_t>(nodes_[i].parent)].push_back(static_cast<int>(i));
  paths_.clear();
  std::vector<int> cur;
  auto walk = [&](auto&& self, int i) -> void {
    if (i != 0) cur.push_back(i);
    if (children_[static_cast<std::size_t>(i)].empty()) {
      paths_.push_back(cur);
    } else {
      for (int c : children_[static_cast<std::size_t>(i)]) self(self, c);
    }
    if (i != 0) cur.pop_back();
  };
  walk(walk, 0);
}

FixedSwitchInstance FixedSwitchInstance::parallel_links(const std::vector<double>& slopes) {
  std::vector<FixedNode> nodes{{"p0", -1, 0.0, 1.0, 0.0}};
  for (std::size_t i = 0; i < slopes.size(); ++i) nodes.push_back({"p" + std::to_string(i + 1), 0, 1.0, 2.0, slopes[i]});
  return FixedSwitchInstance(std::move(nodes));
}

FixedSwitchInstance FixedSwitchInstance::example_tree() {
  return FixedSwitchInstance({{"p0", -1, 0.0, 1.0, 0.0},
                              {"p1", 0, 1.0, 2.0, 1.0},
                              {"p2", 0, 1.0, 1.5, 4.0},
                              {"p3", 2, 1.5, 2.0, 3.0},
                              {"p4", 2, 1.5, 2.0, 2.0}});
}

bool FixedSwitchInstance::is_parallel() const {
  for (int c : children_[0]) {
    if (!children_[static_cast<std::size_t>(c)].empty()) return false;
  }
  return true;
}

FixedSwitchInstance FixedSwitchInstance::with_slope(int i, double slope) const {
  FixedSwitchInstance out = *this;
  out.nodes_.at(static_cast<std::size_t>(i)).slope = slope;
  return out;
}

namespace {

template <class Scalar>
Scalar to_scalar(double x) {
  return Scalar(x);
}

template <class Scalar>
FixedSolution<Scalar> solve_tree(const FixedSwitchInstance& inst) {
  const auto& nodes = inst.nodes();
  const std::size_t n = nodes.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (!(nodes[i].slope > 0.0) || !std::isfinite(nodes[i].slope)) {
      throw Error(ErrorCode::BadSlope, "slope of " + nodes[i].label + " must be positive");
    }
  }
  std::vector<Scalar> effective(n, Scalar(0));
  for (std::size_t i = n; i-- > 0;) {
    Scalar inv_sum(0);
    for (int c : inst.children(static_cast<int>(i))) inv_sum += Scalar(1) / effective[static_cast<std::size_t>(c)];
    const Scalar below = inst.children(static_cast<int>(i)).empty() ? Scalar(0) : Scalar(1) / inv_sum;
    effective[i] = i == 0 ? below : to_scalar<Scalar>(nodes[i].residence()) * to_scalar<Scalar>(nodes[i].slope) + below;
  }
  FixedSolution<Scalar> sol;
  sol.share.assign(n, Scalar(0));
  sol.mass.assign(n, Scalar(0));
  sol.share[0] = Scalar(1);
  sol.mass[0] = Scalar(1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ch = inst.children(static_cast<int>(i));
    Scalar inv_sum(0);
    for (int c : ch) inv_sum += Scalar(1) / effective[static_cast<std::size_t>(c)];
    for (int c : ch) {
      const auto k = static_cast<std::size_t>(c);
      sol.share[k] = (Scalar(1) / effective[k]) / inv_sum;
      sol.mass[k] = sol.mass[i] * sol.share[k];
    }
  }
  for (const auto& path : inst.paths()) {
    Scalar cost(0);
    for (int i : path) {
      const auto k = static_cast<std::size_t>(i);
      cost += to_scalar<Scalar>(nodes[k].residence()) * to_scalar<Scalar>(nodes[k].slope) * sol.mass[k];
    }
    sol.path_cost.push_back(cost);
  }
  return sol;
}

std::vector<double> node_masses(const FixedSwitchInstance& inst, const std::vector<double>& flows) {
  if (flows.size() != inst.paths().size()) throw Error(ErrorCode::DimensionMismatch, "one flow per path expected");
  std::vector<double> mass(inst.nodes().size(), 0.0);
  for (std::size_t p = 0; p < flows.size(); ++p) {
    mass[0] += flows[p];
    for (int i : inst.paths()[p]) mass[static_cast<std::size_t>(i)] += flows[p];
  }
  return mass;
}

std::vector<double> shares_from_masses(const FixedSwitchInstance& inst, const std::vector<double>& mass) {
  std::vector<double> share(mass.size(), 0.0);
  share[0] = 1.0;
  for (std::size_t i = 1; i < mass.size(); ++i) {
    const double up = mass[static_cast<std::size_t>(inst.nodes()[i].parent)];
    share[i] = up > 0.0 ? mass[i] / up : 0.0;
  }
  return share;
}

}  // namespace

FixedSolution<Rational> solve_fixed_exact(const FixedSwitchInstance& inst) { return solve_tree<Rational>(inst); }

FixedSolution<double> solve_fixed(const FixedSwitchInstance& inst) { return solve_tree<double>(inst); }

std::vector<Rational> solve_parallel_links_exact(const std::vector<Rational>& slopes) {
  if (slopes.empty()) throw Error(ErrorCode::InvalidArgument, "no links");
  Rational inv_sum(0);
  for (const auto& c : slopes) {
    if (c <= 0) throw Error(ErrorCode::BadSlope, "slopes must be positive");
    inv_sum += Rational(1) / c;
  }
  std::vector<Rational> out;
  for (const auto& c : slopes) out.push_back((Rational(1) / c) / inv_sum);
  return out;
}

std::vector<double> solve_parallel_links(const std::vector<double>& slopes, double rho0) {
  if (!(rho0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "rho0 must be positive");
  if (slopes.empty()) throw Error(ErrorCode::InvalidArgument, "no links");
  double inv_sum = 0.0;
  for (double c : slopes) {
    if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorCode::BadSlope, "slopes must be positive");
    inv_sum += 1.0 / c;
  }
  std::vector<double> out;
  for (double c : slopes) out.push_back((1.0 / c) / inv_sum);
  return out;
}

Example3Solution solve_example3() {
  const auto sol = solve_fixed_exact(FixedSwitchInstance::example_tree());
  Example3Solution out;
  out.lambda1 = sol.share[1];
  out.lambda2 = sol.share[2];
  out.lambda23 = sol.share[3];
  out.lambda24 = sol.share[4];
  out.distribution = {sol.mass[1], sol.mass[2], sol.mass[3], sol.mass[4]};
  out.path_cost = sol.path_cost.front();
  return out;
}

std::vector<double> fixed_path_costs(const FixedSwitchInstance& inst, const std::vector<double>& flows) {
  const auto mass = node_masses(inst, flows);
  std::vector<double> out;
  for (const auto& path : inst.paths()) {
    double c = 0.0;
    for (int i : path) {
      const auto& n = inst.nodes()[static_cast<std::size_t>(i)];
      c += n.residence() * n.slope * mass[static_cast<std::size_t>(i)];
    }
    out.push_back(c);
  }
  return out;
}

FixedCertificate certify_fixed(const FixedSwitchInstance& inst, const std::vector<double>& flows, double tol) {
  FixedCertificate cert;
  cert.path_costs = fixed_path_costs(inst, flows);
  const double best = *std::min_element(cert.path_costs.begin(), cert.path_costs.end());
  for (std::size_t p = 0; p < flows.size(); ++p) {
    if (cert.path_costs[p] <= best + tol * (1.0 + std::abs(best))) cert.optimal_paths.push_back(static_cast<int>(p));
  }
  cert.certified = true;
  for (std::size_t p = 0; p < flows.size(); ++p) {
    const bool optimal = std::find(cert.optimal_paths.begin(), cert.optimal_paths.end(), static_cast<int>(p)) !=
                         cert.optimal_paths.end();
    if (flows[p] < -tol) cert.certified = false;
    if (flows[p] > tol && !optimal) cert.certified = false;
  }
  std::ostringstream os;
  if (cert.certified) {
    os << "every used path has the minimum cost " << best;
  } else {
    os << "best-response support is only";
    for (int p : cert.optimal_paths) os << ' ' << inst.nodes()[static_cast<std::size_t>(inst.paths()[static_cast<std::size_t>(p)].back())].label;
    os << "; the given flows use a costlier path";
  }
  cert.message = os.str();
  return cert;
}

namespace {

// Equal-cost flows restricted to the paths in `support`, as leaf flows on
// the full instance.
std::vector<double> equalize_on(const FixedSwitchInstance& inst, const std::vector<int>& support, double rho0) {
  std::vector<char> keep(inst.nodes().size(), 0);
  keep[0] = 1;
  for (int p : support) {
    for (int i : inst.paths()[static_cast<std::size_t>(p)]) keep[static_cast<std::size_t>(i)] = 1;
  }
  std::vector<int> remap(inst.nodes().size(), -1);
  std::vector<FixedNode> sub;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!keep[i]) continue;
    FixedNode n = inst.nodes()[i];
    if (n.parent >= 0) n.parent = remap[static_cast<std::size_t>(n.parent)];
    remap[i] = static_cast<int>(sub.size());
    sub.push_back(n);
  }
  const FixedSwitchInstance reduced(std::move(sub));
  const auto sol = solve_fixed(reduced);
  std::vector<double> flows(inst.paths().size(), 0.0);
  for (int p : support) {
    const int leaf = inst.paths()[static_cast<std::size_t>(p)].back();
    flows[static_cast<std::size_t>(p)] = rho0 * sol.mass[static_cast<std::size_t>(remap[static_cast<std::size_t>(leaf)])];
  }
  return flows;
}

}  // namespace

FixedPlayReport fixed_fictitious_play(const FixedSwitchInstance& inst, const std::vector<double>& start, double rho0,
                                      const FixedPlayOptions& opts) {
  if (!(rho0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "rho0 must be positive");
  if (start.size() != inst.nodes().size()) throw Error(ErrorCode::DimensionMismatch, "one share per node expected");
  const std::size_t P = inst.paths().size();
  FixedPlayReport rep;
  std::vector<double> flows(P, rho0);
  for (std::size_t p = 0; p < P; ++p) {
    for (int i : inst.paths()[p]) {
      const auto& ch = inst.children(inst.nodes()[static_cast<std::size_t>(i)].parent);
      double sum = 0.0;
      for (int c : ch) sum += start[static_cast<std::size_t>(c)];
      flows[p] *= sum > 0.0 ? start[static_cast<std::size_t>(i)] / sum : 1.0 / static_cast<double>(ch.size());
    }
  }
  for (int k = 0; k < opts.max_iter; ++k) {
    rep.iterations = k + 1;
    std::vector<int> support;
    for (std::size_t p = 0; p < P; ++p) {
      if (flows[p] > opts.support_floor * rho0) support.push_back(static_cast<int>(p));
    }
    if (!support.empty()) {
      const auto trial = equalize_on(inst, support, rho0);
      const auto cert = certify_fixed(inst, trial, 1e-12);
      if (cert.certified) {
        double d = 0.0;
        for (std::size_t p = 0; p < P; ++p) d += (trial[p] - flows[p]) * (trial[p] - flows[p]);
        rep.trace.push_back(std::sqrt(d));
        rep.certified = true;
        rep.flows = trial;
        rep.shares = shares_from_masses(inst, node_masses(inst, trial));
        rep.message = "equal costs on the support, no cheaper unused path";
        return rep;
      }
    }
    const auto costs = fixed_path_costs(inst, flows);
    const double best = *std::min_element(costs.begin(), costs.end());
    std::vector<double> br(P, 0.0);
    int count = 0;
    for (std::size_t p = 0; p < P; ++p) count += costs[p] <= best + 1e-12 * (1.0 + std::abs(best));
    double d = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      if (costs[p] <= best + 1e-12 * (1.0 + std::abs(best))) br[p] = rho0 / count;
      d += (br[p] - flows[p]) * (br[p] - flows[p]);
    }
    rep.trace.push_back(std::sqrt(d));
    if (std::sqrt(d) < opts.tol * rho0) {
      rep.certified = certify_fixed(inst, flows, opts.tol).certified;
      break;
    }
    const double eta = opts.eta > 0.0 ? opts.eta : 1.0 / (k + 2.0);
    for (std::size_t p = 0; p < P; ++p) flows[p] = (1.0 - eta) * flows[p] + eta * br[p];
  }
  rep.flows = flows;
  rep.shares = shares_from_masses(inst, node_masses(inst, flows));
  if (rep.message.empty()) rep.message = rep.certified ? "converged" : "no certified equilibrium within max_iter";
  return rep;
}

bool MonotonicityReport::passed() const {
  return strictness_violations == 0 &&
         std::all_of(violations.begin(), violations.end(), [](int v) { return v == 0; });
}

namespace {

std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> x(n);
  double s = 0.0;
  for (double& v : x) s += (v = e(rng));
  for (double& v : x) v /= s;
  return x;
}

}  // namespace

MonotonicityReport check_monotonicity(const FixedSwitchInstance& inst, int trials,
                                      const std::vector<double>& rho0_samples, std::uint64_t seed) {
  if (rho0_samples.empty()) throw Error(ErrorCode::InvalidArgument, "at least one rho0 sample is needed");
  for (double r : rho0_samples) {
    if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "rho0 samples must be positive");
  }
  MonotonicityReport rep;
  rep.samples = trials;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto& nodes = inst.nodes();
  auto slope = [&](int i) { return nodes[static_cast<std::size_t>(i)].slope; };
  auto weight = [&](int i) { return nodes[static_cast<std::size_t>(i)].residence(); };
  auto record = [&](std::size_t which, double v, const std::string& where) {
    rep.min_values[which] = std::min(rep.min_values[which], v);
    if (!(v > 0.0) && rep.violations[which]++ == 0) rep.messages.push_back(where);
  };

  if (inst.is_parallel()) {
    rep.form = "parallel";
    rep.min_values.assign(1, std::numeric_limits<double>::infinity());
    rep.violations.assign(1, 0);
    const auto& links = inst.children(0);
    for (int s = 0; s < trials; ++s) {
      const double rho0 = rho0_samples[static_cast<std::size_t>(s) % rho0_samples.size()];
      const auto a = random_simplex(links.size(), rng);
      const auto b = random_simplex(links.size(), rng);
      double sum = 0.0;
      bool flat = false;
      for (std::size_t i = 0; i < links.size(); ++i) {
        const double c = weight(links[i]) * slope(links[i]);
        const double term = (c * a[i] * rho0 - c * b[i] * rho0) * (a[i] - b[i]);
        if (!(term > 0.0) && a[i] != b[i]) flat = true;
        sum += term;
      }
      if (flat && rep.strictness_violations++ == 0) {
        rep.messages.push_back("a link term vanishes while its coefficient changes: cost not strictly increasing");
      }
      std::ostringstream os;
      os << "sum <= 0 at sample " << s << " (value " << sum << ")";
      record(0, sum, os.str());
    }
    return rep;
  }

  // Two-level tree: root -> {leaf a, inner b}, b -> {leaf c, leaf d}.
  const auto& top = inst.children(0);
  if (top.size() != 2 || !inst.children(top[0]).empty() || inst.children(top[1]).size() != 2) {
    throw Error(ErrorCode::InvalidArgument, "monotonicity check supports parallel links and the two-level tree");
  }
  const int A = top[0], B = top[1], Cn = inst.children(B)[0], D = inst.children(B)[1];
  rep.form = "tree";
  rep.min_values.assign(2, std::numeric_limits<double>::infinity());
  rep.violations.assign(2, 0);
  for (int s = 0; s < trials; ++s) {
    const double rho0 = rho0_samples[static_cast<std::size_t>(s) % rho0_samples.size()];
    const double l1a = u(rng), l1b = u(rng);
    const double l2a = 1.0 - l1a, l2b = 1.0 - l1b;
    const double l3a = u(rng), l3b = u(rng);
    const double l4a = 1.0 - l3a, l4b = 1.0 - l3b;
    const double lam = 1.0 - u(rng);  // (0, 1]

    const double t3 = (slope(Cn) * lam * l3a * rho0 - slope(Cn) * lam * l3b * rho0) * (l3a - l3b);
    const double t4 = (slope(D) * lam * l4a * rho0 - slope(D) * lam * l4b * rho0) * (l4a - l4b);
    const double first = t3 + t4;

    const double ta = weight(A) * (slope(A) * l1a * rho0 - slope(A) * l1b * rho0) * (l1a - l1b);
    const double tb = (weight(B) * (slope(B) * l2a * rho0 - slope(B) * l2b * rho0) +
                       weight(Cn) * (slope(Cn) * l2a * l3a * rho0 - slope(Cn) * l2b * l3b * rho0)) *
                      (l2a - l2b);
    const double second = ta + tb;

    const bool flat = (!(t3 > 0.0) && l3a != l3b) || (!(t4 > 0.0) && l4a != l4b) || (!(ta > 0.0) && l1a != l1b);
    if (flat && rep.strictness_violations++ == 0) {
      rep.messages.push_back("a node term vanishes while its coefficient changes: cost not strictly increasing");
    }
    std::ostringstream os1, os2;
    os1 << "inner-branch inequality <= 0 at sample " << s << " (value " << first << ")";
    os2 << "top-level inequality <= 0 at sample " << s << ": l1' = " << l1a << ", l1'' = " << l1b
        << ", l23' = " << l3a << ", l23'' = " << l3b << ", rho0 = " << rho0 << " (value " << second << ")";
    record(0, first, os1.str());
    record(1, second, os2.str());
  }
  return rep;
}

}  // namespace mfg
