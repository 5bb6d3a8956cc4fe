#include "mfgswitch/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mfgswitch/discretization.hpp"
#include "mfgswitch/errors.hpp"
#include "mfgswitch/fixed_instant.hpp"
#include "mfgswitch/network.hpp"

namespace mfg {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ParseError, (path.empty() ? std::string("<root>") : path) + ": " + what);
}

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ValidationError, field + ": " + what);
}

std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void only_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) parse_fail(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (allowed.count(key)) continue;
    std::string hint;
    if (key == "epsilon" || key == "eps") hint = " (use m: epsilon = T/m)";
    parse_fail(child(path, key), "unknown key" + hint);
  }
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) parse_fail(path, "expected a number");
  return v.get<double>();
}

long long get_integer(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  parse_fail(path, "expected an integer");
}

int get_int(const json& v, const std::string& path) {
  const long long x = get_integer(v, path);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) parse_fail(path, "out of range");
  return static_cast<int>(x);
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) parse_fail(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) parse_fail(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// Node-indexed values given as {"id": x} or as an array of 2^N entries.
std::vector<double> node_values(const json& v, const std::string& path, std::size_t nodes, double fill,
                                bool require_all) {
  std::vector<double> out(nodes, fill);
  if (v.is_array()) {
    if (v.size() != nodes) invalid(path, "expected " + std::to_string(nodes) + " entries");
    for (std::size_t i = 0; i < nodes; ++i) out[i] = get_number(v[i], path + "[" + std::to_string(i) + "]");
    return out;
  }
  if (!v.is_object()) parse_fail(path, "expected an object keyed by node id or an array");
  std::vector<bool> seen(nodes, false);
  for (const auto& [key, val] : v.items()) {
    std::size_t id = 0;
    const auto* b = key.data();
    const auto* e = key.data() + key.size();
    const auto [ptr, ec] = std::from_chars(b, e, id);
    if (key.empty() || ec != std::errc() || ptr != e) parse_fail(child(path, key), "node keys are decimal node ids");
    if (id >= nodes) invalid(child(path, key), "node id out of range");
    out[id] = get_number(val, child(path, key));
    seen[id] = true;
  }
  if (require_all && !std::all_of(seen.begin(), seen.end(), [](bool s) { return s; })) {
    invalid(path, "every node needs an entry");
  }
  return out;
}

std::string position(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void parse_solver(const json& s, RunConfig& cfg) {
  only_keys(s, "solver", {"tol", "max_iter", "eta", "mode", "polish", "polish_rounds", "tie_rel", "check_grid"});
  auto& o = cfg.solver;
  if (s.contains("tol")) o.tol = get_number(s["tol"], "solver.tol");
  if (s.contains("max_iter")) o.max_iter = get_int(s["max_iter"], "solver.max_iter");
  if (s.contains("eta")) {
    const auto& e = s["eta"];
    if (e.is_string()) {
      if (e.get<std::string>() != "harmonic") parse_fail("solver.eta", "expected \"harmonic\" or a number");
      o.eta = 0.0;
    } else {
      o.eta = get_number(e, "solver.eta");
      if (!(o.eta > 0.0 && o.eta <= 1.0)) invalid("solver.eta", "constant damping must lie in (0, 1]");
    }
  }
  if (s.contains("mode")) {
    const auto m = get_string(s["mode"], "solver.mode");
    if (m == "grid") {
      o.solve.mode = SolveMode::Grid;
    } else if (m == "analytic") {
      o.solve.mode = SolveMode::Analytic;
    } else {
      parse_fail("solver.mode", "expected \"grid\" or \"analytic\"");
    }
  }
  if (s.contains("polish")) {
    if (!s["polish"].is_boolean()) parse_fail("solver.polish", "expected a boolean");
    o.polish = s["polish"].get<bool>();
  }
  if (s.contains("polish_rounds")) o.polish_rounds = get_int(s["polish_rounds"], "solver.polish_rounds");
  if (s.contains("tie_rel")) o.solve.tie_rel = get_number(s["tie_rel"], "solver.tie_rel");
  if (s.contains("check_grid")) {
    if (!s["check_grid"].is_boolean()) parse_fail("solver.check_grid", "expected a boolean");
    o.solve.check_grid = s["check_grid"].get<bool>();
  }
  if (!(o.tol > 0.0) || !std::isfinite(o.tol)) invalid("solver.tol", "must be positive");
  if (o.max_iter < 1) invalid("solver.max_iter", "must be at least 1");
  if (o.polish_rounds < 0) invalid("solver.polish_rounds", "must be non-negative");
  if (!(o.solve.tie_rel >= 0.0)) invalid("solver.tie_rel", "must be non-negative");
}

void parse_monotonicity(const json& s, RunConfig& cfg) {
  only_keys(s, "monotonicity", {"instance", "slopes", "trials", "rho0"});
  auto& m = cfg.monotonicity;
  if (s.contains("instance")) {
    m.instance = get_string(s["instance"], "monotonicity.instance");
    if (m.instance != "parallel" && m.instance != "tree") {
      parse_fail("monotonicity.instance", "expected \"parallel\" or \"tree\"");
    }
  }
  if (s.contains("slopes")) m.slopes = number_list(s["slopes"], "monotonicity.slopes");
  if (s.contains("trials")) m.trials = get_int(s["trials"], "monotonicity.trials");
  if (s.contains("rho0")) m.rho0 = number_list(s["rho0"], "monotonicity.rho0");
  if (m.slopes.empty()) invalid("monotonicity.slopes", "needs at least one slope");
  if (m.trials < 1) invalid("monotonicity.trials", "must be at least 1");
  if (m.rho0.empty() || std::any_of(m.rho0.begin(), m.rho0.end(), [](double r) { return !(r > 0.0); })) {
    invalid("monotonicity.rho0", "needs positive values");
  }
}

std::string node_bits(int N, std::uint32_t id) { return Node(N, id).bits(); }

struct Table {
  std::ostringstream out;
  void row(std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
      if (!first) out << ',';
      out << c;
      first = false;
    }
    out << '\n';
  }
};

int node_bits_count(std::size_t nodes) {
  int N = 0;
  while ((std::size_t{1} << N) < nodes) ++N;
  return N;
}

json profile_json(const StepProfile& p) {
  return json{{"breakpoints", p.breakpoints()}, {"values", p.values()}, {"terminal", p.terminal()}};
}

json field_json(const MassField& rho) {
  json profiles = json::array();
  for (const auto& p : rho.profiles()) profiles.push_back(profile_json(p));
  return json{{"total", rho.total_mass()}, {"profiles", profiles}};
}

MassField field_from_json(const json& j) {
  const json& f = j.contains("rho") ? j["rho"] : j;
  only_keys(f, "rho", {"total", "profiles"});
  if (!f.contains("total") || !f.contains("profiles") || !f["profiles"].is_array()) {
    parse_fail("rho", "needs total and profiles");
  }
  std::vector<StepProfile> profiles;
  for (std::size_t i = 0; i < f["profiles"].size(); ++i) {
    const auto& p = f["profiles"][i];
    const std::string path = "rho.profiles[" + std::to_string(i) + "]";
    only_keys(p, path, {"breakpoints", "values", "terminal"});
    profiles.emplace_back(number_list(p.value("breakpoints", json::array()), path + ".breakpoints"),
                          number_list(p.value("values", json::array()), path + ".values"),
                          get_number(p.value("terminal", json()), path + ".terminal"));
  }
  return MassField(std::move(profiles), get_number(f["total"], "rho.total"));
}

json plan_to_json(const DecisionPlan& plan, int N) {
  json entries = json::array();
  for (const auto& e : plan.entries) {
    json targets = json::array();
    for (const auto& t : e.targets) {
      targets.push_back(json{{"successor", t.successor.id()},
                             {"bits", t.successor.bits()},
                             {"k", t.k},
                             {"tau", t.tau},
                             {"lambda", t.lambda}});
    }
    entries.push_back(json{{"node", e.state.node.id()},
                           {"bits", node_bits(N, e.state.node.id())},
                           {"k", e.state.k},
                           {"t", e.t},
                           {"free", e.free},
                           {"targets", targets}});
  }
  return json{{"entries", entries}};
}

std::string to_text(const json& j) { return j.dump(2) + "\n"; }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

MassField load_field(const RunConfig& cfg) {
  if (cfg.field.empty()) return cfg.initial_field();
  const std::string text = read_file(cfg.field);
  const bool is_csv = std::filesystem::path(cfg.field).extension() == ".csv";
  MassField rho = is_csv ? read_mass_csv(text) : read_mass_json(text);
  if (rho.size() != node_count(cfg.N)) invalid("field", "node count does not match N");
  if (rho.horizon() != cfg.T) invalid("field", "horizon does not match T");
  return rho;
}

json base_report(const RunConfig& cfg, Command cmd) {
  const auto part = cfg.partition();
  return json{{"command", command_name(cmd)},
              {"N", cfg.N},
              {"T", cfg.T},
              {"m", cfg.m},
              {"epsilon", part.epsilon()},
              {"grid_divisor", cfg.grid_divisor},
              {"grid_steps", part.value_grid().steps()}};
}

double json_min_gap(double g) { return std::isfinite(g) ? g : -1.0; }

json rational_list(const std::vector<Rational>& v) {
  json out = json::array();
  for (const auto& r : v) out.push_back(r.str());
  return out;
}

RunResult solve_value_cmd(const RunConfig& cfg) {
  RunResult r;
  const auto rho = load_field(cfg);
  const auto table = solve_value(rho, cfg.cost, cfg.partition().value_grid(), cfg.solver.solve);
  auto rep = base_report(cfg, Command::SolveValue);
  rep["mode"] = table.mode() == SolveMode::Grid ? "grid" : "analytic";
  rep["min_gap"] = json_min_gap(table.min_gap());
  rep["phi_single_valued"] = table.phi_single_valued();
  json origin = json::array();
  for (std::uint32_t id = 0; id < node_count(cfg.N); ++id) origin.push_back(table.value(id, 0));
  rep["value_at_0"] = origin;
  r.files["report.json"] = to_text(rep);
  r.files["value.csv"] = value_csv(table);
  r.files["argmin.csv"] = argmin_csv(table);
  r.files["plot.csv"] = plot_csv(nullptr, &table);
  r.summary = "value table solved on " + std::to_string(table.grid().steps()) + " steps";
  return r;
}

RunResult best_response_cmd(const RunConfig& cfg) {
  RunResult r;
  const auto part = cfg.partition();
  const auto rho = load_field(cfg);
  const auto initial = cfg.initial_field();
  const auto table = solve_value(rho, cfg.cost, part.value_grid(), cfg.solver.solve);
  const auto graph = build_flow_graph(table, part, initial);
  const auto plan = uniform_plan(graph);
  const auto br = combine(plan, graph, initial);
  auto rep = base_report(cfg, Command::BestResponse);
  rep["distance"] = field_l2_distance(rho, br);
  rep["decision_states"] = graph.states.size();
  rep["conserved"] = check_conservation(br, 0.0);
  rep["rho"] = field_json(br);
  r.files["report.json"] = to_text(rep);
  r.files["mass.csv"] = mass_csv(br);
  r.files["plan.json"] = plan_json(plan);
  r.files["value.csv"] = value_csv(table);
  r.files["plot.csv"] = plot_csv(&br, &table);
  r.summary = "best response at distance " + format_number(field_l2_distance(rho, br));
  return r;
}

RunResult equilibrium_cmd(const RunConfig& cfg) {
  RunResult r;
  const auto part = cfg.partition();
  const auto initial = cfg.initial_field();
  const auto eq = find_equilibrium(cfg.cost, initial, part, cfg.solver);
  auto rep = base_report(cfg, Command::Equilibrium);
  rep["certified"] = eq.certified;
  rep["residual"] = eq.residual;
  rep["iterations"] = eq.iterations;
  rep["trace"] = eq.trace;
  rep["min_gap"] = json_min_gap(eq.min_gap);
  rep["phi_single_valued"] = eq.phi_single_valued;
  rep["message"] = eq.message;
  rep["conserved"] = check_conservation(eq.rho, 0.0);
  rep["rho"] = field_json(eq.rho);
  r.files["report.json"] = to_text(rep);
  r.files["mass.csv"] = mass_csv(eq.rho);
  r.files["plan.json"] = plan_json(eq.plan);
  const auto table = solve_value(eq.rho, cfg.cost, part.value_grid(), cfg.solver.solve);
  r.files["value.csv"] = value_csv(table);
  r.files["plot.csv"] = plot_csv(&eq.rho, &table);
  r.status = eq.certified ? 0 : 2;
  r.summary = eq.message;
  return r;
}

RunResult refine_cmd(const RunConfig& cfg) {
  RunResult r;
  std::vector<int> ms = cfg.m_sequence;
  if (ms.empty()) ms = {8, 16, 32, 64};
  int steps = cfg.refine_grid_steps;
  if (steps == 0) {
    steps = ms.back() * std::max(1, static_cast<int>(std::ceil(256.0 / ms.back())));
  }
  const auto rep = refine_epsilon(cfg.cost, cfg.initial_field(), ms, steps, cfg.solver);
  auto out = base_report(cfg, Command::RefineEpsilon);
  out["grid_steps"] = steps;
  out["m_sequence"] = rep.m;
  out["distances"] = rep.distances;
  out["piece_counts"] = rep.piece_counts;
  out["single_valued"] = rep.single_valued;
  out["all_certified"] = rep.all_certified();
  out["distances_decreasing"] = rep.distances_decreasing();
  json runs = json::array();
  for (std::size_t i = 0; i < rep.reports.size(); ++i) {
    const auto& e = rep.reports[i];
    runs.push_back(json{{"m", rep.m[i]},
                        {"certified", e.certified},
                        {"residual", e.residual},
                        {"iterations", e.iterations},
                        {"rho", field_json(e.rho)}});
  }
  out["runs"] = runs;
  r.files["report.json"] = to_text(out);
  if (!rep.reports.empty()) {
    r.files["mass.csv"] = mass_csv(rep.reports.back().rho);
    r.files["plan.json"] = plan_json(rep.reports.back().plan);
    r.files["plot.csv"] = plot_csv(&rep.reports.back().rho, nullptr);
  }
  r.status = rep.all_certified() ? 0 : 2;
  r.summary = std::string(rep.all_certified() ? "all certified" : "some runs uncertified") +
              (rep.distances_decreasing() ? ", distances decreasing" : ", distances not decreasing");
  return r;
}

RunResult appendix_cmd(const RunConfig& cfg) {
  RunResult r;
  auto out = base_report(cfg, Command::VerifyAppendixA);
  bool ok = true;

  const std::vector<Rational> slopes{Rational(1), Rational(2), Rational(3)};
  const auto three = solve_parallel_links_exact(slopes);
  const std::vector<Rational> three_ref{Rational(6, 11), Rational(3, 11), Rational(2, 11)};
  const bool three_ok = three == three_ref;
  out["parallel_links"] = json{{"slopes", {1, 2, 3}},
                               {"shares", rational_list(three)},
                               {"expected", rational_list(three_ref)},
                               {"common_cost_per_rho0", Rational(three[0] * slopes[0]).str()},
                               {"match", three_ok}};
  const auto two = solve_parallel_links_exact({Rational(1), Rational(2)});
  const std::vector<Rational> two_ref{Rational(2, 3), Rational(1, 3)};
  out["two_links"] = json{{"slopes", {1, 2}},
                          {"shares", rational_list(two)},
                          {"expected", rational_list(two_ref)},
                          {"match", two == two_ref}};
  const auto ex = solve_example3();
  const std::vector<Rational> dist_ref{Rational(13, 18), Rational(5, 18), Rational(1, 9), Rational(1, 6)};
  const bool tree_ok = ex.lambda1 == Rational(13, 18) && ex.lambda2 == Rational(5, 18) &&
                       ex.lambda23 == Rational(2, 5) && ex.lambda24 == Rational(3, 5) &&
                       ex.distribution == dist_ref && ex.path_cost == Rational(13, 18);
  out["example_tree"] = json{{"lambda1", ex.lambda1.str()},
                             {"lambda2", ex.lambda2.str()},
                             {"lambda23", ex.lambda23.str()},
                             {"lambda24", ex.lambda24.str()},
                             {"distribution", rational_list(ex.distribution)},
                             {"expected_distribution", rational_list(dist_ref)},
                             {"path_cost", ex.path_cost.str()},
                             {"match", tree_ok}};
  ok = three_ok && two == two_ref && tree_ok;
  out["all_match"] = ok;
  r.files["report.json"] = to_text(out);
  r.status = ok ? 0 : 2;
  r.summary = "parallel links " + three[0].str() + ", " + three[1].str() + ", " + three[2].str() +
              "; tree path cost " + ex.path_cost.str() + (ok ? "; all match" : "; MISMATCH");
  return r;
}

RunResult monotonicity_cmd(const RunConfig& cfg) {
  RunResult r;
  const auto& mc = cfg.monotonicity;
  auto out = base_report(cfg, Command::CheckMonotonicity);
  json checks = json::array();
  bool ok = true;
  std::vector<std::pair<std::string, FixedSwitchInstance>> instances;
  if (mc.instance.empty() || mc.instance == "parallel") {
    instances.emplace_back("parallel", FixedSwitchInstance::parallel_links(mc.slopes));
  }
  if (mc.instance.empty() || mc.instance == "tree") instances.emplace_back("tree", FixedSwitchInstance::example_tree());
  std::ostringstream summary;
  for (const auto& [name, inst] : instances) {
    const auto rep = check_monotonicity(inst, mc.trials, mc.rho0, cfg.seed);
    ok = ok && rep.passed();
    checks.push_back(json{{"instance", name},
                          {"form", rep.form},
                          {"samples", rep.samples},
                          {"min_values", rep.min_values},
                          {"violations", rep.violations},
                          {"strictness_violations", rep.strictness_violations},
                          {"messages", rep.messages},
                          {"passed", rep.passed()}});
    summary << name << (rep.passed() ? " passed" : " FAILED") << "; ";
  }
  out["checks"] = checks;
  out["passed"] = ok;
  r.files["report.json"] = to_text(out);
  r.status = ok ? 0 : 2;
  r.summary = summary.str();
  return r;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "malformed JSON at " + position(text, e.byte));
  }
  only_keys(j, "", {"N", "T", "m", "grid_divisor", "weights", "earliness_rate", "miss_penalty", "initial", "solver",
                    "seed", "m_sequence", "refine_grid_steps", "monotonicity", "field", "out"});
  for (const char* key : {"N", "T", "m", "weights", "initial"}) {
    if (!j.contains(key)) parse_fail(key, "required key missing");
  }
  RunConfig cfg;
  cfg.N = get_int(j["N"], "N");
  if (cfg.N < 1 || cfg.N > 10) invalid("N", "must lie in 1..10");
  cfg.T = get_number(j["T"], "T");
  if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) invalid("T", "must be positive and finite");
  cfg.m = get_int(j["m"], "m");
  if (cfg.m < 1) invalid("m", "must be at least 1");
  cfg.grid_divisor = j.contains("grid_divisor") ? get_int(j["grid_divisor"], "grid_divisor")
                                                : std::max(1, static_cast<int>(std::ceil(256.0 / cfg.m)));
  if (cfg.grid_divisor < 1) invalid("grid_divisor", "must be at least 1");

  const std::size_t nodes = node_count(cfg.N);
  cfg.cost.num_targets = cfg.N;
  cfg.cost.horizon = cfg.T;
  cfg.cost.weights = node_values(j["weights"], "weights", nodes, 0.0, true);
  if (j.contains("earliness_rate")) cfg.cost.earliness_rate = get_number(j["earliness_rate"], "earliness_rate");
  if (j.contains("miss_penalty")) cfg.cost.miss_penalty = get_number(j["miss_penalty"], "miss_penalty");
  try {
    cfg.cost.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, e.what());
  }

  cfg.initial = node_values(j["initial"], "initial", nodes, 0.0, false);
  double total = 0.0;
  for (double x : cfg.initial) {
    if (!std::isfinite(x) || x < 0.0) invalid("initial", "masses must be finite and non-negative");
    total += x;
  }
  if (!(total > 0.0)) invalid("initial", "total mass must be positive");

  if (j.contains("solver")) parse_solver(j["solver"], cfg);
  if (j.contains("seed")) {
    const long long s = get_integer(j["seed"], "seed");
    if (s < 0) invalid("seed", "must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (j.contains("m_sequence")) {
    if (!j["m_sequence"].is_array()) parse_fail("m_sequence", "expected an array");
    for (std::size_t i = 0; i < j["m_sequence"].size(); ++i) {
      cfg.m_sequence.push_back(get_int(j["m_sequence"][i], "m_sequence[" + std::to_string(i) + "]"));
    }
    for (std::size_t i = 0; i < cfg.m_sequence.size(); ++i) {
      if (cfg.m_sequence[i] < 1 || (i > 0 && cfg.m_sequence[i] <= cfg.m_sequence[i - 1])) {
        invalid("m_sequence", "must be positive and increasing");
      }
    }
  }
  if (j.contains("refine_grid_steps")) {
    cfg.refine_grid_steps = get_int(j["refine_grid_steps"], "refine_grid_steps");
    if (cfg.refine_grid_steps < 1) invalid("refine_grid_steps", "must be at least 1");
  }
  if (j.contains("monotonicity")) parse_monotonicity(j["monotonicity"], cfg);
  if (j.contains("field")) cfg.field = get_string(j["field"], "field");
  if (j.contains("out")) cfg.out = get_string(j["out"], "out");
  return cfg;
}

Command parse_command(std::string_view name) {
  for (Command c : {Command::SolveValue, Command::BestResponse, Command::Equilibrium, Command::RefineEpsilon,
                    Command::VerifyAppendixA, Command::CheckMonotonicity}) {
    if (command_name(c) == name) return c;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown command " + std::string(name));
}

std::string_view command_name(Command cmd) {
  switch (cmd) {
    case Command::SolveValue:
      return "solve-value";
    case Command::BestResponse:
      return "best-response";
    case Command::Equilibrium:
      return "equilibrium";
    case Command::RefineEpsilon:
      return "refine-epsilon";
    case Command::VerifyAppendixA:
      return "verify-appendix-a";
    case Command::CheckMonotonicity:
      return "check-monotonicity";
  }
  return "unknown";
}

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string mass_csv(const MassField& rho) {
  Table t;
  const int N = node_bits_count(rho.size());
  t.row({"node", "bits", "start", "end", "value"});
  for (std::size_t p = 0; p < rho.size(); ++p) {
    const auto& f = rho[p];
    const std::string id = std::to_string(p), bits = node_bits(N, static_cast<std::uint32_t>(p));
    for (std::size_t j = 0; j < f.piece_count(); ++j) {
      t.row({id, bits, format_number(f.breakpoints()[j]), format_number(f.breakpoints()[j + 1]),
             format_number(f.values()[j])});
    }
    t.row({id, bits, format_number(f.horizon()), format_number(f.horizon()), format_number(f.terminal())});
  }
  return t.out.str();
}

MassField read_mass_csv(std::string_view text, double total) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "node,bits,start,end,value") {
    throw Error(ErrorCode::ParseError, "mass.csv: bad header");
  }
  struct Acc {
    std::vector<double> br{0.0};
    std::vector<double> values;
    double terminal = 0.0;
    bool closed = false;
  };
  std::vector<Acc> acc;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    if (cells.size() != 5) throw Error(ErrorCode::ParseError, "mass.csv line " + std::to_string(lineno));
    auto num = [&](const std::string& s) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::ParseError, "mass.csv line " + std::to_string(lineno) + ": bad number");
      }
      return v;
    };
    const auto id = static_cast<std::size_t>(num(cells[0]));
    if (id != acc.size() && id + 1 != acc.size()) {
      throw Error(ErrorCode::ParseError, "mass.csv line " + std::to_string(lineno) + ": nodes out of order");
    }
    if (id == acc.size()) acc.emplace_back();
    auto& a = acc[id];
    if (a.closed) throw Error(ErrorCode::ParseError, "mass.csv line " + std::to_string(lineno) + ": after terminal");
    const double s = num(cells[2]), e = num(cells[3]), v = num(cells[4]);
    if (s == e) {
      a.terminal = v;
      a.closed = true;
    } else {
      if (s != a.br.back()) throw Error(ErrorCode::ParseError, "mass.csv line " + std::to_string(lineno) + ": gap");
      a.br.push_back(e);
      a.values.push_back(v);
    }
  }
  std::vector<StepProfile> profiles;
  double sum = 0.0;
  for (auto& a : acc) {
    if (!a.closed) throw Error(ErrorCode::ParseError, "mass.csv: missing terminal row");
    sum += a.terminal;
    profiles.emplace_back(std::move(a.br), std::move(a.values), a.terminal);
  }
  return MassField(std::move(profiles), total >= 0.0 ? total : sum);
}

std::string value_csv(const ValueTable& table) {
  Table t;
  const int N = table.num_targets();
  t.row({"node", "bits", "i", "t", "value"});
  for (std::uint32_t id = 0; id < node_count(N); ++id) {
    for (int i = 0; i <= table.grid().steps(); ++i) {
      t.row({std::to_string(id), node_bits(N, id), std::to_string(i), format_number(table.grid().time(i)),
             format_number(table.value(id, i))});
    }
  }
  return t.out.str();
}

std::string argmin_csv(const ValueTable& table) {
  Table t;
  const int N = table.num_targets();
  t.row({"node", "bits", "i", "t", "successor", "successor_bits", "tau"});
  for (std::uint32_t id = 0; id < node_count(N); ++id) {
    const Node p(N, id);
    if (p == Node::destination(N)) continue;
    for (int i = 0; i < table.grid().steps(); ++i) {
      for (const auto& a : argmin_map(table, p, i)) {
        t.row({std::to_string(id), p.bits(), std::to_string(i), format_number(table.grid().time(i)),
               std::to_string(a.successor.id()), a.successor.bits(), format_number(a.tau)});
      }
    }
  }
  return t.out.str();
}

std::string plot_csv(const MassField* rho, const ValueTable* table) {
  Table t;
  t.row({"series", "node", "bits", "t", "value"});
  if (rho != nullptr) {
    const int N = node_bits_count(rho->size());
    for (std::size_t p = 0; p < rho->size(); ++p) {
      const auto& f = (*rho)[p];
      const std::string id = std::to_string(p), bits = node_bits(N, static_cast<std::uint32_t>(p));
      for (std::size_t j = 0; j < f.piece_count(); ++j) {
        t.row({"mass", id, bits, format_number(f.breakpoints()[j]), format_number(f.values()[j])});
        t.row({"mass", id, bits, format_number(f.breakpoints()[j + 1]), format_number(f.values()[j])});
      }
      t.row({"mass", id, bits, format_number(f.horizon()), format_number(f.terminal())});
    }
  }
  if (table != nullptr) {
    const int N = table->num_targets();
    for (std::uint32_t id = 0; id < node_count(N); ++id) {
      for (int i = 0; i <= table->grid().steps(); ++i) {
        t.row({"value", std::to_string(id), node_bits(N, id), format_number(table->grid().time(i)),
               format_number(table->value(id, i))});
      }
    }
  }
  return t.out.str();
}

std::string mass_json(const MassField& rho) { return to_text(field_json(rho)); }

MassField read_mass_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "malformed JSON at " + position(text, e.byte));
  }
  if (j.is_object() && j.contains("rho")) return field_from_json(j["rho"]);
  return field_from_json(j);
}

std::string plan_json(const DecisionPlan& plan) {
  int N = 1;
  if (!plan.entries.empty()) N = plan.entries.front().state.node.num_targets();
  return to_text(plan_to_json(plan, N));
}

RunResult execute(const RunConfig& cfg, Command cmd) {
  try {
    switch (cmd) {
      case Command::SolveValue:
        return solve_value_cmd(cfg);
      case Command::BestResponse:
        return best_response_cmd(cfg);
      case Command::Equilibrium:
        return equilibrium_cmd(cfg);
      case Command::RefineEpsilon:
        return refine_cmd(cfg);
      case Command::VerifyAppendixA:
        return appendix_cmd(cfg);
      case Command::CheckMonotonicity:
        return monotonicity_cmd(cfg);
    }
  } catch (const std::exception& e) {
    RunResult r;
    r.status = 1;
    r.summary = e.what();
    return r;
  }
  return RunResult{1, "unknown command", {}};
}

int run(const RunConfig& cfg, Command cmd, const std::filesystem::path& out_dir, bool quiet) {
  const RunResult r = execute(cfg, cmd);
  if (r.status == 1) {
    std::cerr << "error: " << r.summary << "\n";
    return 1;
  }
  try {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, text] : r.files) {
      std::ofstream out(out_dir / name, std::ios::binary);
      out << text;
      if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + (out_dir / name).string());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (!quiet) std::cerr << command_name(cmd) << ": " << r.summary << "\n";
  return r.status;
}

}  // namespace mfg
