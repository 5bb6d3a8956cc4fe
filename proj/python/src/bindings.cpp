#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mfgswitch/cli_io.hpp"
#include "mfgswitch/discretization.hpp"
#include "mfgswitch/equilibrium.hpp"
#include "mfgswitch/errors.hpp"
#include "mfgswitch/fixed_instant.hpp"
#include "mfgswitch/flow_builder.hpp"
#include "mfgswitch/value_solver.hpp"

namespace py = pybind11;
using namespace mfg;

namespace {

std::vector<std::string> rationals(const std::vector<Rational>& v) {
  std::vector<std::string> out;
  for (const auto& r : v) out.push_back(r.str());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mean-field switching games on target-visiting networks";

  static py::exception<Error> error(m, "Error", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<Node>(m, "Node")
      .def(py::init<int, std::uint32_t>(), py::arg("num_targets"), py::arg("id"))
      .def_static("from_bits", &Node::from_bits)
      .def_property_readonly("id", &Node::id)
      .def_property_readonly("num_targets", &Node::num_targets)
      .def("bits", &Node::bits)
      .def("ones_count", &Node::ones_count)
      .def("__eq__", [](const Node& a, const Node& b) { return a == b; })
      .def("__hash__", [](const Node& a) { return a.id(); })
      .def("__repr__", [](const Node& a) { return "Node('" + a.bits() + "')"; });
  m.def("successors", &successors);

  py::class_<CostParams>(m, "CostParams")
      .def(py::init<>())
      .def(py::init([](int n, double T, std::vector<double> w, double earliness, double miss) {
             CostParams p;
             p.num_targets = n;
             p.horizon = T;
             p.weights = std::move(w);
             p.earliness_rate = earliness;
             p.miss_penalty = miss;
             p.validate();
             return p;
           }),
           py::arg("num_targets"), py::arg("horizon"), py::arg("weights"), py::arg("earliness_rate") = 1.0,
           py::arg("miss_penalty") = 1.0)
      .def_readwrite("num_targets", &CostParams::num_targets)
      .def_readwrite("horizon", &CostParams::horizon)
      .def_readwrite("weights", &CostParams::weights)
      .def_readwrite("earliness_rate", &CostParams::earliness_rate)
      .def_readwrite("miss_penalty", &CostParams::miss_penalty)
      .def("validate", &CostParams::validate);

  py::class_<StepProfile>(m, "StepProfile")
      .def(py::init<std::vector<double>, std::vector<double>, double>(), py::arg("breakpoints"), py::arg("values"),
           py::arg("terminal"))
      .def_property_readonly("breakpoints", &StepProfile::breakpoints)
      .def_property_readonly("values", &StepProfile::values)
      .def_property_readonly("terminal", &StepProfile::terminal)
      .def("at", &StepProfile::at)
      .def("piece_count", &StepProfile::piece_count);
  m.def("time_integral", py::overload_cast<const StepProfile&>(&time_integral));
  m.def("l2_distance", &l2_distance);

  py::class_<MassField>(m, "MassField")
      .def(py::init<std::vector<StepProfile>, double>(), py::arg("profiles"), py::arg("total_mass"))
      .def_static("constant",
                  [](double T, const std::vector<double>& masses) { return MassField::constant(T, masses); })
      .def("__len__", &MassField::size)
      .def("__getitem__", &MassField::operator[], py::return_value_policy::copy)
      .def_property_readonly("profiles", &MassField::profiles)
      .def_property_readonly("total_mass", &MassField::total_mass)
      .def_property_readonly("horizon", &MassField::horizon)
      .def("max_piece_count", &MassField::max_piece_count)
      .def("to_json", &mass_json)
      .def("to_csv", &mass_csv)
      .def_static("from_json", &read_mass_json);
  m.def("field_l2_distance", &field_l2_distance);
  m.def("blend", &blend);
  m.def("check_conservation", &check_conservation, py::arg("rho"), py::arg("tol") = 0.0);

  py::enum_<SolveMode>(m, "SolveMode").value("GRID", SolveMode::Grid).value("ANALYTIC", SolveMode::Analytic);

  py::class_<SolveOptions>(m, "SolveOptions")
      .def(py::init<>())
      .def_readwrite("mode", &SolveOptions::mode)
      .def_readwrite("tie_rel", &SolveOptions::tie_rel)
      .def_readwrite("check_grid", &SolveOptions::check_grid);

  py::class_<TimeGrid>(m, "TimeGrid")
      .def(py::init<double, int>(), py::arg("horizon"), py::arg("steps"))
      .def_property_readonly("steps", &TimeGrid::steps)
      .def_property_readonly("step", &TimeGrid::step)
      .def("time", &TimeGrid::time);

  py::class_<ArgminPair>(m, "ArgminPair")
      .def_readonly("successor", &ArgminPair::successor)
      .def_readonly("tau", &ArgminPair::tau)
      .def_readonly("grid_index", &ArgminPair::grid_index);

  py::class_<ValueTable>(m, "ValueTable")
      .def_property_readonly("grid", &ValueTable::grid)
      .def_property_readonly("num_targets", &ValueTable::num_targets)
      .def("value", py::overload_cast<std::uint32_t, int>(&ValueTable::value, py::const_))
      .def("argmins", &ValueTable::argmins)
      .def("min_gap", &ValueTable::min_gap)
      .def("phi_single_valued", &ValueTable::phi_single_valued)
      .def("to_csv", &value_csv);
  m.def("solve_value",
        py::overload_cast<const MassField&, const CostParams&, const TimeGrid&, const SolveOptions&>(&solve_value),
        py::arg("rho"), py::arg("params"), py::arg("grid"), py::arg("options") = SolveOptions{});
  m.def("phi_two_step", &phi_two_step, py::arg("cbar_in"), py::arg("cbar_out"), py::arg("t"), py::arg("horizon"));

  py::class_<EpsPartition>(m, "EpsPartition")
      .def(py::init<double, int, int>(), py::arg("horizon"), py::arg("m"), py::arg("grid_divisor") = 1)
      .def_property_readonly("epsilon", &EpsPartition::epsilon)
      .def_property_readonly("m", &EpsPartition::m)
      .def("node", &EpsPartition::node)
      .def("value_grid", &EpsPartition::value_grid);
  m.def("round_instant", &round_instant);

  py::class_<EpsPair>(m, "EpsPair")
      .def_readonly("successor", &EpsPair::successor)
      .def_readonly("node_index", &EpsPair::node_index)
      .def_readonly("tau", &EpsPair::tau)
      .def_readonly("bumped", &EpsPair::bumped);
  m.def("eps_argmin_map", &eps_argmin_map);

  py::class_<PlanTarget>(m, "PlanTarget")
      .def_readonly("successor", &PlanTarget::successor)
      .def_readonly("k", &PlanTarget::k)
      .def_readonly("tau", &PlanTarget::tau)
      .def_readonly("weight", &PlanTarget::lambda);
  py::class_<PlanEntry>(m, "PlanEntry")
      .def_property_readonly("node", [](const PlanEntry& e) { return e.state.node; })
      .def_property_readonly("k", [](const PlanEntry& e) { return e.state.k; })
      .def_readonly("t", &PlanEntry::t)
      .def_readonly("targets", &PlanEntry::targets)
      .def_readonly("free", &PlanEntry::free);
  py::class_<DecisionPlan>(m, "DecisionPlan")
      .def_readonly("entries", &DecisionPlan::entries)
      .def("to_json", &plan_json);

  m.def(
      "best_response",
      [](const MassField& rho, const CostParams& params, const EpsPartition& part, const MassField& initial,
         const SolveOptions& opts) {
        const auto table = solve_value(rho, params, part.value_grid(), opts);
        const auto graph = build_flow_graph(table, part, initial);
        const auto plan = uniform_plan(graph);
        return py::make_tuple(combine(plan, graph, initial), plan);
      },
      py::arg("rho"), py::arg("params"), py::arg("partition"), py::arg("initial"),
      py::arg("options") = SolveOptions{});

  py::class_<EquilibriumOptions>(m, "EquilibriumOptions")
      .def(py::init<>())
      .def_readwrite("tol", &EquilibriumOptions::tol)
      .def_readwrite("max_iter", &EquilibriumOptions::max_iter)
      .def_readwrite("eta", &EquilibriumOptions::eta)
      .def_readwrite("solve", &EquilibriumOptions::solve)
      .def_readwrite("polish", &EquilibriumOptions::polish)
      .def_readwrite("polish_rounds", &EquilibriumOptions::polish_rounds);

  py::class_<EquilibriumReport>(m, "EquilibriumReport")
      .def_readonly("rho", &EquilibriumReport::rho)
      .def_readonly("certified", &EquilibriumReport::certified)
      .def_readonly("residual", &EquilibriumReport::residual)
      .def_readonly("iterations", &EquilibriumReport::iterations)
      .def_readonly("trace", &EquilibriumReport::trace)
      .def_readonly("min_gap", &EquilibriumReport::min_gap)
      .def_readonly("phi_single_valued", &EquilibriumReport::phi_single_valued)
      .def_readonly("plan", &EquilibriumReport::plan)
      .def_readonly("message", &EquilibriumReport::message);
  m.def("find_equilibrium", &find_equilibrium, py::arg("params"), py::arg("initial"), py::arg("partition"),
        py::arg("options") = EquilibriumOptions{});

  py::class_<RefinementReport>(m, "RefinementReport")
      .def_readonly("m", &RefinementReport::m)
      .def_readonly("reports", &RefinementReport::reports)
      .def_readonly("distances", &RefinementReport::distances)
      .def_readonly("piece_counts", &RefinementReport::piece_counts)
      .def_readonly("single_valued", &RefinementReport::single_valued)
      .def("all_certified", &RefinementReport::all_certified)
      .def("distances_decreasing", &RefinementReport::distances_decreasing);
  m.def("refine_epsilon", &refine_epsilon, py::arg("params"), py::arg("initial"), py::arg("m_sequence"),
        py::arg("grid_steps"), py::arg("options") = EquilibriumOptions{});

  m.def("solve_parallel_links", &solve_parallel_links, py::arg("slopes"), py::arg("rho0") = 1.0);
  m.def(
      "solve_parallel_links_exact",
      [](const std::vector<long long>& slopes) {
        std::vector<Rational> s;
        for (auto c : slopes) s.emplace_back(c);
        return rationals(solve_parallel_links_exact(s));
      },
      py::arg("slopes"), "Exact shares for integer slopes, as 'p/q' strings.");
  m.def("solve_example3", [] {
    const auto s = solve_example3();
    py::dict d;
    d["lambda1"] = s.lambda1.str();
    d["lambda2"] = s.lambda2.str();
    d["lambda23"] = s.lambda23.str();
    d["lambda24"] = s.lambda24.str();
    d["distribution"] = rationals(s.distribution);
    d["path_cost"] = s.path_cost.str();
    return d;
  });

  py::class_<FixedSwitchInstance>(m, "FixedSwitchInstance")
      .def_static("parallel_links", &FixedSwitchInstance::parallel_links)
      .def_static("example_tree", &FixedSwitchInstance::example_tree)
      .def("with_slope", &FixedSwitchInstance::with_slope);
  py::class_<MonotonicityReport>(m, "MonotonicityReport")
      .def_readonly("form", &MonotonicityReport::form)
      .def_readonly("samples", &MonotonicityReport::samples)
      .def_readonly("min_values", &MonotonicityReport::min_values)
      .def_readonly("violations", &MonotonicityReport::violations)
      .def_readonly("strictness_violations", &MonotonicityReport::strictness_violations)
      .def_readonly("messages", &MonotonicityReport::messages)
      .def("passed", &MonotonicityReport::passed);
  m.def("check_monotonicity", &check_monotonicity, py::arg("instance"), py::arg("trials"), py::arg("rho0_samples"),
        py::arg("seed") = 1);

  py::class_<RunConfig>(m, "RunConfig")
      .def_readonly("N", &RunConfig::N)
      .def_readonly("T", &RunConfig::T)
      .def_readonly("m", &RunConfig::m)
      .def_readonly("grid_divisor", &RunConfig::grid_divisor)
      .def_readonly("cost", &RunConfig::cost)
      .def_readonly("initial", &RunConfig::initial)
      .def_readwrite("solver", &RunConfig::solver)
      .def_readwrite("field", &RunConfig::field)
      .def("partition", &RunConfig::partition)
      .def("initial_field", &RunConfig::initial_field);
  m.def("parse_config", [](const std::string& text) { return parse_config(text); });
  m.def(
      "execute",
      [](const RunConfig& cfg, const std::string& command) {
        const auto r = execute(cfg, parse_command(command));
        return py::make_tuple(r.status, r.summary, r.files);
      },
      py::arg("config"), py::arg("command"), "Runs a subcommand in memory: (status, summary, {file: text}).");
}
