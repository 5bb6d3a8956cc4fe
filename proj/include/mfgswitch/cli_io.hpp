#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mfgswitch/cost_model.hpp"
#include "mfgswitch/equilibrium.hpp"
#include "mfgswitch/flow_builder.hpp"
#include "mfgswitch/mass_profile.hpp"
#include "mfgswitch/value_solver.hpp"

namespace mfg {

struct MonotonicityConfig {
  /// "parallel", "tree", or empty for both stock instances.
  std::string instance;
  std::vector<double> slopes{1.0, 2.0, 3.0};
  int trials = 100000;
  std::vector<double> rho0{0.5, 1.0, 2.0};
};

struct RunConfig {
  int N = 1;
  double T = 1.0;
  int m = 1;
  int grid_divisor = 1;
  CostParams cost;
  /// Initial mass per node id (2^N entries).
  std::vector<double> initial;
  EquilibriumOptions solver;
  std::uint64_t seed = 1;
  std::vector<int> m_sequence;
  int refine_grid_steps = 0;
  MonotonicityConfig monotonicity;
  /// Optional mass field file (report.json with "rho", or mass.csv) used by
  /// solve-value and best-response instead of the constant initial field.
  std::string field;
  std::string out;

  EpsPartition partition() const { return EpsPartition(T, m, grid_divisor); }
  MassField initial_field() const { return MassField::constant(T, initial); }
};

/// Strict JSON schema: unknown keys raise ParseError with their path.
/// Throws ParseError (syntax, types) or ValidationError (invariants).
RunConfig parse_config(std::string_view text);

enum class Command { SolveValue, BestResponse, Equilibrium, RefineEpsilon, VerifyAppendixA, CheckMonotonicity };

/// Throws InvalidArgument for an unknown name.
Command parse_command(std::string_view name);
std::string_view command_name(Command cmd);

/// Shortest decimal that reads back to the same double.
std::string format_number(double x);

std::string mass_csv(const MassField& rho);
/// Inverse of mass_csv; the total is the sum of the terminal values unless given.
MassField read_mass_csv(std::string_view text, double total = -1.0);
std::string value_csv(const ValueTable& table);
std::string argmin_csv(const ValueTable& table);
/// Long format: series, node, bits, t, value. Step profiles are emitted as
/// piece endpoints so that a line plot draws the steps.
std::string plot_csv(const MassField* rho, const ValueTable* table);

/// JSON text of a mass field or plan (lossless numbers).
std::string mass_json(const MassField& rho);
MassField read_mass_json(std::string_view text);
std::string plan_json(const DecisionPlan& plan);

struct RunResult {
  /// 0 success, 2 uncertified or failed check, 1 input error.
  int status = 0;
  std::string summary;
  /// File name to contents.
  std::map<std::string, std::string> files;
};

/// Runs a pipeline in memory. Input errors give status 1 with the message
/// in summary.
RunResult execute(const RunConfig& cfg, Command cmd);

/// execute() plus writing the artifacts into out_dir. Messages go to stderr.
int run(const RunConfig& cfg, Command cmd, const std::filesystem::path& out_dir, bool quiet = false);

}  // namespace mfg
