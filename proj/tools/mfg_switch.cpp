#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mfgswitch/cli_io.hpp"
#include "mfgswitch/errors.hpp"

namespace {

struct Args {
  std::string config;
  std::string out;
  bool quiet = false;
};

int dispatch(mfg::Command cmd, const Args& args) {
  std::ifstream in(args.config, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << args.config << "\n";
    return 1;
  }
  std::ostringstream text;
  text << in.rdbuf();
  mfg::RunConfig cfg;
  try {
    cfg = mfg::parse_config(text.str());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  const auto base = std::filesystem::path(args.config).parent_path();
  if (!cfg.field.empty() && std::filesystem::path(cfg.field).is_relative()) cfg.field = (base / cfg.field).string();
  std::filesystem::path out = args.out;
  if (out.empty()) out = cfg.out.empty() ? std::filesystem::path(".") : base / cfg.out;
  return mfg::run(cfg, cmd, out, args.quiet);
}

std::string describe(mfg::Command cmd) {
  switch (cmd) {
    case mfg::Command::SolveValue:
      return "value table and argmin map for a fixed mass field";
    case mfg::Command::BestResponse:
      return "eps-discretized best response to a fixed mass field";
    case mfg::Command::Equilibrium:
      return "certified eps-equilibrium search";
    case mfg::Command::RefineEpsilon:
      return "equilibria along an increasing sequence of m";
    case mfg::Command::VerifyAppendixA:
      return "exact fixed-instant reference solutions";
    case mfg::Command::CheckMonotonicity:
      return "sampled monotonicity of fixed-instant instances";
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field switching games on target-visiting networks"};
  app.require_subcommand(1);
  Args args;
  int status = 0;
  for (auto cmd : {mfg::Command::SolveValue, mfg::Command::BestResponse, mfg::Command::Equilibrium,
                   mfg::Command::RefineEpsilon, mfg::Command::VerifyAppendixA, mfg::Command::CheckMonotonicity}) {
    auto* sub = app.add_subcommand(std::string(mfg::command_name(cmd)), describe(cmd));
    sub->add_option("--config", args.config, "JSON run configuration")->required();
    sub->add_option("--out", args.out, "output directory (default: config \"out\" or .)");
    sub->add_flag("--quiet", args.quiet, "suppress the summary line");
    sub->callback([cmd, &args, &status] { status = dispatch(cmd, args); });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return status;
}
