#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "mfgswitch/cli_io.hpp"
#include "mfgswitch/errors.hpp"
#include "support.hpp"

using namespace mfg;

namespace {

const char* kMinimal = R"({"N":1,"T":2,"m":8,"weights":{"0":1,"1":1},"initial":{"0":1.0}})";

const char* kPair = R"({"N":2,"T":1,"m":8,"weights":[1,0.6,1.7,1.2],"miss_penalty":10,"initial":{"0":1}})";

ErrorCode code_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

bool same_field(const MassField& a, const MassField& b) {
  if (a.size() != b.size() || a.total_mass() != b.total_mass()) return false;
  for (std::size_t p = 0; p < a.size(); ++p) {
    if (a[p].breakpoints() != b[p].breakpoints() || a[p].values() != b[p].values() ||
        a[p].terminal() != b[p].terminal()) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const auto cfg = parse_config(kMinimal);
  CHECK(cfg.N == 1);
  CHECK(cfg.m == 8);
  CHECK(cfg.grid_divisor == 32);
  CHECK(cfg.partition().value_grid().steps() == 256);
  CHECK(cfg.cost.weights == std::vector<double>{1.0, 1.0});
  CHECK(cfg.cost.earliness_rate == 1.0);
  CHECK(cfg.initial == std::vector<double>{1.0, 0.0});
  CHECK(cfg.solver.eta == 0.0);
  CHECK(cfg.solver.solve.mode == SolveMode::Grid);
  CHECK(parse_config(R"({"N":1,"T":2,"m":300,"weights":[1,1],"initial":[1,0]})").grid_divisor == 1);
}

TEST_CASE("schema and invariant errors") {
  CHECK(code_of(R"({"N":1,"T":2,"m":8,"weights":[1,1],"initial":{"0":-1.0}})") == ErrorCode::ValidationError);
  CHECK(message_of(R"({"N":1,"T":2,"m":8,"weights":[1,1],"initial":{"0":-1.0}})").find("initial") !=
        std::string::npos);
  const std::string eps = R"({"N":1,"T":2,"epsilon":0.25,"weights":[1,1],"initial":[1,0]})";
  CHECK(code_of(eps) == ErrorCode::ParseError);
  CHECK(message_of(eps).find("use m") != std::string::npos);
  const std::string nested = R"({"N":1,"T":2,"m":8,"weights":[1,1],"initial":[1,0],"solver":{"tolerance":1}})";
  CHECK(message_of(nested).find("solver.tolerance") != std::string::npos);
  const std::string broken = "{\"N\":1,\n\"T\":2,\n\"m\":8,,}";
  CHECK(code_of(broken) == ErrorCode::ParseError);
  CHECK(message_of(broken).find("line 3") != std::string::npos);
  CHECK(code_of(R"({"N":1,"T":2,"m":0,"weights":[1,1],"initial":[1,0]})") == ErrorCode::ValidationError);
  CHECK(code_of(R"({"N":11,"T":2,"m":4,"weights":[1,1],"initial":[1,0]})") == ErrorCode::ValidationError);
  CHECK(code_of(R"({"N":2,"T":2,"m":4,"weights":{"0":1},"initial":[1,0,0,0]})") == ErrorCode::ValidationError);
  CHECK(code_of(R"({"N":1,"T":2,"m":4,"weights":[1,1],"initial":[0,0]})") == ErrorCode::ValidationError);
  CHECK(code_of(R"({"N":1,"T":2,"m":4.5,"weights":[1,1],"initial":[1,0]})") == ErrorCode::ParseError);
  CHECK(code_of(R"({"N":1,"T":2,"weights":[1,1],"initial":[1,0]})") == ErrorCode::ParseError);
  CHECK(code_of(R"({"N":1,"T":2,"m":4,"weights":[1,1],"initial":{"x":1}})") == ErrorCode::ParseError);
  CHECK(code_of(R"({"N":1,"T":2,"m":4,"weights":[1,1],"initial":[1,0],"solver":{"eta":"fast"}})") ==
        ErrorCode::ParseError);
  CHECK(code_of(R"({"N":1,"T":2,"m":4,"weights":[1,1],"initial":[1,0],"m_sequence":[8,4]})") ==
        ErrorCode::ValidationError);
  CHECK_THROWS_AS(parse_command("solve"), Error);
  CHECK(parse_command("verify-appendix-a") == Command::VerifyAppendixA);
}

TEST_CASE("shortest round-trip numbers") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(2.0) == "2");
  const double third = 1.0 / 3.0;
  CHECK(std::stod(format_number(third)) == third);
}

TEST_CASE("mass field serializations round trip") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto rho = testing_support::random_field(2, 1.5, rng);
    CHECK(same_field(read_mass_json(mass_json(rho)), rho));
    CHECK(same_field(read_mass_csv(mass_csv(rho), rho.total_mass()), rho));
  }
  const auto eq = execute(parse_config(kPair), Command::Equilibrium);
  REQUIRE(eq.status == 0);
  const auto rho = read_mass_json(eq.files.at("report.json"));
  CHECK(same_field(read_mass_csv(eq.files.at("mass.csv")), rho));
  CHECK_THROWS_AS(read_mass_csv("node,start\n"), Error);
}

TEST_CASE("exact reference solutions") {
  const auto r = execute(parse_config(kMinimal), Command::VerifyAppendixA);
  CHECK(r.status == 0);
  const auto& rep = r.files.at("report.json");
  CHECK(rep.find("\"6/11\"") != std::string::npos);
  CHECK(rep.find("\"13/18\"") != std::string::npos);
  CHECK(rep.find("\"all_match\": true") != std::string::npos);
}

TEST_CASE("equilibrium exit codes and determinism") {
  const auto cfg = parse_config(kPair);
  const auto a = execute(cfg, Command::Equilibrium);
  const auto b = execute(cfg, Command::Equilibrium);
  CHECK(a.status == 0);
  CHECK(a.files == b.files);
  for (const char* f : {"report.json", "mass.csv", "plan.json", "plot.csv", "value.csv"}) CHECK(a.files.count(f) == 1);

  auto once = cfg;
  once.solver.max_iter = 1;
  once.solver.polish = false;
  const auto u = execute(once, Command::Equilibrium);
  CHECK(u.status == 2);
  CHECK(u.files.at("report.json").find("\"certified\": false") != std::string::npos);
}

TEST_CASE("value and best response pipelines") {
  const auto cfg = parse_config(kPair);
  const auto v = execute(cfg, Command::SolveValue);
  CHECK(v.status == 0);
  CHECK(v.files.at("value.csv").rfind("node,bits,i,t,value\n", 0) == 0);
  CHECK(v.files.count("argmin.csv") == 1);

  const auto dir = std::filesystem::temp_directory_path() / "mfgswitch_cli_test";
  std::filesystem::create_directories(dir);
  const auto eq = execute(cfg, Command::Equilibrium);
  {
    std::ofstream(dir / "mass.csv") << eq.files.at("mass.csv");
  }
  auto br_cfg = cfg;
  br_cfg.field = (dir / "mass.csv").string();
  const auto br = execute(br_cfg, Command::BestResponse);
  CHECK(br.status == 0);
  CHECK(br.files.at("report.json").find("\"distance\": 0") != std::string::npos);

  br_cfg.field = (dir / "missing.json").string();
  CHECK(execute(br_cfg, Command::BestResponse).status == 1);
  CHECK(run(cfg, Command::SolveValue, dir / "out", true) == 0);
  CHECK(std::filesystem::exists(dir / "out" / "report.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("monotonicity command") {
  auto cfg = parse_config(kMinimal);
  cfg.monotonicity.instance = "parallel";
  cfg.monotonicity.trials = 5000;
  CHECK(execute(cfg, Command::CheckMonotonicity).status == 0);
  cfg.monotonicity.slopes = {1.0, 0.0, 3.0};
  CHECK(execute(cfg, Command::CheckMonotonicity).status != 0);
}
