#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(GGLAB_CLI_PATH) + " " + args + " 2>/dev/null";
  std::array<char, 4096> buf{};
  CliResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) res.out.append(buf.data(), n);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

}  // namespace

TEST_CASE("check zeta emits a passing JSON report") {
  const CliResult res =
      run_cli("check zeta --zeta 0.5 --n-outer 20000 --truncation 512 --seed 7");
  REQUIRE(res.exit_code == 0);
  const auto j = nlohmann::json::parse(res.out);
  REQUIRE(j["name"] == "zeta");
  REQUIRE(std::abs(j["lhs"].get<double>() - 0.5) < 0.02);
  REQUIRE(j["rhs"].get<double>() == 0.5);
  REQUIRE(j["pass"].get<bool>());
  REQUIRE(j["seed"].get<std::uint64_t>() == 7);
  REQUIRE(j["wall_time_s"].get<double>() == 0.0);
}

TEST_CASE("identical invocations are byte-identical") {
  const std::string args =
      "check main --zeta 0.5 --leaf-budget 256 --n-outer 2016 --n-mu 2016 --seed 11";
  const CliResult a = run_cli(args);
  const CliResult b = run_cli(args);
  REQUIRE(a.exit_code == 0);
  REQUIRE(a.out == b.out);
  REQUIRE_FALSE(a.out.empty());

  const CliResult c = run_cli(args + " --workers 2");
  REQUIRE(c.out == a.out);
}

TEST_CASE("struct ultra reports zero violations on a two-level cascade") {
  const CliResult res = run_cli(
      "struct ultra --depth 2 --zetas 0.3,0.7 --qs 0,0.4,1 --branching 16,16 --n 20000 "
      "--seed 3");
  REQUIRE(res.exit_code == 0);
  const auto j = nlohmann::json::parse(res.out);
  REQUIRE(j["lhs"].get<double>() == 0.0);
  REQUIRE(j["pass"].get<bool>());
}

TEST_CASE("unknown flags exit with the usage code") {
  const CliResult res = run_cli("check zeta --definitely-not-a-flag 3");
  REQUIRE(res.exit_code == 2);
}

TEST_CASE("a failing check exits with code 1") {
  // the weight-coupled control must be rejected by the independence test
  const CliResult res = run_cli(
      "struct exchange --control independence --zetas 0.3,0.7 --qs 0,0.4,1 "
      "--branching 16,16 --m 3 --n-outer 2000 --seed 5");
  REQUIRE(res.exit_code == 1);
}

TEST_CASE("csv output has the schema header") {
  const CliResult res = run_cli(
      "check zeta --zeta 0.5 --n-outer 2016 --truncation 128 --seed 7 --format csv");
  REQUIRE(res.exit_code == 0);
  REQUIRE(res.out.rfind("name,lhs,rhs,se_lhs,se_rhs,se_diff,z,n_outer,seed,pass,wall_time_s",
                        0) == 0);
}

TEST_CASE("config files drive checks and flags override them") {
  const std::string path = "cli_test_config.tmp";
  {
    std::ofstream f(path);
    f << "zeta = 0.5\nn-outer = 2016\ntruncation = 128\nseed = 21\n";
  }
  const CliResult from_file = run_cli("check zeta --config " + path);
  REQUIRE(from_file.exit_code == 0);
  const auto j = nlohmann::json::parse(from_file.out);
  REQUIRE(j["seed"].get<std::uint64_t>() == 21);
  REQUIRE(j["n_outer"].get<std::uint64_t>() == 2016);

  const CliResult overridden = run_cli("check zeta --config " + path + " --seed 22");
  const auto j2 = nlohmann::json::parse(overridden.out);
  REQUIRE(j2["seed"].get<std::uint64_t>() == 22);
  std::remove(path.c_str());
}

TEST_CASE("pd-sample and cascade-info describe their objects") {
  const CliResult pd = run_cli("pd-sample --zeta 0.5 --truncation 64 --seed 5");
  REQUIRE(pd.exit_code == 0);
  const auto j = nlohmann::json::parse(pd.out);
  REQUIRE(j["truncation"].get<int>() == 64);
  REQUIRE(j["weights_head"].size() == 10);

  const CliResult ci = run_cli(
      "cascade-info --zetas 0.3,0.7 --qs 0,0.4,1 --branching 8,8 --seed 5");
  REQUIRE(ci.exit_code == 0);
  const auto jc = nlohmann::json::parse(ci.out);
  REQUIRE(jc["leaves"].get<int>() == 64);
  REQUIRE(jc["pair_law_masses"].size() == 3);
}
