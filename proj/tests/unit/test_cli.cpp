#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "forecomp/cli.hpp"

using namespace forecomp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("forecomp_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> violations_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

}  // namespace

TEST_CASE("command names") {
  for (Command c : all_commands()) CHECK(command_from_string(to_string(c)) == c);
  CHECK(all_commands().size() == 7);
  CHECK_THROWS(command_from_string("train"));
}

TEST_CASE("default config round trips") {
  const ExperimentConfig c;
  CHECK(parse_config(serialize_config(c)) == c);
  CHECK(validate_config(c).empty());
}

TEST_CASE("populated config round trips") {
  ExperimentConfig c;
  c.command = Command::kOnlineRegret;
  c.mechanism = Ftrl{"l2", 0.0123456789012345};
  c.setting.family = "near_tie";
  c.setting.n = 4;
  c.setting.m = 3;
  c.setting.gap = 0.2;
  BestResponse br;
  br.solver.mode = BestResponseMode::kLeaveOneOut;
  br.solver.seed = 18446744073709551615ULL;
  c.strategy = br;
  c.strategies = {Truthful{}, Extremizer{0.1}, FixedReport{Vector(1000, 0.3)}, br};
  c.seed = 42;
  c.trials = 7;
  c.threads = 3;
  c.out = "somewhere";
  c.online.rounds = 1000;
  c.online.eta = 0.01;
  c.online.preference = "discounted";
  c.online.discount = 0.5;
  c.condition.finite_difference = true;
  c.bounds.gamma = 0.001;
  const std::string text = serialize_config(c);
  const ExperimentConfig back = parse_config(text);
  CHECK(back == c);
  CHECK(serialize_config(back) == text);
}

TEST_CASE("inline setting round trips") {
  ExperimentConfig c;
  c.mechanism = ReportNoisyMax{40.0};
  c.setting.beliefs = std::vector<Vector>{{0.1, 0.2}, {0.3, 0.4}};
  c.setting.theta = Vector{0.15, 0.35};
  CHECK(parse_config(serialize_config(c)) == c);
  c.mechanism = PointPerRound{0.25, 0.1};
  CHECK(parse_config(serialize_config(c)) == c);
}

TEST_CASE("every violation is reported") {
  const auto v = violations_of(
      R"({"mechanism":{"type":"mw","eta":-1},"trials":0,"epsilon":-2,"extra":true,
          "setting":{"family":"unknown"},"online":{"discount":0}})");
  auto has = [&](const std::string& needle) {
    for (const auto& s : v) {
      if (s.find(needle) != std::string::npos) return true;
    }
    return false;
  };
  CHECK(has("extra: unknown key"));
  CHECK(has("eta > 0"));
  CHECK(has("trials"));
  CHECK(has("epsilon"));
  CHECK(has("setting.family"));
  CHECK(has("online.discount"));
}

TEST_CASE("type and shape errors") {
  CHECK_FALSE(violations_of(R"({"trials":"many"})").empty());
  CHECK_FALSE(violations_of(R"({"trials":-3})").empty());
  CHECK_FALSE(violations_of(R"({"mechanism":{"type":"mw","eta":0.1,"b":4}})").empty());
  CHECK_FALSE(violations_of(R"({"mechanism":{"type":"noisy_max","b":3}})").empty());
  CHECK_FALSE(violations_of(R"({"strategy":{"type":"oracle"}})").empty());
  CHECK_FALSE(violations_of(R"({"setting":{"n":2,"m":1},"strategies":[{"type":"truthful"}]})").empty());
  CHECK_FALSE(violations_of(R"({"setting":{"beliefs":[[0.1,0.2]],"theta":[0.1]}})").empty());
  CHECK_FALSE(violations_of(R"({"bounds":{"n_values":[2]}})").empty());
  CHECK_FALSE(violations_of("{not json").empty());
  CHECK(violations_of(R"({"mechanism":{"type":"elf"},"seed":12})").empty());
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("bounds table dispatch writes the three outputs") {
  ExperimentConfig c;
  c.command = Command::kBoundsTable;
  c.out = scratch("bounds").string();
  c.seed = 1;
  const DispatchResult r = dispatch(c);
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp(fs::path(c.out) / "results.csv");
  CHECK(csv.rfind("n,epsilon,delta,simple_max,elf,elf_proof,elf_previous,mw,noisy_max\n", 0) == 0);
  CHECK(csv.find("100,0.1,0.1,1382,") != std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(fs::path(c.out) / "manifest.json"));
  CHECK(manifest["seed"] == 1);
  CHECK(manifest["version"] == kVersion);
  CHECK(manifest["checksums"]["results.csv"] == sha256_hex(csv));
  CHECK(manifest["checksums"]["summary.json"] ==
        sha256_hex(slurp(fs::path(c.out) / "summary.json")));
  CHECK(parse_config(manifest["config"].dump()) == c);
}

TEST_CASE("unset seed is drawn and recorded") {
  ExperimentConfig c;
  c.command = Command::kConditionCheck;
  c.condition.samples = 200;
  c.out = scratch("seed").string();
  const DispatchResult r = dispatch(c);
  REQUIRE(r.exit_code == 0);
  const auto manifest = nlohmann::json::parse(slurp(fs::path(c.out) / "manifest.json"));
  CHECK(manifest["seed"].get<std::uint64_t>() == r.seed);
  CHECK(manifest["config"]["seed"].get<std::uint64_t>() == r.seed);
}

TEST_CASE("invalid config writes error.json") {
  ExperimentConfig c;
  c.mechanism = ReportNoisyMax{1.0};
  c.out = scratch("error").string();
  const DispatchResult r = dispatch(c);
  CHECK(r.exit_code != 0);
  const auto err = nlohmann::json::parse(slurp(fs::path(c.out) / "error.json"));
  CHECK(err["error"] == "config");
  CHECK(err["violations"][0].get<std::string>().find("b >= 4") != std::string::npos);
  CHECK_FALSE(fs::exists(fs::path(c.out) / "results.csv"));
}

TEST_CASE("run output is independent of the thread count") {
  ExperimentConfig c;
  c.command = Command::kRun;
  c.mechanism = Elf{};
  c.setting.n = 5;
  c.setting.m = 20;
  c.trials = 300;
  c.seed = 8;
  c.out = scratch("run1").string();
  REQUIRE(dispatch(c).exit_code == 0);
  const std::string one = slurp(fs::path(c.out) / "results.csv");
  c.threads = 4;
  c.out = scratch("run4").string();
  REQUIRE(dispatch(c).exit_code == 0);
  CHECK(slurp(fs::path(c.out) / "results.csv") == one);
  CHECK(std::count(one.begin(), one.end(), '\n') == 301);
}
