#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "forecomp/cli.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;
};

int run(forecomp::Command command, const Overrides& o) {
  using namespace forecomp;
  ExperimentConfig config;
  try {
    if (!o.config_path.empty()) {
      std::ifstream f(o.config_path);
      if (!f) {
        std::cerr << "cannot read config " << o.config_path << "\n";
        return 2;
      }
      std::stringstream text;
      text << f.rdbuf();
      config = parse_config(text.str());
    }
  } catch (const ConfigError& e) {
    return report_config_error(o.out.value_or(config.out), e);
  }
  config.command = command;
  if (o.seed) config.seed = o.seed;
  if (o.trials) config.trials = *o.trials;
  if (o.threads) config.threads = *o.threads;
  if (o.out) config.out = *o.out;

  const DispatchResult result = dispatch(config);
  if (result.exit_code == 0) {
    std::cout << "seed " << result.seed << "\n";
    for (const auto& p : result.outputs) std::cout << p.string() << "\n";
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forecasting competition mechanisms: simulation and analysis"};
  app.set_version_flag("--version", std::string(forecomp::kVersion));
  app.require_subcommand(1);

  Overrides overrides;
  std::optional<forecomp::Command> chosen;
  const std::map<forecomp::Command, std::string> help = {
      {forecomp::Command::kRun, "run one competition setting for many trials"},
      {forecomp::Command::kEstimateComplexity, "search for the events needed to reach 1 - delta"},
      {forecomp::Command::kTruthfulnessSweep, "largest best-response deviation over random contexts"},
      {forecomp::Command::kOnlineRegret, "online FTRL regret against the best expert"},
      {forecomp::Command::kLowerBoundDemo, "ELF versus Simple Max with one perfect forecaster"},
      {forecomp::Command::kConditionCheck, "empirical curvature constants of a regularizer"},
      {forecomp::Command::kBoundsTable, "theoretical event-complexity bounds"},
  };
  for (forecomp::Command command : forecomp::all_commands()) {
    CLI::App* sub = app.add_subcommand(forecomp::to_string(command), help.at(command));
    sub->add_option("--config", overrides.config_path, "JSON experiment config")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", overrides.seed, "master seed");
    sub->add_option("--trials", overrides.trials, "number of trials")
        ->check(CLI::PositiveNumber);
    sub->add_option("--threads", overrides.threads, "worker threads")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", overrides.out, "output directory");
    sub->callback([&chosen, command] { chosen = command; });
  }

  CLI11_PARSE(app, argc, argv);
  return run(*chosen, overrides);
}
