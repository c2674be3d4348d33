#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "forecomp/agents.hpp"
#include "forecomp/mechanisms.hpp"
#include "forecomp/types.hpp"

namespace forecomp {

inline constexpr const char* kVersion = "1.0.0";

enum class Command {
  kRun,
  kEstimateComplexity,
  kTruthfulnessSweep,
  kOnlineRegret,
  kLowerBoundDemo,
  kConditionCheck,
  kBoundsTable,
};

const char* to_string(Command command);
Command command_from_string(const std::string& name);
std::vector<Command> all_commands();

struct SettingSource {
  std::string family = "random";
  std::size_t n = 10;
  std::size_t m = 100;
  std::optional<double> gap;  // near_tie gap scale; defaults to epsilon
  // Inline matrices replace the generator when both are present.
  std::optional<std::vector<Vector>> beliefs;
  std::optional<Vector> theta;
  bool operator==(const SettingSource&) const = default;
};

struct SweepSection {
  std::size_t contexts = 200;
  std::size_t max_forecasters = 4;
  std::size_t max_events = 5;
  std::size_t starts = 5;
  bool operator==(const SweepSection&) const = default;
};

struct OnlineSection {
  std::size_t rounds = 1000;
  std::optional<double> eta;  // defaults to sqrt(ln n / 10T)
  std::string regularizer = "neg_entropy";
  std::string preference = "myopic";
  double discount = 0.9;
  std::size_t lookahead = 64;
  bool operator==(const OnlineSection&) const = default;
};

struct ConditionSection {
  std::string regularizer = "neg_entropy";
  std::size_t samples = 10000;
  double radius = 10.0;
  std::size_t dimension = 3;
  bool finite_difference = false;
  bool operator==(const ConditionSection&) const = default;
};

struct BoundsSection {
  std::vector<std::size_t> n_values = {10, 100};
  Vector epsilon_values = {0.1, 0.2};
  std::optional<double> gamma;
  bool operator==(const BoundsSection&) const = default;
};

struct ExperimentConfig {
  Command command = Command::kRun;
  MechanismConfig mechanism = MultWeights{0.05};
  SettingSource setting;
  AgentStrategy strategy = Truthful{};
  // Per-forecaster strategies; overrides `strategy` when non-empty.
  std::vector<AgentStrategy> strategies;
  std::size_t trials = 1000;
  double epsilon = 0.1;
  double delta = 0.1;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string out = "out";
  std::size_t m_max = std::size_t{1} << 20;
  SweepSection sweep;
  OnlineSection online;
  ConditionSection condition;
  BoundsSection bounds;

  bool operator==(const ExperimentConfig&) const = default;
};

// Every problem found while reading a config, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

// Parses JSON text. Unknown keys are errors. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
// Canonical JSON with every field written out.
std::string serialize_config(const ExperimentConfig& config);
// Range checks against the owning module's preconditions; empty when valid.
std::vector<std::string> validate_config(const ExperimentConfig& config);

struct DispatchResult {
  int exit_code = 0;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> outputs;
};

// Runs the configured experiment and writes results.csv, summary.json and
// manifest.json under config.out. An unset seed is drawn from the system and
// recorded in the manifest. On failure writes error.json and returns nonzero.
DispatchResult dispatch(ExperimentConfig config);

// Prints the violations and writes error.json under dir; returns the exit code.
int report_config_error(const std::filesystem::path& dir, const ConfigError& error);

std::string sha256_hex(const std::string& bytes);

}  // namespace forecomp
