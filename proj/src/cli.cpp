#include "forecomp/cli.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "forecomp/experiments.hpp"
#include "forecomp/parallel.hpp"
#include "forecomp/regularizers.hpp"

namespace forecomp {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k) out += sep;
    out += parts[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reading

class Reader {
 public:
  std::vector<std::string> errors;

  void keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.count(key)) errors.push_back(path + key + ": unknown key");
    }
  }

  bool object(const json& obj, const std::string& where) {
    if (obj.is_object()) return true;
    errors.push_back(where + ": expected an object");
    return false;
  }

  template <class T>
  void get(const json& obj, const std::string& path, const char* key, T& dst) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
        dst = v.get<double>();
      } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned()) throw std::invalid_argument("expected a nonnegative integer");
        dst = v.get<T>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected true or false");
        dst = v.get<bool>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
        dst = v.get<std::string>();
      } else {
        dst = v.get<T>();
      }
    } catch (const std::exception& e) {
      errors.push_back(path + key + ": " + e.what());
    }
  }

  template <class T>
  void get_optional(const json& obj, const std::string& path, const char* key,
                    std::optional<T>& dst) {
    if (!obj.contains(key)) return;
    if (obj.at(key).is_null()) {
      dst.reset();
      return;
    }
    T value{};
    const std::size_t before = errors.size();
    get(obj, path, key, value);
    if (errors.size() == before) dst = value;
  }

  MechanismConfig mechanism(const json& obj, const std::string& path) {
    if (!object(obj, path)) return MultWeights{0.05};
    std::string type;
    get(obj, path + ".", "type", type);
    const std::string p = path + ".";
    if (type == "simple_max") {
      keys(obj, p, {"type"});
      return SimpleMax{};
    }
    if (type == "elf") {
      keys(obj, p, {"type"});
      return Elf{};
    }
    if (type == "point_per_round") {
      keys(obj, p, {"type", "scale", "offset"});
      PointPerRound m;
      get(obj, p, "scale", m.scale);
      get(obj, p, "offset", m.offset);
      return m;
    }
    if (type == "ftrl") {
      keys(obj, p, {"type", "regularizer", "eta"});
      Ftrl m;
      get(obj, p, "regularizer", m.regularizer);
      get(obj, p, "eta", m.eta);
      return m;
    }
    if (type == "mw") {
      keys(obj, p, {"type", "eta"});
      MultWeights m;
      get(obj, p, "eta", m.eta);
      return m;
    }
    if (type == "noisy_max") {
      keys(obj, p, {"type", "b"});
      ReportNoisyMax m;
      get(obj, p, "b", m.b);
      return m;
    }
    errors.push_back(p + "type: unknown mechanism '" + type +
                     "' (expected simple_max, elf, point_per_round, ftrl, mw or noisy_max)");
    return MultWeights{0.05};
  }

  AgentStrategy strategy(const json& obj, const std::string& path) {
    if (!object(obj, path)) return Truthful{};
    std::string type;
    const std::string p = path + ".";
    get(obj, p, "type", type);
    if (type == "truthful") {
      keys(obj, p, {"type"});
      return Truthful{};
    }
    if (type == "fixed") {
      keys(obj, p, {"type", "report"});
      FixedReport s;
      get(obj, p, "report", s.report);
      return s;
    }
    if (type == "extremizer") {
      keys(obj, p, {"type", "pull"});
      Extremizer s;
      get(obj, p, "pull", s.pull);
      return s;
    }
    if (type == "best_response") {
      keys(obj, p, {"type", "mode", "starts", "seed", "coordinate_tolerance", "max_cycles",
                    "max_exact_events", "monte_carlo_samples"});
      BestResponse s;
      std::string mode = "exact";
      get(obj, p, "mode", mode);
      if (mode == "exact") {
        s.solver.mode = BestResponseMode::kExact;
      } else if (mode == "leave_one_out") {
        s.solver.mode = BestResponseMode::kLeaveOneOut;
      } else {
        errors.push_back(p + "mode: expected exact or leave_one_out");
      }
      get(obj, p, "starts", s.solver.starts);
      get(obj, p, "seed", s.solver.seed);
      get(obj, p, "coordinate_tolerance", s.solver.coordinate_tolerance);
      get(obj, p, "max_cycles", s.solver.max_cycles);
      get(obj, p, "max_exact_events", s.solver.max_exact_events);
      get(obj, p, "monte_carlo_samples", s.solver.monte_carlo_samples);
      return s;
    }
    errors.push_back(p + "type: unknown strategy '" + type +
                     "' (expected truthful, fixed, extremizer or best_response)");
    return Truthful{};
  }
};

// ---------------------------------------------------------------------------
// Writing

json mechanism_json(const MechanismConfig& mechanism) {
  return std::visit(
      Overloaded{
          [](const SimpleMax&) { return json{{"type", "simple_max"}}; },
          [](const Elf&) { return json{{"type", "elf"}}; },
          [](const PointPerRound& m) {
            return json{{"type", "point_per_round"}, {"scale", m.scale}, {"offset", m.offset}};
          },
          [](const Ftrl& m) {
            return json{{"type", "ftrl"}, {"regularizer", m.regularizer}, {"eta", m.eta}};
          },
          [](const MultWeights& m) { return json{{"type", "mw"}, {"eta", m.eta}}; },
          [](const ReportNoisyMax& m) { return json{{"type", "noisy_max"}, {"b", m.b}}; },
      },
      mechanism);
}

json strategy_json(const AgentStrategy& strategy) {
  return std::visit(
      Overloaded{
          [](const Truthful&) { return json{{"type", "truthful"}}; },
          [](const FixedReport& s) { return json{{"type", "fixed"}, {"report", s.report}}; },
          [](const Extremizer& s) { return json{{"type", "extremizer"}, {"pull", s.pull}}; },
          [](const BestResponse& s) {
            return json{
                {"type", "best_response"},
                {"mode", s.solver.mode == BestResponseMode::kExact ? "exact" : "leave_one_out"},
                {"starts", s.solver.starts},
                {"seed", s.solver.seed},
                {"coordinate_tolerance", s.solver.coordinate_tolerance},
                {"max_cycles", s.solver.max_cycles},
                {"max_exact_events", s.solver.max_exact_events},
                {"monte_carlo_samples", s.solver.monte_carlo_samples}};
          },
      },
      strategy);
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json config_json(const ExperimentConfig& c) {
  json strategies = json::array();
  for (const auto& s : c.strategies) strategies.push_back(strategy_json(s));
  return json{
      {"command", to_string(c.command)},
      {"mechanism", mechanism_json(c.mechanism)},
      {"setting",
       {{"family", c.setting.family},
        {"n", c.setting.n},
        {"m", c.setting.m},
        {"gap", optional_json(c.setting.gap)},
        {"beliefs", optional_json(c.setting.beliefs)},
        {"theta", optional_json(c.setting.theta)}}},
      {"strategy", strategy_json(c.strategy)},
      {"strategies", strategies},
      {"trials", c.trials},
      {"epsilon", c.epsilon},
      {"delta", c.delta},
      {"seed", optional_json(c.seed)},
      {"threads", c.threads},
      {"out", c.out},
      {"m_max", c.m_max},
      {"sweep",
       {{"contexts", c.sweep.contexts},
        {"max_forecasters", c.sweep.max_forecasters},
        {"max_events", c.sweep.max_events},
        {"starts", c.sweep.starts}}},
      {"online",
       {{"rounds", c.online.rounds},
        {"eta", optional_json(c.online.eta)},
        {"regularizer", c.online.regularizer},
        {"preference", c.online.preference},
        {"discount", c.online.discount},
        {"lookahead", c.online.lookahead}}},
      {"condition",
       {{"regularizer", c.condition.regularizer},
        {"samples", c.condition.samples},
        {"radius", c.condition.radius},
        {"dimension", c.condition.dimension},
        {"finite_difference", c.condition.finite_difference}}},
      {"bounds",
       {{"n_values", c.bounds.n_values},
        {"epsilon_values", c.bounds.epsilon_values},
        {"gamma", optional_json(c.bounds.gamma)}}},
  };
}

// ---------------------------------------------------------------------------
// Output helpers

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) { line(header); }
  void line(const std::vector<std::string>& cells) { text_ += join(cells, ",") + "\n"; }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

json estimate_json(const SuccessEstimate& e) {
  return json{{"trials", e.trials},         {"successes", e.successes},
              {"rate", e.rate},             {"wilson_low", e.wilson_low},
              {"wilson_high", e.wilson_high}, {"halfwidth", e.halfwidth}};
}

json matrix_json(const Matrix& m) { return json(m.to_rows()); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Output {
  std::string csv;
  json summary;
};

std::vector<AgentStrategy> strategies_for(const ExperimentConfig& c, std::size_t n) {
  if (!c.strategies.empty()) return c.strategies;
  return std::vector<AgentStrategy>(n, c.strategy);
}

SettingFamily family_of(const ExperimentConfig& c) {
  return SettingFamily{family_from_string(c.setting.family), c.setting.n,
                       c.setting.gap.value_or(c.epsilon)};
}

// ---------------------------------------------------------------------------
// Commands

Output run_command(const ExperimentConfig& c, std::uint64_t seed) {
  const CompetitionSetting setting = [&] {
    if (c.setting.beliefs && c.setting.theta) {
      return CompetitionSetting(BeliefMatrix::from_rows(*c.setting.beliefs),
                                GroundTruth(*c.setting.theta));
    }
    Rng rng(derive_seed(seed, 0));
    return generate_setting(family_of(c), c.setting.m, rng);
  }();
  const ReportMatrix reports =
      build_reports(setting.beliefs(), strategies_for(c, setting.n()), c.mechanism);
  const TrialOptions options{c.trials, derive_seed(seed, 1), c.threads};
  const auto results = run_trials(setting, reports, c.mechanism, options);

  Csv csv({"trial", "winner", "winner_accuracy", "best_accuracy", "eps_optimal"});
  std::size_t hits = 0;
  std::vector<std::size_t> wins(setting.n(), 0);
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    const bool ok = r.eps_optimal(c.epsilon);
    hits += ok ? 1 : 0;
    ++wins[r.winner];
    csv.line({std::to_string(k), std::to_string(r.winner), num(r.winner_accuracy),
              num(r.best_accuracy), ok ? "1" : "0"});
  }
  json summary{{"mechanism", mechanism_name(c.mechanism)},
               {"n", setting.n()},
               {"m", setting.m()},
               {"epsilon", c.epsilon},
               {"accuracies", setting.accuracies()},
               {"eps_optimal_set", epsilon_optimal_set(setting.accuracies(), c.epsilon)},
               {"win_counts", wins},
               {"success", estimate_json(make_success_estimate(hits, results.size()))}};
  return {csv.text(), summary};
}

json bounds_for(const MechanismConfig& mechanism, std::size_t n, double epsilon, double delta) {
  json out = json::object();
  auto put = [&](BoundVariant v, std::optional<double> gamma = {}) {
    try {
      out[to_string(v)] = theoretical_bounds(n, epsilon, delta, v, gamma);
    } catch (const std::domain_error& e) {
      out[to_string(v)] = nullptr;
    }
  };
  std::visit(Overloaded{
                 [&](const SimpleMax&) { put(BoundVariant::kSimpleMax); },
                 [&](const Elf&) {
                   put(BoundVariant::kElf);
                   put(BoundVariant::kElfProof);
                 },
                 [&](const MultWeights&) { put(BoundVariant::kMw); },
                 [&](const ReportNoisyMax& r) { put(BoundVariant::kNoisyMax, 4.0 / r.b); },
                 [&](const auto&) {},
             },
             mechanism);
  return out;
}

Output complexity_command(const ExperimentConfig& c, std::uint64_t seed) {
  const TrialOptions options{c.trials, seed, c.threads};
  ComplexitySearch search;
  search.m_max = c.m_max;
  const ComplexityEstimate est = estimate_event_complexity(c.mechanism, family_of(c), c.strategy,
                                                           c.epsilon, c.delta, options, search);
  Csv csv({"probe", "m", "trials", "successes", "rate", "wilson_low", "wilson_high", "passed"});
  for (std::size_t k = 0; k < est.probes.size(); ++k) {
    const auto& p = est.probes[k];
    csv.line({std::to_string(k), std::to_string(p.m), std::to_string(p.estimate.trials),
              std::to_string(p.estimate.successes), num(p.estimate.rate),
              num(p.estimate.wilson_low), num(p.estimate.wilson_high), p.passed ? "1" : "0"});
  }
  json summary{{"mechanism", mechanism_name(c.mechanism)},
               {"family", c.setting.family},
               {"n", c.setting.n},
               {"epsilon", c.epsilon},
               {"delta", c.delta},
               {"m_estimate", est.m_estimate},
               {"trials", est.trials},
               {"empirical_success", est.empirical_success},
               {"confidence_halfwidth", est.confidence_halfwidth},
               {"theoretical", bounds_for(c.mechanism, c.setting.n, c.epsilon, c.delta)}};
  return {csv.text(), summary};
}

Output sweep_command(const ExperimentConfig& c, std::uint64_t seed) {
  SweepConfig sweep;
  sweep.contexts = c.sweep.contexts;
  sweep.max_forecasters = c.sweep.max_forecasters;
  sweep.max_events = c.sweep.max_events;
  sweep.seed = seed;
  sweep.threads = c.threads;
  sweep.solver.starts = c.sweep.starts;
  const TruthfulnessGapReport report = truthfulness_gap_sweep(c.mechanism, sweep);
  Csv csv({"context", "gap"});
  for (std::size_t k = 0; k < report.gaps.size(); ++k) {
    csv.line({std::to_string(k), num(report.gaps[k])});
  }
  json summary{{"mechanism", report.mechanism},
               {"contexts", report.contexts},
               {"gamma_empirical", report.gamma_empirical},
               {"gamma_theoretical", optional_json(report.gamma_theoretical)},
               {"all_certified", report.all_certified},
               {"witness",
                {{"opponent_reports", matrix_json(report.witness.opponent_reports)},
                 {"own_beliefs", report.witness.own_beliefs},
                 {"best_response", report.witness.best_response},
                 {"coordinate", report.witness.coordinate}}}};
  if (const auto* w = std::get_if<MultWeights>(&c.mechanism)) {
    summary["eta"] = w->eta;
    summary["eta_limits"] = {{"declared_constants", truthful_eta_limit(*NegativeEntropy().declared_constants())},
                             {"strict", 0.25}};
  }
  return {csv.text(), summary};
}

Output online_command(const ExperimentConfig& c, std::uint64_t seed) {
  const std::size_t n = c.setting.n;
  const std::size_t rounds = c.online.rounds;
  const auto reg = make_regularizer(c.online.regularizer);
  double eta = 0.0;
  if (c.online.eta) {
    eta = *c.online.eta;
  } else if (c.online.regularizer == "neg_entropy") {
    eta = online_eta_mw(rounds, n);
  } else {
    throw std::invalid_argument("online.eta is required for regularizer " + c.online.regularizer);
  }
  OnlinePreference preference = OnlinePreference::myopic();
  if (c.online.preference == "consistent") preference = OnlinePreference::consistent();
  if (c.online.preference == "discounted") {
    preference = OnlinePreference::discounted(c.online.discount);
  }

  struct Row {
    double regret = 0.0;
    std::optional<double> bound;
    std::size_t best = 0;
    bool replay = true;
    bool accounting = true;
  };
  std::vector<Row> rows(c.trials);
  parallel_for(c.trials, c.threads, [&](std::size_t k) {
    Rng rng(derive_seed(seed, k));
    OnlineSetup setup{BeliefMatrix(), Vector(), strategies_for(c, n), preference,
                      c.online.regularizer, eta, c.online.lookahead};
    if (n >= 2) {
      const CompetitionSetting s = generate_setting(family_of(c), rounds, rng);
      setup.beliefs = s.beliefs();
      setup.theta.assign(s.theta().values().begin(), s.theta().values().end());
    } else {
      setup.theta.resize(rounds);
      for (double& v : setup.theta) v = rng.uniform();
      setup.beliefs = BeliefMatrix::from_rows({setup.theta});
    }
    const RegretTrace trace = online_run(setup, rng);
    Row row{trace.regret, trace.bound, trace.best_expert, true, true};
    for (std::size_t q = 0; q <= 16; ++q) {
      const std::size_t t = std::min(rounds - 1, q * rounds / 16);
      const auto pi = online_distribution(trace.reports, trace.outcomes, t, *reg, eta);
      for (std::size_t i = 0; i < n; ++i) row.replay = row.replay && pi[i] == trace.pi(t, i);
    }
    row.accounting = std::abs(recompute_regret(trace, setup.beliefs) - trace.regret) <= 1e-10;
    rows[k] = row;
  });

  Csv csv({"trial", "regret", "bound", "best_expert", "replay_ok", "accounting_ok"});
  double worst = -std::numeric_limits<double>::infinity();
  bool within = true;
  bool replay = true;
  bool accounting = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Row& r = rows[k];
    worst = std::max(worst, r.regret);
    if (r.bound) within = within && r.regret <= *r.bound;
    replay = replay && r.replay;
    accounting = accounting && r.accounting;
    csv.line({std::to_string(k), num(r.regret), r.bound ? num(*r.bound) : "", std::to_string(r.best),
              r.replay ? "1" : "0", r.accounting ? "1" : "0"});
  }
  json summary{{"n", n},
               {"rounds", rounds},
               {"eta", eta},
               {"regularizer", c.online.regularizer},
               {"preference", to_string(preference.kind())},
               {"trials", c.trials},
               {"max_regret", worst},
               {"bound", rows.empty() ? json(nullptr) : optional_json(rows.front().bound)},
               {"all_within_bound", within},
               {"causality_replay_ok", replay},
               {"accounting_ok", accounting}};
  return {csv.text(), summary};
}

Output lower_bound_command(const ExperimentConfig& c, std::uint64_t seed) {
  const LowerBoundDemo demo = lower_bound_demo(c.setting.n, {c.trials, seed, c.threads});
  Csv csv({"mechanism", "n", "m", "trials", "successes", "rate", "wilson_low", "wilson_high"});
  for (const auto& [name, e] : {std::pair{"elf", demo.elf}, std::pair{"simple_max", demo.simple_max}}) {
    csv.line({name, std::to_string(demo.n), std::to_string(demo.m), std::to_string(e.trials),
              std::to_string(e.successes), num(e.rate), num(e.wilson_low), num(e.wilson_high)});
  }
  json summary{{"n", demo.n},
               {"m", demo.m},
               {"elf", estimate_json(demo.elf)},
               {"simple_max", estimate_json(demo.simple_max)},
               {"elf_below_simple_max", demo.elf.rate < demo.simple_max.rate}};
  return {csv.text(), summary};
}

json witness_json(const ConditionWitness& w) {
  return json{{"x", w.x}, {"x_prime", w.x_prime}, {"coordinate", w.coordinate}, {"value", w.value}};
}

Output condition_command(const ExperimentConfig& c, std::uint64_t seed) {
  std::shared_ptr<const Regularizer> reg = make_regularizer(c.condition.regularizer);
  if (c.condition.finite_difference) reg = std::make_shared<FiniteDifferencePartials>(reg);
  ConditionCheckConfig cfg;
  cfg.sample_count = c.condition.samples;
  cfg.domain_radius = c.condition.radius;
  cfg.dimension = c.condition.dimension;
  cfg.seed = seed;
  const ConditionReport r = condition_check(*reg, cfg);
  Csv csv({"quantity", "empirical", "declared", "ok"});
  const auto declared = [&](double CurvatureConstants::*field) {
    return r.declared ? num((*r.declared).*field) : std::string();
  };
  csv.line({"alpha", num(r.empirical_alpha), declared(&CurvatureConstants::alpha),
            r.alpha_ok ? "1" : "0"});
  csv.line({"beta", num(r.empirical_beta), declared(&CurvatureConstants::beta),
            r.beta_ok ? "1" : "0"});
  json summary{{"regularizer", r.regularizer},
               {"dimension", r.dimension},
               {"samples", r.samples},
               {"domain_radius", r.domain_radius},
               {"finite_difference", r.finite_difference},
               {"status", to_string(r.status)},
               {"empirical_alpha", std::isfinite(r.empirical_alpha) ? json(r.empirical_alpha)
                                                                    : json("inf")},
               {"empirical_beta", std::isfinite(r.empirical_beta) ? json(r.empirical_beta)
                                                                  : json("inf")},
               {"alpha_ok", r.alpha_ok},
               {"beta_ok", r.beta_ok},
               {"alpha_witness", witness_json(r.alpha_witness)},
               {"beta_witness", witness_json(r.beta_witness)}};
  if (r.declared) summary["declared"] = {{"alpha", r.declared->alpha}, {"beta", r.declared->beta}};
  if (r.curvature_witness) summary["curvature_witness"] = witness_json(*r.curvature_witness);
  return {csv.text(), summary};
}

Output bounds_command(const ExperimentConfig& c) {
  std::vector<std::string> header = {"n", "epsilon", "delta"};
  for (BoundVariant v : all_bound_variants()) header.push_back(to_string(v));
  Csv csv(header);
  json rows = json::array();
  for (std::size_t n : c.bounds.n_values) {
    for (double eps : c.bounds.epsilon_values) {
      std::vector<std::string> cells = {std::to_string(n), num(eps), num(c.delta)};
      json row{{"n", n}, {"epsilon", eps}, {"delta", c.delta}};
      for (BoundVariant v : all_bound_variants()) {
        const auto m = theoretical_bounds(n, eps, c.delta, v, c.bounds.gamma);
        cells.push_back(std::to_string(m));
        row[to_string(v)] = m;
      }
      csv.line(cells);
      rows.push_back(row);
    }
  }
  return {csv.text(), json{{"rows", rows}}};
}

std::optional<std::filesystem::path> write_error_record(const std::filesystem::path& dir,
                                                        const json& record) {
  try {
    std::filesystem::create_directories(dir);
    write_file(dir / "error.json", record.dump(2) + "\n");
    return dir / "error.json";
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

const char* to_string(Command command) {
  switch (command) {
    case Command::kRun:
      return "run";
    case Command::kEstimateComplexity:
      return "estimate-complexity";
    case Command::kTruthfulnessSweep:
      return "truthfulness-sweep";
    case Command::kOnlineRegret:
      return "online-regret";
    case Command::kLowerBoundDemo:
      return "lower-bound-demo";
    case Command::kConditionCheck:
      return "condition-check";
    case Command::kBoundsTable:
      return "bounds-table";
  }
  return "unknown";
}

std::vector<Command> all_commands() {
  return {Command::kRun,           Command::kEstimateComplexity, Command::kTruthfulnessSweep,
          Command::kOnlineRegret,  Command::kLowerBoundDemo,     Command::kConditionCheck,
          Command::kBoundsTable};
}

Command command_from_string(const std::string& name) {
  for (Command c : all_commands()) {
    if (name == to_string(c)) return c;
  }
  throw std::invalid_argument("unknown command '" + name + "'");
}

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error("invalid config: " + join(violations, "; ")),
      violations_(std::move(violations)) {}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
  Reader r;
  ExperimentConfig c;
  if (!r.object(root, "config")) throw ConfigError(r.errors);
  r.keys(root, "", {"command", "mechanism", "setting", "strategy", "strategies", "trials",
                    "epsilon", "delta", "seed", "threads", "out", "m_max", "sweep", "online",
                    "condition", "bounds"});
  if (root.contains("command")) {
    std::string name;
    r.get(root, "", "command", name);
    try {
      c.command = command_from_string(name);
    } catch (const std::invalid_argument& e) {
      r.errors.push_back(std::string("command: ") + e.what());
    }
  }
  if (root.contains("mechanism")) c.mechanism = r.mechanism(root["mechanism"], "mechanism");
  if (root.contains("setting") && r.object(root["setting"], "setting")) {
    const json& s = root["setting"];
    r.keys(s, "setting.", {"family", "n", "m", "gap", "beliefs", "theta"});
    r.get(s, "setting.", "family", c.setting.family);
    r.get(s, "setting.", "n", c.setting.n);
    r.get(s, "setting.", "m", c.setting.m);
    r.get_optional(s, "setting.", "gap", c.setting.gap);
    r.get_optional(s, "setting.", "beliefs", c.setting.beliefs);
    r.get_optional(s, "setting.", "theta", c.setting.theta);
  }
  if (root.contains("strategy")) c.strategy = r.strategy(root["strategy"], "strategy");
  if (root.contains("strategies")) {
    if (root["strategies"].is_array()) {
      for (std::size_t k = 0; k < root["strategies"].size(); ++k) {
        c.strategies.push_back(
            r.strategy(root["strategies"][k], "strategies[" + std::to_string(k) + "]"));
      }
    } else {
      r.errors.push_back("strategies: expected an array");
    }
  }
  r.get(root, "", "trials", c.trials);
  r.get(root, "", "epsilon", c.epsilon);
  r.get(root, "", "delta", c.delta);
  r.get_optional(root, "", "seed", c.seed);
  r.get(root, "", "threads", c.threads);
  r.get(root, "", "out", c.out);
  r.get(root, "", "m_max", c.m_max);
  if (root.contains("sweep") && r.object(root["sweep"], "sweep")) {
    const json& s = root["sweep"];
    r.keys(s, "sweep.", {"contexts", "max_forecasters", "max_events", "starts"});
    r.get(s, "sweep.", "contexts", c.sweep.contexts);
    r.get(s, "sweep.", "max_forecasters", c.sweep.max_forecasters);
    r.get(s, "sweep.", "max_events", c.sweep.max_events);
    r.get(s, "sweep.", "starts", c.sweep.starts);
  }
  if (root.contains("online") && r.object(root["online"], "online")) {
    const json& s = root["online"];
    r.keys(s, "online.", {"rounds", "eta", "regularizer", "preference", "discount", "lookahead"});
    r.get(s, "online.", "rounds", c.online.rounds);
    r.get_optional(s, "online.", "eta", c.online.eta);
    r.get(s, "online.", "regularizer", c.online.regularizer);
    r.get(s, "online.", "preference", c.online.preference);
    r.get(s, "online.", "discount", c.online.discount);
    r.get(s, "online.", "lookahead", c.online.lookahead);
  }
  if (root.contains("condition") && r.object(root["condition"], "condition")) {
    const json& s = root["condition"];
    r.keys(s, "condition.", {"regularizer", "samples", "radius", "dimension", "finite_difference"});
    r.get(s, "condition.", "regularizer", c.condition.regularizer);
    r.get(s, "condition.", "samples", c.condition.samples);
    r.get(s, "condition.", "radius", c.condition.radius);
    r.get(s, "condition.", "dimension", c.condition.dimension);
    r.get(s, "condition.", "finite_difference", c.condition.finite_difference);
  }
  if (root.contains("bounds") && r.object(root["bounds"], "bounds")) {
    const json& s = root["bounds"];
    r.keys(s, "bounds.", {"n_values", "epsilon_values", "gamma"});
    r.get(s, "bounds.", "n_values", c.bounds.n_values);
    r.get(s, "bounds.", "epsilon_values", c.bounds.epsilon_values);
    r.get_optional(s, "bounds.", "gamma", c.bounds.gamma);
  }

  std::vector<std::string> errors = std::move(r.errors);
  for (auto& v : validate_config(c)) errors.push_back(std::move(v));
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

std::string serialize_config(const ExperimentConfig& config) {
  return config_json(config).dump(2) + "\n";
}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
  std::vector<std::string> e;
  auto open_unit = [&](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) e.push_back(std::string(name) + " = " + num(v) + " must lie in (0,1)");
  };
  const bool online = c.command == Command::kOnlineRegret;
  const std::size_t min_n = c.command == Command::kLowerBoundDemo ? 3 : (online ? 1 : 2);

  if (c.trials < 1) e.push_back("trials must be at least 1");
  if (c.threads < 1) e.push_back("threads must be at least 1");
  if (!(c.epsilon >= 0.0 && std::isfinite(c.epsilon))) {
    e.push_back("epsilon = " + num(c.epsilon) + " must be a nonnegative real");
  }
  open_unit(c.delta, "delta");
  if (c.m_max < 1) e.push_back("m_max must be at least 1");
  if (c.out.empty()) e.push_back("out must name a directory");

  std::size_t n = c.setting.n;
  std::size_t m = c.setting.m;
  const bool inline_setting = c.setting.beliefs.has_value() || c.setting.theta.has_value();
  if (inline_setting) {
    if (!c.setting.beliefs || !c.setting.theta) {
      e.push_back("setting.beliefs and setting.theta must be given together");
    } else {
      n = c.setting.beliefs->size();
      m = c.setting.theta->size();
      for (std::size_t i = 0; i < n; ++i) {
        const Vector& row = (*c.setting.beliefs)[i];
        if (row.size() != m) {
          e.push_back("setting.beliefs[" + std::to_string(i) + "] has " +
                      std::to_string(row.size()) + " entries, theta has " + std::to_string(m));
        }
        for (double v : row) {
          if (!(v >= 0.0 && v <= 1.0)) {
            e.push_back("setting.beliefs[" + std::to_string(i) + "] has an entry outside [0,1]");
            break;
          }
        }
      }
      for (double v : *c.setting.theta) {
        if (!(v >= 0.0 && v <= 1.0)) {
          e.push_back("setting.theta has an entry outside [0,1]");
          break;
        }
      }
    }
  } else {
    try {
      const FamilyKind kind = family_from_string(c.setting.family);
      if (kind == FamilyKind::kNearTie && !(1.1 * c.setting.gap.value_or(c.epsilon) <= 0.64)) {
        e.push_back("setting.gap: near_tie needs 1.1 gap <= 0.64");
      }
    } catch (const std::invalid_argument& ex) {
      e.push_back(std::string("setting.family: ") + ex.what());
    }
  }
  if (n < min_n) {
    e.push_back("setting.n = " + std::to_string(n) + " must be at least " + std::to_string(min_n));
  }
  if (m < 1) e.push_back("setting.m must be at least 1");
  if (c.setting.gap && !(*c.setting.gap > 0.0)) e.push_back("setting.gap must be positive");

  const ConfigCheck mech = validate_mechanism(c.mechanism, std::max<std::size_t>(n, 2));
  for (const auto& msg : mech.errors) e.push_back("mechanism: " + msg);

  auto check_strategy = [&](const AgentStrategy& s, const std::string& where, std::size_t events) {
    if (const auto* x = std::get_if<Extremizer>(&s)) {
      if (!(x->pull >= 0.0 && x->pull <= 1.0)) e.push_back(where + ".pull must lie in [0,1]");
    }
    if (const auto* f = std::get_if<FixedReport>(&s)) {
      if (f->report.size() != events) {
        e.push_back(where + ".report needs " + std::to_string(events) + " entries");
      }
      for (double v : f->report) {
        if (!(v >= 0.0 && v <= 1.0)) {
          e.push_back(where + ".report has an entry outside [0,1]");
          break;
        }
      }
    }
    if (const auto* b = std::get_if<BestResponse>(&s)) {
      if (b->solver.starts < 1) e.push_back(where + ".starts must be at least 1");
      if (!(b->solver.coordinate_tolerance > 0.0)) {
        e.push_back(where + ".coordinate_tolerance must be positive");
      }
      if (b->solver.max_exact_events > 30) e.push_back(where + ".max_exact_events must be <= 30");
      if (b->solver.mode == BestResponseMode::kLeaveOneOut &&
          !std::holds_alternative<MultWeights>(c.mechanism) &&
          !std::holds_alternative<Ftrl>(c.mechanism) && !online) {
        e.push_back(where + ": leave_one_out best responses need an ftrl or mw mechanism");
      }
    }
  };
  const std::size_t events = online ? c.online.rounds : m;
  check_strategy(c.strategy, "strategy", events);
  for (std::size_t k = 0; k < c.strategies.size(); ++k) {
    check_strategy(c.strategies[k], "strategies[" + std::to_string(k) + "]", events);
  }
  if (!c.strategies.empty() && c.strategies.size() != n) {
    e.push_back("strategies has " + std::to_string(c.strategies.size()) + " entries for n = " +
                std::to_string(n) + " forecasters");
  }

  if (c.sweep.contexts < 1) e.push_back("sweep.contexts must be at least 1");
  if (c.sweep.max_forecasters < 2) e.push_back("sweep.max_forecasters must be at least 2");
  if (c.sweep.max_events < 1 || c.sweep.max_events > 20) {
    e.push_back("sweep.max_events must lie in [1, 20] (exact 2^m enumeration)");
  }
  if (c.sweep.starts < 1) e.push_back("sweep.starts must be at least 1");

  if (c.online.rounds < 1) e.push_back("online.rounds must be at least 1");
  if (c.online.eta && !(*c.online.eta > 0.0)) {
    e.push_back("online.eta = " + num(*c.online.eta) + " violates eta > 0");
  }
  if (c.online.regularizer != "neg_entropy" && c.online.regularizer != "l2") {
    e.push_back("online.regularizer must be neg_entropy or l2");
  } else if (c.online.regularizer != "neg_entropy" && !c.online.eta) {
    e.push_back("online.eta is required for regularizer " + c.online.regularizer);
  }
  if (c.online.preference != "myopic" && c.online.preference != "consistent" &&
      c.online.preference != "discounted") {
    e.push_back("online.preference must be myopic, consistent or discounted");
  }
  if (!(c.online.discount > 0.0 && c.online.discount <= 1.0)) {
    e.push_back("online.discount must lie in (0,1]");
  }
  if (c.online.lookahead < 1) e.push_back("online.lookahead must be at least 1");

  if (c.condition.regularizer != "neg_entropy" && c.condition.regularizer != "l2") {
    e.push_back("condition.regularizer must be neg_entropy or l2");
  }
  if (c.condition.samples < 1) e.push_back("condition.samples must be at least 1");
  if (!(c.condition.radius > 0.0)) e.push_back("condition.radius must be positive");
  if (c.condition.dimension < 2) e.push_back("condition.dimension must be at least 2");

  if (c.bounds.n_values.empty()) e.push_back("bounds.n_values must not be empty");
  for (std::size_t v : c.bounds.n_values) {
    if (v < 3) e.push_back("bounds.n_values entries must be >= 3 (ELF bounds need n >= 3)");
  }
  if (c.bounds.epsilon_values.empty()) e.push_back("bounds.epsilon_values must not be empty");
  for (double v : c.bounds.epsilon_values) {
    open_unit(v, "bounds.epsilon_values entry");
    if (c.bounds.gamma && !(*c.bounds.gamma > 0.0 && *c.bounds.gamma <= v / 14.0)) {
      e.push_back("bounds.gamma must lie in (0, epsilon/14] for every epsilon");
    }
  }
  return e;
}

int report_config_error(const std::filesystem::path& dir, const ConfigError& error) {
  const json record{{"error", "config"}, {"message", error.what()}, {"violations", error.violations()}};
  for (const auto& v : error.violations()) std::cerr << "config: " << v << "\n";
  write_error_record(dir, record);
  return 2;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < length; ++k) {
    out += hex[digest[k] >> 4];
    out += hex[digest[k] & 15];
  }
  return out;
}

DispatchResult dispatch(ExperimentConfig config) {
  DispatchResult result;
  const auto started = std::chrono::steady_clock::now();
  const std::filesystem::path dir(config.out);
  if (!config.seed) {
    std::random_device device;
    config.seed = (static_cast<std::uint64_t>(device()) << 32) ^ device();
  }
  result.seed = *config.seed;

  auto fail = [&](const std::string& kind, const std::string& message,
                  const std::vector<std::string>& violations) {
    json record{{"error", kind},
                {"message", message},
                {"violations", violations},
                {"command", to_string(config.command)},
                {"seed", result.seed}};
    std::cerr << record.dump() << "\n";
    if (auto path = write_error_record(dir, record)) result.outputs.push_back(*path);
    result.exit_code = kind == "config" ? 2 : 1;
    return result;
  };

  if (const auto violations = validate_config(config); !violations.empty()) {
    return fail("config", "invalid config", violations);
  }

  Output output;
  try {
    const std::uint64_t seed = result.seed;
    switch (config.command) {
      case Command::kRun:
        output = run_command(config, seed);
        break;
      case Command::kEstimateComplexity:
        output = complexity_command(config, seed);
        break;
      case Command::kTruthfulnessSweep:
        output = sweep_command(config, seed);
        break;
      case Command::kOnlineRegret:
        output = online_command(config, seed);
        break;
      case Command::kLowerBoundDemo:
        output = lower_bound_command(config, seed);
        break;
      case Command::kConditionCheck:
        output = condition_command(config, seed);
        break;
      case Command::kBoundsTable:
        output = bounds_command(config);
        break;
    }
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), {});
  }

  try {
    std::filesystem::create_directories(dir);
    output.summary["command"] = to_string(config.command);
    output.summary["seed"] = result.seed;
    const std::string summary = output.summary.dump(2) + "\n";
    write_file(dir / "results.csv", output.csv);
    write_file(dir / "summary.json", summary);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const json manifest{{"version", kVersion},
                        {"command", to_string(config.command)},
                        {"seed", result.seed},
                        {"threads", config.threads},
                        {"config", config_json(config)},
                        {"checksums",
                         {{"results.csv", sha256_hex(output.csv)},
                          {"summary.json", sha256_hex(summary)}}},
                        {"started_at", utc_now()},
                        {"wall_clock_seconds", seconds}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    result.outputs = {dir / "results.csv", dir / "summary.json", dir / "manifest.json"};
  } catch (const std::exception& e) {
    return fail("io", e.what(), {});
  }
  return result;
}

}  // namespace forecomp
