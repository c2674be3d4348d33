#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "forecomp/agents.hpp"
#include "forecomp/mechanisms.hpp"
#include "forecomp/regularizers.hpp"
#include "forecomp/rng.hpp"
#include "forecomp/scoring.hpp"
#include "forecomp/types.hpp"

namespace forecomp {

// ---------------------------------------------------------------------------
// Settings

class CompetitionSetting {
 public:
  CompetitionSetting(BeliefMatrix beliefs, GroundTruth theta);

  std::size_t n() const { return beliefs_.rows(); }
  std::size_t m() const { return beliefs_.cols(); }
  const BeliefMatrix& beliefs() const { return beliefs_; }
  const GroundTruth& theta() const { return theta_; }
  const AccuracyVector& accuracies() const { return accuracies_; }
  double best_accuracy() const { return best_; }

 private:
  BeliefMatrix beliefs_;
  GroundTruth theta_;
  AccuracyVector accuracies_;
  double best_ = 0.0;
};

// theta = 1 on every event, forecaster 0 reports all ones, the rest all zeros.
CompetitionSetting perfect_vs_terrible_setting(std::size_t n, std::size_t m);

enum class FamilyKind {
  // theta_t ~ U[0,1]; forecaster i has skill s_i ~ U[0,1] and believes
  // theta_t + s_i (far_t - theta_t), far_t the endpoint farther from theta_t.
  kRandom,
  kPerfectVsTerrible,
  // Forecaster 0 knows theta; the others trail it in accuracy by exactly
  // 0.9 epsilon or 1.1 epsilon, alternating.
  kNearTie,
  // Every forecaster holds the same beliefs.
  kAllTie,
};

const char* to_string(FamilyKind kind);
FamilyKind family_from_string(const std::string& name);

struct SettingFamily {
  FamilyKind kind = FamilyKind::kRandom;
  std::size_t n = 10;
  double epsilon = 0.1;  // gap scale of kNearTie
};

CompetitionSetting generate_setting(const SettingFamily& family, std::size_t m, Rng& rng);

// ---------------------------------------------------------------------------
// Trials

struct TrialResult {
  std::size_t winner = 0;
  double winner_accuracy = 0.0;
  double best_accuracy = 0.0;
  bool eps_optimal(double epsilon) const { return winner_accuracy >= best_accuracy - epsilon; }
};

// Builds R from the strategies, draws y ~ theta, runs the mechanism.
TrialResult run_competition_trial(const CompetitionSetting& setting,
                                  const std::vector<AgentStrategy>& strategies,
                                  const MechanismConfig& mechanism, Rng& rng);
// Same with precomputed reports.
TrialResult run_competition_trial(const CompetitionSetting& setting, const ReportMatrix& reports,
                                  const MechanismConfig& mechanism, Rng& rng);

struct TrialOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct SuccessEstimate {
  std::size_t trials = 0;
  std::size_t successes = 0;
  double rate = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
  double halfwidth = 0.0;  // half the two-sided 95% Wilson interval
};

struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z);

SuccessEstimate make_success_estimate(std::size_t successes, std::size_t trials);

// Runs options.trials trials on a fixed report matrix. Trial k draws outcomes
// and mechanism randomness from derive_seed(seed, k).
std::vector<TrialResult> run_trials(const CompetitionSetting& setting, const ReportMatrix& reports,
                                    const MechanismConfig& mechanism, const TrialOptions& options);

SuccessEstimate estimate_success_prob(const CompetitionSetting& setting,
                                      const std::vector<AgentStrategy>& strategies,
                                      const MechanismConfig& mechanism, double epsilon,
                                      const TrialOptions& options);
// Draws a fresh setting with m events from the family in every trial; every
// forecaster follows `strategy`.
SuccessEstimate estimate_success_prob(const SettingFamily& family, std::size_t m,
                                      const AgentStrategy& strategy,
                                      const MechanismConfig& mechanism, double epsilon,
                                      const TrialOptions& options);

// ---------------------------------------------------------------------------
// Event complexity

struct ProbeRecord {
  std::size_t m = 0;
  SuccessEstimate estimate;
  bool passed = false;
};

struct ComplexityEstimate {
  MechanismConfig mechanism;
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t m_estimate = 0;
  std::size_t trials = 0;
  double empirical_success = 0.0;
  double confidence_halfwidth = 0.0;
  std::vector<ProbeRecord> probes;  // in probe order
};

struct ComplexitySearch {
  std::size_t m_max = std::size_t{1} << 20;
  // One-sided normal quantile of the per-probe test (95%).
  double z = 1.6448536269514722;
};

// Smallest m whose one-sided Wilson lower bound on the success rate reaches
// 1 - delta: doubling from m = 1, then bisection inside the last bracket.
// Throws std::runtime_error when no probe up to m_max passes.
ComplexityEstimate estimate_event_complexity(const MechanismConfig& mechanism,
                                             const SettingFamily& family,
                                             const AgentStrategy& strategy, double epsilon,
                                             double delta, const TrialOptions& options,
                                             const ComplexitySearch& search = {});

// ---------------------------------------------------------------------------
// Theoretical bounds

enum class BoundVariant {
  kSimpleMax,    // 2 ln(n/delta) / eps^2
  kElf,          // 5 (n-1) / eps^2 ln(4(n-1)/delta)
  kElfProof,     // 20 (n-1) ln(n/delta) / eps^2
  kElfPrevious,  // n^2 ln(n) / eps^2, the earlier order of growth without constants
  kMw,           // 200 ln(2n/delta) / eps^2
  kNoisyMax,     // 28 ln(2n/delta) / (eps gamma)
};

const char* to_string(BoundVariant variant);
BoundVariant bound_from_string(const std::string& name);
std::vector<BoundVariant> all_bound_variants();

// Ceiling of the named formula. gamma defaults to eps/14 for kNoisyMax.
std::uint64_t theoretical_bounds(std::size_t n, double epsilon, double delta,
                                 BoundVariant variant, std::optional<double> gamma = {});

// Parameters the bounds assume: eta = eps/40 for MW, b = 4/gamma for Noisy Max.
double mw_bound_eta(double epsilon);
double noisy_max_bound_b(double gamma);

// ---------------------------------------------------------------------------
// Lower-bound scenario and balls in bins

struct LowerBoundDemo {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t trials = 0;
  SuccessEstimate elf;
  SuccessEstimate simple_max;
};

// Perfect-vs-terrible with m = ceil((n/4) ln n); success means forecaster 0 wins.
LowerBoundDemo lower_bound_demo(std::size_t n, const TrialOptions& options);

struct BallsInBins {
  std::size_t bins = 0;
  std::size_t balls = 0;
  std::size_t trials = 0;
  double c = 0.0;          // m / (n ln n)
  double threshold = 0.0;  // 4 c ln n + 1
  std::size_t exceed = 0;
  double probability = 0.0;  // Pr[max load > threshold]
  double mean_max_load = 0.0;
  std::vector<std::size_t> max_loads;
};

BallsInBins balls_in_bins_max(std::size_t bins, std::size_t balls, const TrialOptions& options);

// ---------------------------------------------------------------------------
// Online setting

// Weights c[t][s] of the selection probability pi^s in the utility of the
// round-t report, rounds t = 0..T-1 and s = t+1..T.
class OnlinePreference {
 public:
  enum class Kind { kMyopic, kConsistent, kDiscounted, kCustom };

  static OnlinePreference myopic() { return OnlinePreference(Kind::kMyopic, 1.0, {}); }
  static OnlinePreference consistent() { return OnlinePreference(Kind::kConsistent, 1.0, {}); }
  static OnlinePreference discounted(double factor);
  // rows[t][s] for s in 0..T; entries with s <= t are ignored.
  static OnlinePreference custom(std::vector<Vector> rows);

  Kind kind() const { return kind_; }
  double discount() const { return discount_; }
  double coefficient(std::size_t t, std::size_t s) const;
  // Throws unless the coefficients cover T rounds, are nonnegative and not
  // all zero in any round.
  void validate(std::size_t rounds) const;

 private:
  OnlinePreference(Kind kind, double discount, std::vector<Vector> rows)
      : kind_(kind), discount_(discount), rows_(std::move(rows)) {}
  Kind kind_;
  double discount_;
  std::vector<Vector> rows_;
};

const char* to_string(OnlinePreference::Kind kind);

struct OnlineSetup {
  BeliefMatrix beliefs;  // n x T
  Vector theta;          // T
  std::vector<AgentStrategy> strategies;
  OnlinePreference preference = OnlinePreference::myopic();
  std::string regularizer = "neg_entropy";
  double eta = 0.0;
  // Future rounds considered by non-myopic best responses.
  std::size_t lookahead = 64;
};

struct RegretTrace {
  Matrix pi;  // T x n, row t is pi^t
  Matrix reports;  // n x T
  OutcomeVector outcomes;
  Vector mechanism_scores;  // E_{i ~ pi^t} S(r_it, y_t) per round
  Vector expert_totals;     // sum_t S(p_it, y_t)
  double regret = 0.0;
  std::size_t best_expert = 0;
  std::optional<double> bound;
};

// Plays T rounds. pi^t is computed before the round-t reports and outcome
// exist, so it only sees earlier rounds.
RegretTrace online_run(const OnlineSetup& setup, Rng& rng);

// pi^t recomputed from scratch from the first t rounds.
SelectionDistribution online_distribution(const Matrix& reports, const OutcomeVector& outcomes,
                                          std::size_t t, const Regularizer& reg, double eta);

// Reg* recomputed from the stored beliefs, reports, outcomes and pi.
double recompute_regret(const RegretTrace& trace, const BeliefMatrix& beliefs);

// 2 sqrt(2(beta+2) D T); requires T >= max(1/alpha^2, beta/2) D.
double regret_bound_general(std::size_t rounds, double diameter, const CurvatureConstants& c);
// 2 sqrt(10 T ln n); requires T >= 8.
double regret_bound_mw(std::size_t rounds, std::size_t n);
// Step sizes matching the two bounds.
double online_eta_general(std::size_t rounds, double diameter, const CurvatureConstants& c);
double online_eta_mw(std::size_t rounds, std::size_t n);

}  // namespace forecomp
