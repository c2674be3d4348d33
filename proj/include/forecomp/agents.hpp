#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "forecomp/mechanisms.hpp"
#include "forecomp/regularizers.hpp"
#include "forecomp/types.hpp"

namespace forecomp {

// ---------------------------------------------------------------------------
// Strategies

struct Truthful {
  bool operator==(const Truthful&) const = default;
};
struct FixedReport {
  Vector report;
  bool operator==(const FixedReport&) const = default;
};
// r = (1 - pull) p + pull * round(p), with p = 1/2 rounded up.
struct Extremizer {
  double pull = 1.0;
  bool operator==(const Extremizer&) const = default;
};

enum class BestResponseMode {
  // Coordinate ascent on the exact expected winning probability.
  kExact,
  // Per-event optimum against expected opponent totals. Only for FTRL and MW.
  kLeaveOneOut,
};

struct BestResponseSolver {
  BestResponseMode mode = BestResponseMode::kExact;
  std::size_t starts = 5;
  double coordinate_tolerance = 1e-8;
  std::size_t max_cycles = 200;
  std::uint64_t seed = 0;
  // Largest m whose 2^m outcome vectors are enumerated exactly.
  std::size_t max_exact_events = 20;
  // Outcome samples when m exceeds max_exact_events; 0 means throw instead.
  std::size_t monte_carlo_samples = 0;
  bool operator==(const BestResponseSolver&) const = default;
};

struct BestResponse {
  BestResponseSolver solver;
  bool operator==(const BestResponse&) const = default;
};

using AgentStrategy = std::variant<Truthful, FixedReport, Extremizer, BestResponse>;

// Reports of a non-optimizing strategy.
Vector apply_strategy(const AgentStrategy& strategy, std::span<const double> beliefs);

// ---------------------------------------------------------------------------
// Expected winning probability of one forecaster (index 0) against fixed
// opponents, under its own beliefs about the outcomes.

struct StrategicContext {
  Matrix opponent_reports;  // (n-1) x m
  Vector own_beliefs;       // m
  MechanismConfig mechanism;
};

void validate_context(const StrategicContext& context);

struct UtilityOptions {
  std::size_t max_exact_events = 20;
  std::size_t monte_carlo_samples = 0;
  std::uint64_t seed = 0;
  WinnerLawOptions law;
};

// Precomputes the opponents' totals under every outcome vector so repeated
// evaluations only pay for the candidate's own scores.
class ExpectedUtility {
 public:
  ExpectedUtility(StrategicContext context, const UtilityOptions& options = {});

  double operator()(std::span<const double> candidate) const;

  std::size_t forecasters() const { return context_.opponent_reports.rows() + 1; }
  std::size_t events() const { return context_.own_beliefs.size(); }
  bool exact() const { return exact_; }
  const StrategicContext& context() const { return context_; }

 private:
  double win_probability(const Vector& totals, const std::vector<int>& y,
                         std::span<const double> candidate) const;

  StrategicContext context_;
  UtilityOptions options_;
  bool exact_ = true;
  std::vector<std::vector<int>> outcomes_;
  Vector weights_;
  Matrix opponent_totals_;  // outcome vector x opponent
  std::shared_ptr<const Regularizer> regularizer_;
};

double expected_win_prob(const StrategicContext& context, std::span<const double> candidate,
                         const UtilityOptions& options = {});

// ---------------------------------------------------------------------------
// Single-event optima

struct LeaveOneOutResult {
  double report = 0.0;
  std::size_t iterations = 0;
};

// Optimal report on one event of an FTRL forecaster i whose selection weight
// given outcome y is d_i C(eta q^y) with q^0, q^1 fixed:
//   r = p a1 / ((1 - p) a0 + p a1),  a_y = d2_i C(eta q^y).
// Requires 0 < eta < min(alpha/2, 1/beta) and |q^0 - q^1|_inf <= 1 when the
// regularizer declares constants.
double leave_one_out_closed_form(double p, std::span<const double> q0, std::span<const double> q1,
                                 double eta, std::size_t i, const Regularizer& reg);

// Same optimum when the forecaster's own score on the event enters q^y:
// q^y = base^y + S(r, y) e_i. Solves the first-order condition by bisection.
LeaveOneOutResult leave_one_out_optimum(double p, std::span<const double> base0,
                                        std::span<const double> base1, double eta, std::size_t i,
                                        const Regularizer& reg);

// Report Noisy Max, last event, utility
//   (1 - p) F(S(r, 0) - mu0) + p F(S(r, 1) - mu1),  F the Laplace(b) CDF.
double noisy_max_round_utility(double r, double p, double mu0, double mu1, double b);

struct NoisyMaxFixedPoint {
  double report = 0.0;
  std::size_t iterations = 0;
};

// Maximizer of noisy_max_round_utility: the fixed point of
//   r = p / (E (1 - p) + p),  E = exp((|S(r,1) - mu1| - |S(r,0) - mu0|) / b).
// Requires b >= 4 and |mu0 - mu1| <= 1. Throws std::runtime_error if the
// iteration does not converge within max_iterations.
NoisyMaxFixedPoint noisy_max_fixed_point(double p, double mu0, double mu1, double b,
                                         std::size_t max_iterations = 100,
                                         double tolerance = 1e-14);

// ---------------------------------------------------------------------------
// Full best response

struct BestResponseResult {
  Vector report;
  double utility = 0.0;
  double truthful_utility = 0.0;
  // True when the mechanism's expected utility is concave or unimodal in each
  // coordinate, so coordinate ascent with golden-section search applies.
  bool certified = false;
  bool exact_utility = true;
  std::size_t cycles = 0;
  std::size_t starts = 0;
};

BestResponseResult best_response_full(const StrategicContext& context,
                                      const BestResponseSolver& solver = {});

// Maximizes f on [0, 1], assuming f is unimodal. Returns the argmax.
double golden_section_max(const std::function<double(double)>& f, double tolerance);

// ---------------------------------------------------------------------------
// Dominance clamp

struct ClampResult {
  bool clamped = false;
  Vector report;
  std::size_t changed_coordinates = 0;
  double utility_before = 0.0;
  double utility_after = 0.0;
  bool strictly_improved = false;
};

// Moves the coordinates of `report` that lie more than gamma from the belief
// to distance exactly gamma, one at a time, and checks that every move
// strictly raises the expected utility. FTRL / MW only, with eta inside the
// truthfulness range.
ClampResult dominance_clamp_check(const StrategicContext& context, std::span<const double> report,
                                  double gamma, const UtilityOptions& options = {});

// Bound on |best response - belief| for FTRL: (beta + 1) eta.
double ftrl_truthfulness_gamma(double eta, const CurvatureConstants& constants);
// Bound on |best response - belief| for Report Noisy Max: 4 / b.
double noisy_max_truthfulness_gamma(double b);

// ---------------------------------------------------------------------------
// Truthfulness gap sweep

struct SweepConfig {
  std::size_t contexts = 200;
  std::size_t max_forecasters = 5;
  std::size_t max_events = 5;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  BestResponseSolver solver;
};

struct GapWitness {
  Matrix opponent_reports;
  Vector own_beliefs;
  Vector best_response;
  std::size_t coordinate = 0;
};

struct TruthfulnessGapReport {
  std::string mechanism;
  double gamma_empirical = 0.0;
  std::optional<double> gamma_theoretical;
  std::size_t contexts = 0;
  bool all_certified = true;
  Vector gaps;  // max_t |r_t - p_t| per context
  GapWitness witness;
};

TruthfulnessGapReport truthfulness_gap_sweep(const MechanismConfig& mechanism,
                                             const SweepConfig& config);

// Optimal per-event reports against the opponents' expected final totals
// under the forecaster's own beliefs (its other reports truthful). FTRL / MW.
Vector leave_one_out_response(const StrategicContext& context);

// ---------------------------------------------------------------------------
// Reports of a whole population

// Builds the report matrix. Best-response agents respond to the others'
// planned reports (non-optimizing strategies, truthful for other optimizers).
ReportMatrix build_reports(const BeliefMatrix& beliefs, const std::vector<AgentStrategy>& strategies,
                           const MechanismConfig& mechanism);

}  // namespace forecomp
