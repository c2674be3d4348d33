#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "forecomp/regularizers.hpp"
#include "forecomp/rng.hpp"
#include "forecomp/types.hpp"

namespace forecomp {

// ---------------------------------------------------------------------------
// Mechanism configuration

struct SimpleMax {
  bool operator==(const SimpleMax&) const = default;
};
struct Elf {
  bool operator==(const Elf&) const = default;
};
// Point-per-round lottery with rule g(r, y) = offset + scale * S(r, y).
struct PointPerRound {
  double scale = 0.0;
  double offset = 0.0;
  bool operator==(const PointPerRound&) const = default;
};
struct Ftrl {
  std::string regularizer = "neg_entropy";
  double eta = 0.0;
  bool operator==(const Ftrl&) const = default;
};
struct MultWeights {
  double eta = 0.0;
  bool operator==(const MultWeights&) const = default;
};
struct ReportNoisyMax {
  double b = 0.0;
  bool operator==(const ReportNoisyMax&) const = default;
};

using MechanismConfig =
    std::variant<SimpleMax, Elf, PointPerRound, Ftrl, MultWeights, ReportNoisyMax>;

std::string mechanism_name(const MechanismConfig& config);

struct ConfigCheck {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

// Parameter-range validation: eta > 0 (warning unless eta < min(alpha/2, 1/beta)),
// b >= 4 for Report Noisy Max, g's range no longer than 1/n.
ConfigCheck validate_mechanism(const MechanismConfig& config, std::size_t n);

// Largest eta covered by the approximate-truthfulness guarantee of a
// regularizer with these constants: min(alpha/2, 1/beta).
double truthful_eta_limit(const CurvatureConstants& constants);

// ---------------------------------------------------------------------------
// Selection results

struct RngTrace {
  std::uint64_t seed = 0;
  std::uint64_t first_draw = 0;  // draws consumed before this selection
  std::uint64_t draw_count = 0;  // draws consumed by this selection
};

struct WinnerDraw {
  std::size_t winner = 0;
  // Law of the winner given (R, y). For lottery and noise based mechanisms it
  // is conditioned on the realized points / noise as well; `exact_law` tells
  // which case applies.
  SelectionDistribution distribution;
  bool exact_law = true;
  RngTrace rng_trace;
};

// Draws an index from the distribution with one uniform.
std::size_t sample_index(std::span<const double> probabilities, Rng& rng);

// ---------------------------------------------------------------------------
// Simple Max

WinnerDraw simple_max_select(const ReportMatrix& reports, const OutcomeVector& outcomes, Rng& rng);
// Uniform law over the argmax set of total scores.
SelectionDistribution simple_max_law(std::span<const double> totals);

// ---------------------------------------------------------------------------
// ELF and general point-per-round lotteries

// A bounded scoring rule for point-per-round lotteries with its declared range.
struct ScoringRule {
  std::string name;
  std::function<double(double, int)> fn;
  double range_lo = 0.0;
  double range_hi = 1.0;
};

ScoringRule scaled_quadratic_rule(double scale, double offset = 0.0);

// Thrown when a point rule can produce per-round probabilities outside [0,1].
class PointRuleRangeError : public std::domain_error {
 public:
  PointRuleRangeError(const std::string& what, std::string witness)
      : std::domain_error(what), witness_(std::move(witness)) {}
  const std::string& witness() const { return witness_; }

 private:
  std::string witness_;
};

// Checks declared range length <= 1/n and samples g on a grid to confirm the
// declaration. Throws PointRuleRangeError.
void validate_point_rule(const ScoringRule& g, std::size_t n);

// Per-event lottery law f_it = 1/n + (1/n)(S(r_it, y_t) - mean_{j != i} S(r_jt, y_t)).
Vector elf_point_prob(const ReportMatrix& reports, int outcome, std::size_t t);
// f_it = 1/n + g(r_it, y_t) - (1/(n-1)) sum_{j != i} g(r_jt, y_t).
Vector point_per_round_prob(const ReportMatrix& reports, int outcome, std::size_t t,
                            const ScoringRule& g);

WinnerDraw elf_select(const ReportMatrix& reports, const OutcomeVector& outcomes, Rng& rng);
WinnerDraw point_per_round_select(const ReportMatrix& reports, const OutcomeVector& outcomes,
                                  const ScoringRule& g, Rng& rng);

// Exact winner law of a point-per-round mechanism by enumerating all n^m point
// allocations. Throws std::length_error when n^m exceeds `budget`.
inline constexpr std::uint64_t kDefaultEnumerationBudget = 1ULL << 20;
SelectionDistribution point_lottery_winner_law(const Matrix& per_event_probs,
                                               std::uint64_t budget = kDefaultEnumerationBudget);

// ---------------------------------------------------------------------------
// FTRL and Multiplicative Weights

SelectionDistribution ftrl_select(const ReportMatrix& reports, const OutcomeVector& outcomes,
                                  const Regularizer& reg, double eta);
SelectionDistribution mw_select(const ReportMatrix& reports, const OutcomeVector& outcomes,
                                double eta);
// softmax(eta * totals), stabilized.
SelectionDistribution mw_from_scores(std::span<const double> totals, double eta);

// ---------------------------------------------------------------------------
// Report Noisy Max

// Inverse CDF of Laplace(0, b) at u in (-1/2, 1/2).
double laplace_from_uniform(double u, double b);
double sample_laplace(Rng& rng, double b);

WinnerDraw report_noisy_max_select(const ReportMatrix& reports, const OutcomeVector& outcomes,
                                   double b, Rng& rng);
// Exact Pr[i = argmax_j (totals_j + Laplace(b))] with independent noise.
double noisy_max_win_probability(std::span<const double> totals, double b, std::size_t i);
Vector noisy_max_win_probabilities(std::span<const double> totals, double b);

// ---------------------------------------------------------------------------
// Generic dispatch

WinnerDraw select_winner(const MechanismConfig& config, const ReportMatrix& reports,
                         const OutcomeVector& outcomes, Rng& rng);

struct WinnerLawOptions {
  std::uint64_t enumeration_budget = kDefaultEnumerationBudget;
  // Used for lottery mechanisms beyond the budget; 0 disables the fallback.
  std::size_t monte_carlo_samples = 0;
  std::uint64_t seed = 0;
};

struct WinnerLaw {
  Vector probabilities;
  bool exact = true;
  Vector standard_error;  // empty when exact
};

// Law of the winner given (R, y), marginalizing the mechanism's own randomness.
WinnerLaw winner_law(const MechanismConfig& config, const ReportMatrix& reports,
                     const OutcomeVector& outcomes, const WinnerLawOptions& options = {});

}  // namespace forecomp
