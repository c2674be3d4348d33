#include "forecomp/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "forecomp/parallel.hpp"
#include "forecomp/rng.hpp"
#include "forecomp/scoring.hpp"

namespace forecomp {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kConsistencySlack = 1e-12;

void require_report_vector(std::span<const double> r, std::size_t m, const char* what) {
  if (r.size() != m) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(m) +
                                " entries, got " + std::to_string(r.size()));
  }
  for (double v : r) require_probability(v, what);
}

// Regularizer and eta of an FTRL-family mechanism, or nullptr otherwise.
struct FtrlParams {
  std::shared_ptr<const Regularizer> reg;
  double eta = 0.0;
};

std::optional<FtrlParams> ftrl_params(const MechanismConfig& mechanism) {
  if (const auto* w = std::get_if<MultWeights>(&mechanism)) {
    return FtrlParams{std::make_shared<NegativeEntropy>(), w->eta};
  }
  if (const auto* f = std::get_if<Ftrl>(&mechanism)) {
    return FtrlParams{make_regularizer(f->regularizer), f->eta};
  }
  return std::nullopt;
}

void require_truthful_eta(double eta, const Regularizer& reg) {
  if (!(eta > 0.0)) throw std::domain_error("eta must be positive");
  if (const auto c = reg.declared_constants()) {
    const double limit = truthful_eta_limit(*c);
    if (!(eta < limit)) {
      throw std::domain_error("eta = " + std::to_string(eta) +
                              " violates the truthfulness precondition eta < min(alpha/2, 1/beta) = " +
                              std::to_string(limit));
    }
  }
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("score vectors differ in length");
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
  return d;
}

void check_single_event_inputs(double p, std::span<const double> q0, std::span<const double> q1,
                               double eta, std::size_t i, const Regularizer& reg) {
  require_probability(p, "belief");
  require_truthful_eta(eta, reg);
  if (q0.empty() || i >= q0.size()) throw std::out_of_range("forecaster index");
  if (sup_distance(q0, q1) > 1.0 + kConsistencySlack) {
    throw std::domain_error("score vectors for y = 0 and y = 1 differ by more than 1");
  }
}

// Per-event best response of FTRL with q^y = base^y + S(r, y) e_i.
class LeaveOneOutSolver {
 public:
  LeaveOneOutSolver(std::span<const double> base0, std::span<const double> base1, double eta,
                    std::size_t i, const Regularizer& reg)
      : base0_(base0), base1_(base1), eta_(eta), i_(i), reg_(reg), x_(base0.size()) {}

  double curvature(std::span<const double> base, double own_score) const {
    for (std::size_t j = 0; j < base.size(); ++j) x_[j] = eta_ * base[j];
    x_[i_] = eta_ * (base[i_] + own_score);
    return reg_.conjugate_partial2(x_, i_);
  }

  double update(double p, double r) const {
    const double a0 = curvature(base0_, quadratic_score_unchecked(r, 0));
    const double a1 = curvature(base1_, quadratic_score_unchecked(r, 1));
    const double denom = (1.0 - p) * a0 + p * a1;
    return denom > 0.0 ? p * a1 / denom : p;
  }

  // Proportional to the derivative of the expected selection weight.
  double slope(double p, double r) const {
    const double a0 = curvature(base0_, quadratic_score_unchecked(r, 0));
    const double a1 = curvature(base1_, quadratic_score_unchecked(r, 1));
    return p * a1 * (1.0 - r) - (1.0 - p) * a0 * r;
  }

 private:
  std::span<const double> base0_;
  std::span<const double> base1_;
  double eta_;
  std::size_t i_;
  const Regularizer& reg_;
  mutable Vector x_;
};

LeaveOneOutResult solve_leave_one_out(double p, const LeaveOneOutSolver& solver) {
  if (p == 0.0 || p == 1.0) return {p, 0};
  double r = p;
  for (std::size_t k = 1; k <= 60; ++k) {
    const double next = solver.update(p, r);
    if (std::abs(next - r) <= 1e-15) return {next, k};
    r = next;
  }
  // The fixed-point map is a contraction for eta in range; bisection on the
  // decreasing first-order condition is the fallback.
  double lo = 0.0;
  double hi = 1.0;
  std::size_t k = 60;
  while (hi - lo > 1e-15 && k < 400) {
    const double mid = 0.5 * (lo + hi);
    if (solver.slope(p, mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++k;
  }
  return {0.5 * (lo + hi), k};
}

double laplace_cdf(double x, double b) {
  return x < 0.0 ? 0.5 * std::exp(x / b) : 1.0 - 0.5 * std::exp(-x / b);
}

bool per_coordinate_unimodal(const MechanismConfig& mechanism) {
  return std::visit(
      Overloaded{
          [](const SimpleMax&) { return false; },
          [](const Elf&) { return true; },
          [](const PointPerRound&) { return true; },
          [](const Ftrl& f) {
            const auto reg = make_regularizer(f.regularizer);
            const auto c = reg->declared_constants();
            return c && f.eta > 0.0 && f.eta < truthful_eta_limit(*c);
          },
          [](const MultWeights& w) {
            return w.eta > 0.0 && w.eta < truthful_eta_limit(*NegativeEntropy().declared_constants());
          },
          [](const ReportNoisyMax& r) { return r.b >= 4.0; },
      },
      mechanism);
}

}  // namespace

// ---------------------------------------------------------------------------

Vector apply_strategy(const AgentStrategy& strategy, std::span<const double> beliefs) {
  return std::visit(
      Overloaded{
          [&](const Truthful&) { return Vector(beliefs.begin(), beliefs.end()); },
          [&](const FixedReport& f) {
            require_report_vector(f.report, beliefs.size(), "fixed report");
            return f.report;
          },
          [&](const Extremizer& e) {
            if (!(e.pull >= 0.0 && e.pull <= 1.0)) {
              throw std::domain_error("extremizer pull must lie in [0,1]");
            }
            Vector r(beliefs.size());
            for (std::size_t t = 0; t < r.size(); ++t) {
              const double target = beliefs[t] >= 0.5 ? 1.0 : 0.0;
              r[t] = std::clamp((1.0 - e.pull) * beliefs[t] + e.pull * target, 0.0, 1.0);
            }
            return r;
          },
          [&](const BestResponse&) -> Vector {
            throw std::invalid_argument("best response needs the opponents' reports");
          },
      },
      strategy);
}

void validate_context(const StrategicContext& context) {
  if (context.opponent_reports.rows() == 0) {
    throw std::invalid_argument("strategic context needs at least one opponent");
  }
  const std::size_t m = context.own_beliefs.size();
  if (context.opponent_reports.cols() != m) {
    throw std::invalid_argument("opponent reports and beliefs cover different event counts");
  }
  for (double p : context.own_beliefs) require_probability(p, "belief");
  for (std::size_t j = 0; j < context.opponent_reports.rows(); ++j) {
    for (double r : context.opponent_reports.row(j)) require_probability(r, "report");
  }
}

// ---------------------------------------------------------------------------

ExpectedUtility::ExpectedUtility(StrategicContext context, const UtilityOptions& options)
    : context_(std::move(context)), options_(options) {
  validate_context(context_);
  const std::size_t m = events();
  const std::size_t opponents = context_.opponent_reports.rows();
  const auto& p = context_.own_beliefs;

  if (m <= options_.max_exact_events) {
    const std::size_t count = std::size_t{1} << m;
    outcomes_.reserve(count);
    weights_.reserve(count);
    for (std::size_t mask = 0; mask < count; ++mask) {
      std::vector<int> y(m);
      double w = 1.0;
      for (std::size_t t = 0; t < m; ++t) {
        y[t] = static_cast<int>((mask >> t) & 1U);
        w *= y[t] ? p[t] : 1.0 - p[t];
      }
      if (w == 0.0) continue;
      outcomes_.push_back(std::move(y));
      weights_.push_back(w);
    }
  } else if (options_.monte_carlo_samples > 0) {
    exact_ = false;
    Rng rng(options_.seed);
    const double w = 1.0 / static_cast<double>(options_.monte_carlo_samples);
    for (std::size_t s = 0; s < options_.monte_carlo_samples; ++s) {
      std::vector<int> y(m);
      for (std::size_t t = 0; t < m; ++t) y[t] = rng.bernoulli(p[t]) ? 1 : 0;
      outcomes_.push_back(std::move(y));
      weights_.push_back(w);
    }
  } else {
    throw std::length_error("expected utility: m = " + std::to_string(m) +
                            " exceeds the exact enumeration budget of " +
                            std::to_string(options_.max_exact_events) +
                            " events and Monte Carlo is disabled");
  }

  opponent_totals_ = Matrix(outcomes_.size(), opponents);
  for (std::size_t k = 0; k < outcomes_.size(); ++k) {
    for (std::size_t j = 0; j < opponents; ++j) {
      const auto row = context_.opponent_reports.row(j);
      double s = 0.0;
      for (std::size_t t = 0; t < m; ++t) s += quadratic_score_unchecked(row[t], outcomes_[k][t]);
      opponent_totals_(k, j) = s;
    }
  }

  if (const auto* f = std::get_if<Ftrl>(&context_.mechanism)) {
    regularizer_ = make_regularizer(f->regularizer);
  }
  if (const auto* g = std::get_if<PointPerRound>(&context_.mechanism)) {
    validate_point_rule(scaled_quadratic_rule(g->scale, g->offset), forecasters());
  }
  if (const auto* r = std::get_if<ReportNoisyMax>(&context_.mechanism)) {
    if (!(r->b > 0.0)) throw std::domain_error("Laplace scale b must be positive");
  }
}

double ExpectedUtility::win_probability(const Vector& totals, const std::vector<int>& y,
                                        std::span<const double> candidate) const {
  return std::visit(
      Overloaded{
          [&](const SimpleMax&) {
            const double top = *std::max_element(totals.begin(), totals.end());
            if (totals[0] != top) return 0.0;
            const auto ties = std::count(totals.begin(), totals.end(), top);
            return 1.0 / static_cast<double>(ties);
          },
          [&](const MultWeights& w) { return mw_from_scores(totals, w.eta)[0]; },
          [&](const Ftrl& f) {
            Vector x(totals.size());
            for (std::size_t j = 0; j < x.size(); ++j) x[j] = f.eta * totals[j];
            return regularizer_->conjugate_grad(x)[0];
          },
          [&](const ReportNoisyMax& r) { return noisy_max_win_probability(totals, r.b, 0); },
          [&](const auto&) {
            Matrix full(forecasters(), events());
            std::copy(candidate.begin(), candidate.end(), full.row(0).begin());
            for (std::size_t j = 0; j + 1 < forecasters(); ++j) {
              const auto src = context_.opponent_reports.row(j);
              std::copy(src.begin(), src.end(), full.row(j + 1).begin());
            }
            const WinnerLaw law = winner_law(context_.mechanism, ReportMatrix(std::move(full)),
                                             OutcomeVector(y), options_.law);
            return law.probabilities[0];
          },
      },
      context_.mechanism);
}

double ExpectedUtility::operator()(std::span<const double> candidate) const {
  require_report_vector(candidate, events(), "candidate report");
  const std::size_t m = events();
  Vector totals(forecasters());
  CompensatedSum utility;
  for (std::size_t k = 0; k < outcomes_.size(); ++k) {
    const auto& y = outcomes_[k];
    double own = 0.0;
    for (std::size_t t = 0; t < m; ++t) own += quadratic_score_unchecked(candidate[t], y[t]);
    totals[0] = own;
    for (std::size_t j = 1; j < totals.size(); ++j) totals[j] = opponent_totals_(k, j - 1);
    utility.add(weights_[k] * win_probability(totals, y, candidate));
  }
  return utility.value();
}

double expected_win_prob(const StrategicContext& context, std::span<const double> candidate,
                         const UtilityOptions& options) {
  return ExpectedUtility(context, options)(candidate);
}

// ---------------------------------------------------------------------------

double leave_one_out_closed_form(double p, std::span<const double> q0, std::span<const double> q1,
                                 double eta, std::size_t i, const Regularizer& reg) {
  check_single_event_inputs(p, q0, q1, eta, i, reg);
  Vector x0(q0.size());
  Vector x1(q1.size());
  for (std::size_t j = 0; j < q0.size(); ++j) {
    x0[j] = eta * q0[j];
    x1[j] = eta * q1[j];
  }
  const double a0 = reg.conjugate_partial2(x0, i);
  const double a1 = reg.conjugate_partial2(x1, i);
  const double denom = (1.0 - p) * a0 + p * a1;
  if (!(denom > 0.0)) return p;
  return p * a1 / denom;
}

LeaveOneOutResult leave_one_out_optimum(double p, std::span<const double> base0,
                                        std::span<const double> base1, double eta, std::size_t i,
                                        const Regularizer& reg) {
  check_single_event_inputs(p, base0, base1, eta, i, reg);
  return solve_leave_one_out(p, LeaveOneOutSolver(base0, base1, eta, i, reg));
}

double noisy_max_round_utility(double r, double p, double mu0, double mu1, double b) {
  return (1.0 - p) * laplace_cdf(quadratic_score_unchecked(r, 0) - mu0, b) +
         p * laplace_cdf(quadratic_score_unchecked(r, 1) - mu1, b);
}

NoisyMaxFixedPoint noisy_max_fixed_point(double p, double mu0, double mu1, double b,
                                         std::size_t max_iterations, double tolerance) {
  require_probability(p, "belief");
  if (!(b >= 4.0)) throw std::domain_error("noisy max fixed point requires b >= 4");
  if (!(std::abs(mu1 - mu0) <= 1.0)) {
    throw std::domain_error("noisy max fixed point requires |mu1 - mu0| <= 1");
  }
  auto phi = [&](double r) {
    const double e = std::exp((std::abs(quadratic_score_unchecked(r, 1) - mu1) -
                               std::abs(quadratic_score_unchecked(r, 0) - mu0)) /
                              b);
    return p / (e - p * e + p);
  };
  double r = p;
  for (std::size_t k = 1; k <= max_iterations; ++k) {
    const double next = phi(r);
    if (std::abs(next - r) <= tolerance) return {next, k};
    r = next;
  }
  throw std::runtime_error("noisy max fixed point did not converge in " +
                           std::to_string(max_iterations) + " iterations");
}

// ---------------------------------------------------------------------------

double golden_section_max(const std::function<double(double)>& f, double tolerance) {
  static const double kInvPhi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0;
  double b = 1.0;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  // The maximum of a unimodal function may sit on the boundary.
  double best = 0.5 * (a + b);
  double best_value = f(best);
  for (double edge : {0.0, 1.0}) {
    const double v = f(edge);
    if (v > best_value) {
      best = edge;
      best_value = v;
    }
  }
  return best;
}

namespace {

// Grid search on [0,1] followed by golden-section refinement around the best
// grid point. Used where unimodality is not guaranteed.
double grid_then_refine(const std::function<double(double)>& f, double tolerance) {
  constexpr std::size_t kGrid = 1000;
  std::size_t best_k = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= kGrid; ++k) {
    const double v = f(static_cast<double>(k) / kGrid);
    if (v > best_value) {
      best_value = v;
      best_k = k;
    }
  }
  const double lo = static_cast<double>(best_k == 0 ? 0 : best_k - 1) / kGrid;
  const double hi = static_cast<double>(std::min(best_k + 1, kGrid)) / kGrid;
  const double local = lo + (hi - lo) * golden_section_max(
                                            [&](double u) { return f(lo + (hi - lo) * u); },
                                            tolerance / (hi - lo));
  return f(local) > best_value ? local : static_cast<double>(best_k) / kGrid;
}

}  // namespace

BestResponseResult best_response_full(const StrategicContext& context,
                                      const BestResponseSolver& solver) {
  UtilityOptions options;
  options.max_exact_events = solver.max_exact_events;
  options.monte_carlo_samples = solver.monte_carlo_samples;
  options.seed = derive_seed(solver.seed, 0x5eed);
  const ExpectedUtility utility(context, options);
  const std::size_t m = utility.events();

  BestResponseResult result;
  result.certified = per_coordinate_unimodal(context.mechanism);
  result.exact_utility = utility.exact();
  result.truthful_utility = utility(context.own_beliefs);
  result.report = context.own_beliefs;
  result.utility = result.truthful_utility;
  if (m == 0) return result;

  const double inner_tolerance = solver.coordinate_tolerance / 10.0;
  Rng rng(solver.seed);
  const std::size_t starts = std::max<std::size_t>(solver.starts, 1);
  for (std::size_t s = 0; s < starts; ++s) {
    Vector r = context.own_beliefs;
    if (s > 0) {
      for (double& v : r) v = rng.uniform();
    }
    double value = utility(r);
    std::size_t cycle = 0;
    for (; cycle < solver.max_cycles; ++cycle) {
      double largest_move = 0.0;
      for (std::size_t t = 0; t < m; ++t) {
        const double old = r[t];
        auto along = [&](double v) {
          r[t] = v;
          return utility(r);
        };
        const double candidate = result.certified ? golden_section_max(along, inner_tolerance)
                                                  : grid_then_refine(along, inner_tolerance);
        const double candidate_value = along(candidate);
        if (candidate_value > value) {
          value = candidate_value;
          largest_move = std::max(largest_move, std::abs(candidate - old));
        } else {
          r[t] = old;
        }
      }
      if (largest_move <= solver.coordinate_tolerance) {
        ++cycle;
        break;
      }
    }
    result.cycles += cycle;
    ++result.starts;
    if (value > result.utility) {
      result.utility = value;
      result.report = r;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

double ftrl_truthfulness_gamma(double eta, const CurvatureConstants& constants) {
  return (constants.beta + 1.0) * eta;
}

double noisy_max_truthfulness_gamma(double b) {
  if (!(b > 0.0)) throw std::domain_error("Laplace scale b must be positive");
  return 4.0 / b;
}

ClampResult dominance_clamp_check(const StrategicContext& context, std::span<const double> report,
                                  double gamma, const UtilityOptions& options) {
  const auto params = ftrl_params(context.mechanism);
  if (!params) throw std::invalid_argument("dominance clamp applies to FTRL and MW only");
  require_truthful_eta(params->eta, *params->reg);
  if (!(gamma >= 0.0)) throw std::domain_error("gamma must be nonnegative");

  const ExpectedUtility utility(context, options);
  require_report_vector(report, utility.events(), "report");
  const auto& p = context.own_beliefs;

  ClampResult result;
  result.report.assign(report.begin(), report.end());
  result.utility_before = utility(result.report);
  result.utility_after = result.utility_before;
  result.strictly_improved = true;
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double d = result.report[t] - p[t];
    if (std::abs(d) <= gamma) continue;
    result.report[t] = d > 0.0 ? p[t] + gamma : p[t] - gamma;
    const double after = utility(result.report);
    if (!(after > result.utility_after)) result.strictly_improved = false;
    result.utility_after = after;
    ++result.changed_coordinates;
  }
  result.clamped = result.changed_coordinates > 0;
  if (!result.clamped) result.strictly_improved = false;
  return result;
}

// ---------------------------------------------------------------------------

TruthfulnessGapReport truthfulness_gap_sweep(const MechanismConfig& mechanism,
                                             const SweepConfig& config) {
  if (config.max_forecasters < 2) throw std::invalid_argument("sweep needs max_forecasters >= 2");
  if (config.max_events < 1) throw std::invalid_argument("sweep needs max_events >= 1");

  TruthfulnessGapReport report;
  report.mechanism = mechanism_name(mechanism);
  report.contexts = config.contexts;
  std::visit(Overloaded{
                 [&](const SimpleMax&) {},
                 [&](const Elf&) { report.gamma_theoretical = 0.0; },
                 [&](const PointPerRound&) { report.gamma_theoretical = 0.0; },
                 [&](const Ftrl& f) {
                   if (const auto c = make_regularizer(f.regularizer)->declared_constants()) {
                     report.gamma_theoretical = ftrl_truthfulness_gamma(f.eta, *c);
                   }
                 },
                 [&](const MultWeights& w) {
                   report.gamma_theoretical =
                       ftrl_truthfulness_gamma(w.eta, *NegativeEntropy().declared_constants());
                 },
                 [&](const ReportNoisyMax& r) {
                   report.gamma_theoretical = noisy_max_truthfulness_gamma(r.b);
                 },
             },
             mechanism);

  struct Outcome {
    StrategicContext context;
    BestResponseResult response;
    double gap = 0.0;
    std::size_t coordinate = 0;
  };
  std::vector<Outcome> outcomes(config.contexts);
  parallel_for(config.contexts, config.threads, [&](std::size_t k) {
    Rng rng(derive_seed(config.seed, k));
    const std::size_t n = 2 + rng.below(config.max_forecasters - 1);
    const std::size_t m = 1 + rng.below(config.max_events);
    StrategicContext context{Matrix(n - 1, m), Vector(m), mechanism};
    for (double& p : context.own_beliefs) p = rng.uniform();
    for (std::size_t j = 0; j + 1 < n; ++j) {
      for (double& r : context.opponent_reports.row(j)) r = rng.uniform();
    }
    BestResponseSolver solver = config.solver;
    solver.seed = derive_seed(config.seed ^ 0xb5ad4eceda1ce2a9ULL, k);
    Outcome out{context, best_response_full(context, solver), 0.0, 0};
    for (std::size_t t = 0; t < m; ++t) {
      const double d = std::abs(out.response.report[t] - context.own_beliefs[t]);
      if (d > out.gap) {
        out.gap = d;
        out.coordinate = t;
      }
    }
    outcomes[k] = std::move(out);
  });

  for (const auto& out : outcomes) {
    report.gaps.push_back(out.gap);
    report.all_certified = report.all_certified && out.response.certified;
    if (report.witness.own_beliefs.empty() || out.gap > report.gamma_empirical) {
      report.gamma_empirical = out.gap;
      report.witness = GapWitness{out.context.opponent_reports, out.context.own_beliefs,
                                  out.response.report, out.coordinate};
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

Vector leave_one_out_response(const StrategicContext& context) {
  validate_context(context);
  const auto params = ftrl_params(context.mechanism);
  if (!params) throw std::invalid_argument("leave-one-out response applies to FTRL and MW only");
  require_truthful_eta(params->eta, *params->reg);

  const auto& p = context.own_beliefs;
  const std::size_t m = p.size();
  const std::size_t n = context.opponent_reports.rows() + 1;
  auto expected_score = [](double r, double belief) {
    return belief * quadratic_score_unchecked(r, 1) +
           (1.0 - belief) * quadratic_score_unchecked(r, 0);
  };

  Vector expected(n, 0.0);
  for (std::size_t t = 0; t < m; ++t) expected[0] += expected_score(p[t], p[t]);
  for (std::size_t j = 1; j < n; ++j) {
    const auto row = context.opponent_reports.row(j - 1);
    for (std::size_t t = 0; t < m; ++t) expected[j] += expected_score(row[t], p[t]);
  }

  Vector report(m);
  Vector base0(n);
  Vector base1(n);
  const LeaveOneOutSolver solver(base0, base1, params->eta, 0, *params->reg);
  for (std::size_t t = 0; t < m; ++t) {
    base0[0] = base1[0] = expected[0] - expected_score(p[t], p[t]);
    for (std::size_t j = 1; j < n; ++j) {
      const double r = context.opponent_reports(j - 1, t);
      const double rest = expected[j] - expected_score(r, p[t]);
      base0[j] = rest + quadratic_score_unchecked(r, 0);
      base1[j] = rest + quadratic_score_unchecked(r, 1);
    }
    report[t] = solve_leave_one_out(p[t], solver).report;
  }
  return report;
}

ReportMatrix build_reports(const BeliefMatrix& beliefs, const std::vector<AgentStrategy>& strategies,
                           const MechanismConfig& mechanism) {
  const std::size_t n = beliefs.rows();
  const std::size_t m = beliefs.cols();
  if (strategies.size() != n) {
    throw std::invalid_argument("expected one strategy per forecaster");
  }
  std::vector<Vector> plans(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = beliefs.row(i);
    plans[i] = std::holds_alternative<BestResponse>(strategies[i])
                   ? Vector(row.begin(), row.end())
                   : apply_strategy(strategies[i], row);
  }

  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    Vector r = plans[i];
    if (const auto* br = std::get_if<BestResponse>(&strategies[i])) {
      const auto row = beliefs.row(i);
      StrategicContext context{Matrix(n - 1, m), Vector(row.begin(), row.end()), mechanism};
      for (std::size_t j = 0, k = 0; j < n; ++j) {
        if (j == i) continue;
        std::copy(plans[j].begin(), plans[j].end(), context.opponent_reports.row(k++).begin());
      }
      r = br->solver.mode == BestResponseMode::kLeaveOneOut
              ? leave_one_out_response(context)
              : best_response_full(context, br->solver).report;
    }
    std::copy(r.begin(), r.end(), out.row(i).begin());
  }
  return ReportMatrix(std::move(out));
}

}  // namespace forecomp
