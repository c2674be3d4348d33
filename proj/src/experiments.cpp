#include "forecomp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "forecomp/parallel.hpp"

namespace forecomp {
namespace {

void require_open_unit(double v, const char* what) {
  if (!(v > 0.0 && v < 1.0)) throw std::domain_error(std::string(what) + " must lie in (0,1)");
}

std::vector<AgentStrategy> population(std::size_t n, const AgentStrategy& strategy) {
  return std::vector<AgentStrategy>(n, strategy);
}

OutcomeVector draw_outcomes(const GroundTruth& theta, Rng& rng) {
  std::vector<int> y(theta.size());
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = rng.bernoulli(theta[t]) ? 1 : 0;
  return OutcomeVector(std::move(y));
}

SuccessEstimate count_successes(const std::vector<char>& success) {
  std::size_t hits = 0;
  for (char s : success) hits += s ? 1 : 0;
  return make_success_estimate(hits, success.size());
}

SelectionDistribution select_from_totals(const Vector& totals, const Regularizer& reg, double eta) {
  Vector x(totals.size());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = eta * totals[j];
  return SelectionDistribution(reg.conjugate_grad(x));
}

}  // namespace

// ---------------------------------------------------------------------------

CompetitionSetting::CompetitionSetting(BeliefMatrix beliefs, GroundTruth theta)
    : beliefs_(std::move(beliefs)), theta_(std::move(theta)) {
  if (beliefs_.rows() < 2) throw std::invalid_argument("a competition needs n >= 2 forecasters");
  if (beliefs_.cols() < 1) throw std::invalid_argument("a competition needs m >= 1 events");
  if (beliefs_.cols() != theta_.size()) {
    throw std::invalid_argument("beliefs and ground truth cover different event counts");
  }
  accuracies_ = forecomp::accuracies(beliefs_, theta_);
  best_ = *std::max_element(accuracies_.begin(), accuracies_.end());
}

CompetitionSetting perfect_vs_terrible_setting(std::size_t n, std::size_t m) {
  if (n < 2) throw std::invalid_argument("perfect-vs-terrible needs n >= 2");
  Matrix p(n, m, 0.0);
  for (double& v : p.row(0)) v = 1.0;
  return CompetitionSetting(BeliefMatrix(std::move(p)), GroundTruth(Vector(m, 1.0)));
}

const char* to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kRandom:
      return "random";
    case FamilyKind::kPerfectVsTerrible:
      return "perfect_vs_terrible";
    case FamilyKind::kNearTie:
      return "near_tie";
    case FamilyKind::kAllTie:
      return "all_tie";
  }
  return "unknown";
}

FamilyKind family_from_string(const std::string& name) {
  for (FamilyKind k : {FamilyKind::kRandom, FamilyKind::kPerfectVsTerrible, FamilyKind::kNearTie,
                       FamilyKind::kAllTie}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown setting family '" + name +
                              "' (expected random, perfect_vs_terrible, near_tie or all_tie)");
}

CompetitionSetting generate_setting(const SettingFamily& family, std::size_t m, Rng& rng) {
  const std::size_t n = family.n;
  if (n < 2) throw std::invalid_argument("setting family needs n >= 2");
  if (m < 1) throw std::invalid_argument("setting family needs m >= 1");
  Matrix p(n, m);
  Vector theta(m);
  switch (family.kind) {
    case FamilyKind::kRandom: {
      for (double& v : theta) v = rng.uniform();
      for (std::size_t i = 0; i < n; ++i) {
        const double skill = rng.uniform();
        for (std::size_t t = 0; t < m; ++t) {
          const double far = theta[t] < 0.5 ? 1.0 : 0.0;
          p(i, t) = std::clamp(theta[t] + skill * (far - theta[t]), 0.0, 1.0);
        }
      }
      break;
    }
    case FamilyKind::kPerfectVsTerrible:
      return perfect_vs_terrible_setting(n, m);
    case FamilyKind::kNearTie: {
      const double wide = 1.1 * family.epsilon;
      if (!(family.epsilon > 0.0) || wide > 0.64) {
        throw std::domain_error("near_tie family needs 0 < 1.1 epsilon <= 0.64");
      }
      for (double& v : theta) {
        const double u = rng.uniform(0.0, 0.2);
        v = rng.bernoulli(0.5) ? u : 1.0 - u;
      }
      for (std::size_t t = 0; t < m; ++t) p(0, t) = theta[t];
      for (std::size_t i = 1; i < n; ++i) {
        const double d = std::sqrt(i % 2 == 1 ? 0.9 * family.epsilon : wide);
        for (std::size_t t = 0; t < m; ++t) {
          p(i, t) = theta[t] <= 0.5 ? theta[t] + d : theta[t] - d;
        }
      }
      break;
    }
    case FamilyKind::kAllTie: {
      for (double& v : theta) v = rng.uniform();
      Vector shared(m);
      for (double& v : shared) v = rng.uniform();
      for (std::size_t i = 0; i < n; ++i) std::copy(shared.begin(), shared.end(), p.row(i).begin());
      break;
    }
  }
  return CompetitionSetting(BeliefMatrix(std::move(p)), GroundTruth(std::move(theta)));
}

// ---------------------------------------------------------------------------

TrialResult run_competition_trial(const CompetitionSetting& setting, const ReportMatrix& reports,
                                  const MechanismConfig& mechanism, Rng& rng) {
  require_same_shape(reports, setting.n(), setting.m());
  const OutcomeVector y = draw_outcomes(setting.theta(), rng);
  const WinnerDraw draw = select_winner(mechanism, reports, y, rng);
  return TrialResult{draw.winner, setting.accuracies()[draw.winner], setting.best_accuracy()};
}

TrialResult run_competition_trial(const CompetitionSetting& setting,
                                  const std::vector<AgentStrategy>& strategies,
                                  const MechanismConfig& mechanism, Rng& rng) {
  const ReportMatrix reports = build_reports(setting.beliefs(), strategies, mechanism);
  return run_competition_trial(setting, reports, mechanism, rng);
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double k = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / k;
  const double z2 = z * z;
  const double center = (phat + z2 / (2.0 * k)) / (1.0 + z2 / k);
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / k + z2 / (4.0 * k * k)) / (1.0 + z2 / k);
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

SuccessEstimate make_success_estimate(std::size_t successes, std::size_t trials) {
  SuccessEstimate e;
  e.trials = trials;
  e.successes = successes;
  e.rate = trials == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(trials);
  const WilsonInterval w = wilson_interval(successes, trials, 1.959963984540054);
  e.wilson_low = w.low;
  e.wilson_high = w.high;
  e.halfwidth = 0.5 * (w.high - w.low);
  return e;
}

std::vector<TrialResult> run_trials(const CompetitionSetting& setting, const ReportMatrix& reports,
                                    const MechanismConfig& mechanism, const TrialOptions& options) {
  if (options.trials == 0) throw std::invalid_argument("trials must be at least 1");
  std::vector<TrialResult> results(options.trials);
  parallel_for(options.trials, options.threads, [&](std::size_t k) {
    Rng rng(derive_seed(options.seed, k));
    results[k] = run_competition_trial(setting, reports, mechanism, rng);
  });
  return results;
}

SuccessEstimate estimate_success_prob(const CompetitionSetting& setting,
                                      const std::vector<AgentStrategy>& strategies,
                                      const MechanismConfig& mechanism, double epsilon,
                                      const TrialOptions& options) {
  const ReportMatrix reports = build_reports(setting.beliefs(), strategies, mechanism);
  std::size_t hits = 0;
  for (const TrialResult& r : run_trials(setting, reports, mechanism, options)) {
    hits += r.eps_optimal(epsilon) ? 1 : 0;
  }
  return make_success_estimate(hits, options.trials);
}

SuccessEstimate estimate_success_prob(const SettingFamily& family, std::size_t m,
                                      const AgentStrategy& strategy,
                                      const MechanismConfig& mechanism, double epsilon,
                                      const TrialOptions& options) {
  if (options.trials == 0) throw std::invalid_argument("trials must be at least 1");
  const auto strategies = population(family.n, strategy);
  std::vector<char> success(options.trials, 0);
  parallel_for(options.trials, options.threads, [&](std::size_t k) {
    Rng rng(derive_seed(options.seed, k));
    const CompetitionSetting setting = generate_setting(family, m, rng);
    success[k] = run_competition_trial(setting, strategies, mechanism, rng).eps_optimal(epsilon);
  });
  return count_successes(success);
}

// ---------------------------------------------------------------------------

ComplexityEstimate estimate_event_complexity(const MechanismConfig& mechanism,
                                             const SettingFamily& family,
                                             const AgentStrategy& strategy, double epsilon,
                                             double delta, const TrialOptions& options,
                                             const ComplexitySearch& search) {
  require_open_unit(delta, "delta");
  if (!(epsilon > 0.0)) throw std::domain_error("epsilon must be positive");
  if (search.m_max < 1) throw std::invalid_argument("m_max must be at least 1");

  ComplexityEstimate out;
  out.mechanism = mechanism;
  out.epsilon = epsilon;
  out.delta = delta;
  out.trials = options.trials;

  std::map<std::size_t, ProbeRecord> seen;
  auto probe = [&](std::size_t m) -> const ProbeRecord& {
    if (auto it = seen.find(m); it != seen.end()) return it->second;
    TrialOptions o = options;
    o.seed = derive_seed(options.seed, m);
    ProbeRecord rec;
    rec.m = m;
    rec.estimate = estimate_success_prob(family, m, strategy, mechanism, epsilon, o);
    rec.passed = wilson_interval(rec.estimate.successes, rec.estimate.trials, search.z).low >=
                 1.0 - delta;
    out.probes.push_back(rec);
    return seen.emplace(m, rec).first->second;
  };

  std::size_t lo = 0;  // largest failing m seen
  std::size_t hi = 0;  // smallest passing m seen
  for (std::size_t m = 1;; m = std::min(2 * m, search.m_max)) {
    if (probe(m).passed) {
      hi = m;
      break;
    }
    lo = m;
    if (m == search.m_max) {
      throw std::runtime_error("event complexity search cap exceeded: no m <= " +
                               std::to_string(search.m_max) + " reached success 1 - delta");
    }
  }
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (probe(mid).passed) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const ProbeRecord& best = seen.at(hi);
  out.m_estimate = hi;
  out.empirical_success = best.estimate.rate;
  out.confidence_halfwidth = best.estimate.halfwidth;
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(BoundVariant variant) {
  switch (variant) {
    case BoundVariant::kSimpleMax:
      return "simple_max";
    case BoundVariant::kElf:
      return "elf";
    case BoundVariant::kElfProof:
      return "elf_proof";
    case BoundVariant::kElfPrevious:
      return "elf_previous";
    case BoundVariant::kMw:
      return "mw";
    case BoundVariant::kNoisyMax:
      return "noisy_max";
  }
  return "unknown";
}

std::vector<BoundVariant> all_bound_variants() {
  return {BoundVariant::kSimpleMax, BoundVariant::kElf, BoundVariant::kElfProof,
          BoundVariant::kElfPrevious, BoundVariant::kMw, BoundVariant::kNoisyMax};
}

BoundVariant bound_from_string(const std::string& name) {
  for (BoundVariant v : all_bound_variants()) {
    if (name == to_string(v)) return v;
  }
  throw std::invalid_argument("unknown bound variant '" + name + "'");
}

std::uint64_t theoretical_bounds(std::size_t n, double epsilon, double delta,
                                 BoundVariant variant, std::optional<double> gamma) {
  require_open_unit(epsilon, "epsilon");
  require_open_unit(delta, "delta");
  if (n < 2) throw std::domain_error("bounds need n >= 2");
  const bool elf = variant == BoundVariant::kElf || variant == BoundVariant::kElfProof ||
                   variant == BoundVariant::kElfPrevious;
  if (elf && n < 3) throw std::domain_error("ELF bounds need n >= 3");
  const double nd = static_cast<double>(n);
  const double e2 = epsilon * epsilon;
  double value = 0.0;
  switch (variant) {
    case BoundVariant::kSimpleMax:
      value = 2.0 * std::log(nd / delta) / e2;
      break;
    case BoundVariant::kElf:
      value = 5.0 * (nd - 1.0) / e2 * std::log(4.0 * (nd - 1.0) / delta);
      break;
    case BoundVariant::kElfProof:
      value = 20.0 * (nd - 1.0) * std::log(nd / delta) / e2;
      break;
    case BoundVariant::kElfPrevious:
      value = nd * nd * std::log(nd) / e2;
      break;
    case BoundVariant::kMw:
      value = 200.0 * std::log(2.0 * nd / delta) / e2;
      break;
    case BoundVariant::kNoisyMax: {
      const double g = gamma.value_or(epsilon / 14.0);
      if (!(g > 0.0 && g <= epsilon / 14.0)) {
        throw std::domain_error("Noisy Max bound requires 0 < gamma <= epsilon / 14");
      }
      value = 28.0 * std::log(2.0 * nd / delta) / (epsilon * g);
      break;
    }
  }
  return static_cast<std::uint64_t>(std::ceil(value));
}

double mw_bound_eta(double epsilon) { return epsilon / 40.0; }

double noisy_max_bound_b(double gamma) {
  if (!(gamma > 0.0)) throw std::domain_error("gamma must be positive");
  return 4.0 / gamma;
}

// ---------------------------------------------------------------------------

LowerBoundDemo lower_bound_demo(std::size_t n, const TrialOptions& options) {
  if (n < 3) throw std::domain_error("lower-bound demo needs n >= 3");
  if (options.trials == 0) throw std::invalid_argument("trials must be at least 1");
  LowerBoundDemo demo;
  demo.n = n;
  demo.m = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) / 4.0 * std::log(static_cast<double>(n))));
  demo.trials = options.trials;
  const CompetitionSetting setting = perfect_vs_terrible_setting(n, demo.m);
  const ReportMatrix reports(setting.beliefs().values());

  auto rate = [&](const MechanismConfig& mechanism, std::uint64_t stream) {
    std::vector<char> success(options.trials, 0);
    const std::uint64_t seed = derive_seed(options.seed, stream);
    parallel_for(options.trials, options.threads, [&](std::size_t k) {
      Rng rng(derive_seed(seed, k));
      success[k] = run_competition_trial(setting, reports, mechanism, rng).winner == 0;
    });
    return count_successes(success);
  };
  demo.elf = rate(Elf{}, 0);
  demo.simple_max = rate(SimpleMax{}, 1);
  return demo;
}

BallsInBins balls_in_bins_max(std::size_t bins, std::size_t balls, const TrialOptions& options) {
  if (bins < 1 || balls < 1) throw std::invalid_argument("balls in bins needs n, m >= 1");
  BallsInBins out;
  out.bins = bins;
  out.balls = balls;
  out.trials = options.trials;
  const double log_n = std::log(static_cast<double>(bins));
  if (bins == 1) {
    out.c = std::numeric_limits<double>::infinity();
    out.threshold = std::numeric_limits<double>::infinity();
  } else {
    out.c = static_cast<double>(balls) / (static_cast<double>(bins) * log_n);
    out.threshold = 4.0 * out.c * log_n + 1.0;
  }
  out.max_loads.assign(options.trials, 0);
  parallel_for(options.trials, options.threads, [&](std::size_t k) {
    Rng rng(derive_seed(options.seed, k));
    std::vector<std::size_t> load(bins, 0);
    std::size_t top = 0;
    for (std::size_t b = 0; b < balls; ++b) top = std::max(top, ++load[rng.below(bins)]);
    out.max_loads[k] = top;
  });
  double sum = 0.0;
  for (std::size_t top : out.max_loads) {
    sum += static_cast<double>(top);
    if (static_cast<double>(top) > out.threshold) ++out.exceed;
  }
  if (options.trials > 0) {
    out.probability = static_cast<double>(out.exceed) / static_cast<double>(options.trials);
    out.mean_max_load = sum / static_cast<double>(options.trials);
  }
  return out;
}

// ---------------------------------------------------------------------------

OnlinePreference OnlinePreference::discounted(double factor) {
  if (!(factor > 0.0 && factor <= 1.0)) {
    throw std::domain_error("discount factor must lie in (0,1]");
  }
  return OnlinePreference(Kind::kDiscounted, factor, {});
}

OnlinePreference OnlinePreference::custom(std::vector<Vector> rows) {
  return OnlinePreference(Kind::kCustom, 1.0, std::move(rows));
}

double OnlinePreference::coefficient(std::size_t t, std::size_t s) const {
  if (s <= t) return 0.0;
  switch (kind_) {
    case Kind::kMyopic:
      return s == t + 1 ? 1.0 : 0.0;
    case Kind::kConsistent:
      return 1.0;
    case Kind::kDiscounted:
      return std::pow(discount_, static_cast<double>(s - t - 1));
    case Kind::kCustom:
      return rows_.at(t).at(s);
  }
  return 0.0;
}

void OnlinePreference::validate(std::size_t rounds) const {
  if (kind_ != Kind::kCustom) return;
  if (rows_.size() != rounds) {
    throw std::invalid_argument("custom preference needs one coefficient row per round");
  }
  for (std::size_t t = 0; t < rounds; ++t) {
    if (rows_[t].size() != rounds + 1) {
      throw std::invalid_argument("custom preference rows need T + 1 entries");
    }
    bool any = false;
    for (std::size_t s = t + 1; s <= rounds; ++s) {
      if (!(rows_[t][s] >= 0.0)) throw std::domain_error("preference coefficients must be >= 0");
      any = any || rows_[t][s] > 0.0;
    }
    if (!any) {
      throw std::domain_error("preference coefficients of round " + std::to_string(t) +
                              " are all zero");
    }
  }
}

const char* to_string(OnlinePreference::Kind kind) {
  switch (kind) {
    case OnlinePreference::Kind::kMyopic:
      return "myopic";
    case OnlinePreference::Kind::kConsistent:
      return "consistent";
    case OnlinePreference::Kind::kDiscounted:
      return "discounted";
    case OnlinePreference::Kind::kCustom:
      return "custom";
  }
  return "unknown";
}

SelectionDistribution online_distribution(const Matrix& reports, const OutcomeVector& outcomes,
                                          std::size_t t, const Regularizer& reg, double eta) {
  if (t > reports.cols() || t > outcomes.size()) throw std::out_of_range("round beyond history");
  Vector totals(reports.rows(), 0.0);
  for (std::size_t u = 0; u < t; ++u) {
    for (std::size_t j = 0; j < totals.size(); ++j) {
      totals[j] += quadratic_score_unchecked(reports(j, u), outcomes[u]);
    }
  }
  return select_from_totals(totals, reg, eta);
}

namespace {

// Round-t report of expert i maximizing sum_s c[t][s] E[pi^s_i] with the
// other experts at their plans and later rounds replaced by their expected
// scores under i's beliefs.
double online_best_response(const OnlineSetup& setup, const Matrix& plans, const Vector& totals,
                            std::size_t i, std::size_t t, const Regularizer& reg) {
  const std::size_t n = plans.rows();
  const std::size_t rounds = plans.cols();
  const double p = setup.beliefs(i, t);
  Vector base0(totals);
  Vector base1(totals);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    base0[j] += quadratic_score_unchecked(plans(j, t), 0);
    base1[j] += quadratic_score_unchecked(plans(j, t), 1);
  }
  if (setup.preference.kind() == OnlinePreference::Kind::kMyopic) {
    return leave_one_out_optimum(p, base0, base1, setup.eta, i, reg).report;
  }

  const std::size_t last = std::min(rounds, t + std::max<std::size_t>(setup.lookahead, 1));
  // drift[s] is the expected score added by rounds t+1..s-1.
  std::vector<Vector> drift(last + 1, Vector(n, 0.0));
  for (std::size_t s = t + 2; s <= last; ++s) {
    const std::size_t u = s - 1;
    const double q = setup.beliefs(i, u);
    for (std::size_t j = 0; j < n; ++j) {
      const double r = j == i ? q : plans(j, u);
      drift[s][j] = drift[s - 1][j] + q * quadratic_score_unchecked(r, 1) +
                    (1.0 - q) * quadratic_score_unchecked(r, 0);
    }
  }
  Vector x(n);
  auto utility = [&](double r) {
    double total = 0.0;
    for (std::size_t s = t + 1; s <= last; ++s) {
      const double c = setup.preference.coefficient(t, s);
      if (c == 0.0) continue;
      double expected = 0.0;
      for (int y = 0; y <= 1; ++y) {
        const Vector& base = y == 0 ? base0 : base1;
        for (std::size_t j = 0; j < n; ++j) x[j] = setup.eta * (base[j] + drift[s][j]);
        x[i] = setup.eta * (base[i] + drift[s][i] + quadratic_score_unchecked(r, y));
        expected += (y == 0 ? 1.0 - p : p) * reg.conjugate_grad(x)[i];
      }
      total += c * expected;
    }
    return total;
  };
  return golden_section_max(utility, 1e-9);
}

}  // namespace

RegretTrace online_run(const OnlineSetup& setup, Rng& rng) {
  const std::size_t n = setup.beliefs.rows();
  const std::size_t rounds = setup.beliefs.cols();
  if (n < 1) throw std::invalid_argument("online run needs at least one expert");
  if (setup.theta.size() != rounds) {
    throw std::invalid_argument("ground truth and beliefs cover different round counts");
  }
  for (double v : setup.theta) require_probability(v, "ground truth");
  if (setup.strategies.size() != n) throw std::invalid_argument("expected one strategy per expert");
  if (!(setup.eta > 0.0)) throw std::domain_error("eta must be positive");
  setup.preference.validate(rounds);
  const auto reg = make_regularizer(setup.regularizer);

  // Non-optimizing strategies only look at their own beliefs, so their plans
  // can be fixed up front without seeing any outcome.
  Matrix plans(n, rounds);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = setup.beliefs.row(i);
    const Vector plan = std::holds_alternative<BestResponse>(setup.strategies[i])
                            ? Vector(row.begin(), row.end())
                            : apply_strategy(setup.strategies[i], row);
    std::copy(plan.begin(), plan.end(), plans.row(i).begin());
  }

  RegretTrace trace;
  trace.pi = Matrix(rounds, n);
  trace.reports = Matrix(n, rounds);
  trace.mechanism_scores.assign(rounds, 0.0);
  trace.expert_totals.assign(n, 0.0);
  std::vector<int> y(rounds);
  Vector totals(n, 0.0);

  for (std::size_t t = 0; t < rounds; ++t) {
    const SelectionDistribution pi = select_from_totals(totals, *reg, setup.eta);
    std::copy(pi.values().begin(), pi.values().end(), trace.pi.row(t).begin());

    for (std::size_t i = 0; i < n; ++i) {
      trace.reports(i, t) = std::holds_alternative<BestResponse>(setup.strategies[i]) && n > 1
                                ? online_best_response(setup, plans, totals, i, t, *reg)
                                : plans(i, t);
    }
    y[t] = rng.bernoulli(setup.theta[t]) ? 1 : 0;

    double expected = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = quadratic_score_unchecked(trace.reports(i, t), y[t]);
      expected += pi[i] * s;
      totals[i] += s;
      trace.expert_totals[i] += quadratic_score_unchecked(setup.beliefs(i, t), y[t]);
    }
    trace.mechanism_scores[t] = expected;
  }
  trace.outcomes = OutcomeVector(std::move(y));

  CompensatedSum earned;
  for (double s : trace.mechanism_scores) earned.add(s);
  trace.best_expert = static_cast<std::size_t>(
      std::max_element(trace.expert_totals.begin(), trace.expert_totals.end()) -
      trace.expert_totals.begin());
  trace.regret = trace.expert_totals[trace.best_expert] - earned.value();

  if (n >= 2 && rounds >= 1) {
    const double diameter = reg->diameter(n);
    const auto constants = reg->declared_constants();
    auto matches = [&](double eta) { return std::abs(setup.eta - eta) <= 1e-12 * eta; };
    try {
      if (setup.regularizer == "neg_entropy" && rounds >= 8 &&
          matches(online_eta_mw(rounds, n))) {
        trace.bound = regret_bound_mw(rounds, n);
      } else if (constants && matches(online_eta_general(rounds, diameter, *constants))) {
        trace.bound = regret_bound_general(rounds, diameter, *constants);
      }
    } catch (const std::domain_error&) {
      trace.bound.reset();
    }
  }
  return trace;
}

double recompute_regret(const RegretTrace& trace, const BeliefMatrix& beliefs) {
  const std::size_t n = beliefs.rows();
  const std::size_t rounds = beliefs.cols();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t t = 0; t < rounds; ++t) {
      s += quadratic_score(beliefs(i, t), trace.outcomes[t]);
    }
    best = std::max(best, s);
  }
  double earned = 0.0;
  for (std::size_t t = 0; t < rounds; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      earned += trace.pi(t, i) * quadratic_score(trace.reports(i, t), trace.outcomes[t]);
    }
  }
  return best - earned;
}

double regret_bound_general(std::size_t rounds, double diameter, const CurvatureConstants& c) {
  if (!(c.alpha > 0.0 && c.beta > 0.0)) throw std::domain_error("alpha and beta must be positive");
  const double need = std::max(1.0 / (c.alpha * c.alpha), c.beta / 2.0) * diameter;
  if (static_cast<double>(rounds) < need) {
    throw std::domain_error("regret bound requires T >= max(1/alpha^2, beta/2) D = " +
                            std::to_string(need));
  }
  return 2.0 * std::sqrt(2.0 * (c.beta + 2.0) * diameter * static_cast<double>(rounds));
}

double regret_bound_mw(std::size_t rounds, std::size_t n) {
  if (rounds < 8) throw std::domain_error("MW regret bound requires T >= 8");
  if (n < 1) throw std::domain_error("MW regret bound requires n >= 1");
  return 2.0 * std::sqrt(10.0 * static_cast<double>(rounds) * std::log(static_cast<double>(n)));
}

double online_eta_general(std::size_t rounds, double diameter, const CurvatureConstants& c) {
  if (rounds == 0) throw std::domain_error("T must be positive");
  return std::sqrt(diameter / (2.0 * (c.beta + 2.0) * static_cast<double>(rounds)));
}

double online_eta_mw(std::size_t rounds, std::size_t n) {
  if (rounds == 0) throw std::domain_error("T must be positive");
  return std::sqrt(std::log(static_cast<double>(n)) / (10.0 * static_cast<double>(rounds)));
}

}  // namespace forecomp
