#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "forecomp/agents.hpp"
#include "forecomp/cli.hpp"
#include "forecomp/experiments.hpp"
#include "forecomp/mechanisms.hpp"
#include "forecomp/regularizers.hpp"
#include "forecomp/scoring.hpp"

using namespace forecomp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

long double softmax_ld(const Vector& x, double scale, std::size_t i) {
  long double mx = *std::max_element(x.begin(), x.end());
  long double z = 0;
  for (double v : x) z += std::exp(scale * (v - mx));
  return std::exp(scale * (x[i] - mx)) / z;
}

Outcome properness() {
  Rng rng(101);
  double worst_identity = 0.0;
  std::size_t grid_violations = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t m = 1 + rng.below(50);
    Vector p(m), theta(m);
    for (std::size_t t = 0; t < m; ++t) {
      p[t] = rng.uniform();
      theta[t] = rng.uniform();
    }
    const GroundTruth gt(theta);
    const double lhs = expected_avg_quadratic_score(p, gt);
    const double rhs = accuracy(p, gt) - outcome_variance_constant(gt);
    worst_identity = std::max(worst_identity, std::abs(lhs - rhs));

    const std::size_t t = rng.below(m);
    Vector r = theta;
    const double truthful = expected_avg_quadratic_score(r, gt);
    for (int k = 0; k <= 1000; ++k) {
      r[t] = k / 1000.0;
      if (expected_avg_quadratic_score(r, gt) > truthful + 1e-15) ++grid_violations;
    }
  }
  return {worst_identity <= 1e-12 && grid_violations == 0,
          fmt("max identity error %.3g, grid violations %zu", worst_identity, grid_violations)};
}

Outcome elf_structure() {
  Rng rng(102);
  double worst_sum = 0.0;
  std::size_t range_violations = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const std::size_t n = 2 + rng.below(99);
    Matrix r(n, 1);
    for (std::size_t i = 0; i < n; ++i) r(i, 0) = rng.uniform();
    const Vector f = elf_point_prob(ReportMatrix(r), rng.bernoulli(0.5) ? 1 : 0, 0);
    long double s = 0;
    for (double v : f) {
      s += v;
      if (v < 0.0 || v > 2.0 / n + 1e-15) ++range_violations;
    }
    worst_sum = std::max(worst_sum, static_cast<double>(std::abs(s - 1.0L)));
  }
  double worst_pvt = 0.0;
  for (std::size_t n = 3; n <= 200; ++n) {
    Matrix r(n, 1, 0.0);
    r(0, 0) = 1.0;
    const Vector f = elf_point_prob(ReportMatrix(r), 1, 0);
    worst_pvt = std::max(worst_pvt, std::abs(f[0] - 2.0 / n));
    for (std::size_t j = 1; j < n; ++j) {
      worst_pvt = std::max(worst_pvt, std::abs(f[j] - (n - 2.0) / (n * (n - 1.0))));
    }
  }
  return {worst_sum <= 1e-14 && range_violations == 0 && worst_pvt <= 1e-15,
          fmt("max |sum - 1| %.3g, range violations %zu, perfect-vs-terrible error %.3g",
              worst_sum, range_violations, worst_pvt)};
}

Outcome ftrl_equals_mw() {
  Rng rng(103);
  NegativeEntropy reg;
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 2 + rng.below(49), m = 1 + rng.below(100);
    Matrix r(n, m);
    std::vector<int> y(m);
    for (std::size_t t = 0; t < m; ++t) {
      y[t] = rng.bernoulli(0.5) ? 1 : 0;
      for (std::size_t i = 0; i < n; ++i) r(i, t) = rng.uniform();
    }
    const double eta = rng.uniform(0.001, 1.0);
    const ReportMatrix reports(r);
    const OutcomeVector outcomes(y);
    const auto pi = ftrl_select(reports, outcomes, reg, eta);
    const Vector q = total_scores(reports, outcomes);
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(pi[i] - static_cast<double>(softmax_ld(q, eta, i))));
    }
  }
  return {worst <= 1e-12, fmt("max deviation from softmax %.3g", worst)};
}

Outcome condition_constants() {
  ConditionCheckConfig cfg;
  cfg.sample_count = 10000;
  const ConditionReport ent = condition_check(NegativeEntropy(), cfg);
  ConditionCheckConfig l2cfg = cfg;
  l2cfg.declared = CurvatureConstants{2.0, 3.0};
  const ConditionReport l2 = condition_check(SquaredL2(), l2cfg);
  const bool alpha = ent.empirical_alpha >= 2.0;
  const bool beta = ent.empirical_beta <= 3.0 + 0.01;
  const bool l2_fails = !l2.beta_ok && l2.curvature_witness.has_value();
  return {alpha && beta && l2_fails,
          fmt("negative entropy alpha %.6f (needs >= 2: %s), beta %.6f (needs <= 3.01: %s); "
              "L2 condition (ii) %s with witness %s",
              ent.empirical_alpha, alpha ? "ok" : "violated", ent.empirical_beta,
              beta ? "ok" : "violated", l2.beta_ok ? "holds" : "fails",
              l2.curvature_witness ? "recorded" : "missing")};
}

// Single-event FTRL utility with the forecaster's own score inside its total,
// maximized by golden-section search in long double.
double golden_oracle(double p, const Vector& base0, const Vector& base1, double eta) {
  auto u = [&](long double r) {
    Vector x0 = base0, x1 = base1;
    x0[0] += static_cast<double>(1 - r * r);
    x1[0] += static_cast<double>(1 - (1 - r) * (1 - r));
    return (1 - p) * softmax_ld(x0, eta, 0) + p * softmax_ld(x1, eta, 0);
  };
  const long double g = (std::sqrt(5.0L) - 1) / 2;
  long double a = 0, b = 1, c = b - g * (b - a), d = a + g * (b - a);
  long double fc = u(c), fd = u(d);
  for (int it = 0; it < 120; ++it) {
    if (fc < fd) {
      a = c, c = d, fc = fd, d = a + g * (b - a), fd = u(d);
    } else {
      b = d, d = c, fd = fc, c = b - g * (b - a), fc = u(c);
    }
  }
  long double best = (a + b) / 2;
  if (u(0) > u(best)) best = 0;
  if (u(1) > u(best)) best = 1;
  return static_cast<double>(best);
}

Outcome leave_one_out() {
  NegativeEntropy reg;
  Rng rng(105);
  double worst_match = 0.0;
  std::size_t band_violations = 0;
  for (double eta : {0.01, 0.05, 0.1}) {
    for (int rep = 0; rep < 500; ++rep) {
      const std::size_t n = 2 + rng.below(9);
      Vector base0(n), base1(n);
      for (std::size_t j = 0; j < n; ++j) {
        base0[j] = rng.uniform(0.0, 50.0);
        const double r = rng.uniform();
        base1[j] = base0[j] + (j == 0 ? 0.0 : (1 - (1 - r) * (1 - r)) - (1 - r * r));
      }
      const double p = rng.uniform();
      const double r = leave_one_out_optimum(p, base0, base1, eta, 0, reg).report;
      worst_match = std::max(worst_match, std::abs(r - golden_oracle(p, base0, base1, eta)));
      if (std::abs(r - p) > 3 * eta + 9 * eta * eta) ++band_violations;
    }
  }
  return {worst_match <= 1e-6 && band_violations == 0,
          fmt("max |closed form - golden section| %.3g, band violations %zu", worst_match,
              band_violations)};
}

Outcome full_truthfulness() {
  const double eta = 0.05, gamma = 4 * eta;
  SweepConfig cfg;
  cfg.contexts = 200;
  cfg.max_forecasters = 4;
  cfg.max_events = 5;
  cfg.seed = 106;
  const TruthfulnessGapReport sweep = truthfulness_gap_sweep(MultWeights{eta}, cfg);

  Rng rng(1060);
  std::size_t clamp_failures = 0, clamped = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.below(3), m = 1 + rng.below(5);
    StrategicContext c{Matrix(n - 1, m), Vector(m), MultWeights{eta}};
    for (std::size_t j = 0; j + 1 < n; ++j) {
      for (std::size_t t = 0; t < m; ++t) c.opponent_reports(j, t) = rng.uniform();
    }
    for (double& p : c.own_beliefs) p = rng.uniform();
    Vector report(m);
    for (std::size_t t = 0; t < m; ++t) {
      const double p = c.own_beliefs[t];
      const double room_low = p - gamma, room_high = 1 - p - gamma;
      report[t] = room_low > 0 && (room_high <= 0 || rng.bernoulli(0.5))
                      ? rng.uniform(0.0, room_low)
                      : (room_high > 0 ? rng.uniform(p + gamma, 1.0) : p);
    }
    const ClampResult res = dominance_clamp_check(c, report, gamma);
    if (!res.clamped) continue;
    ++clamped;
    if (!res.strictly_improved) ++clamp_failures;
  }
  return {sweep.gamma_empirical <= gamma && sweep.all_certified && clamp_failures == 0 && clamped > 0,
          fmt("max |r* - p| %.6f vs 4 eta = %.2f over %zu contexts; %zu of %zu clamps failed to "
              "improve",
              sweep.gamma_empirical, gamma, sweep.contexts, clamp_failures, clamped)};
}

Outcome noisy_max_band() {
  std::size_t violations = 0, slow = 0, failures = 0, suboptimal = 0, cases = 0;
  for (double b : {40.0, 80.0}) {
    for (int pk = 1; pk <= 19; ++pk) {
      const double p = pk * 0.05;
      for (int mk = 0; mk <= 10; ++mk) {
        for (int dk = -10; dk <= 10; ++dk) {
          const double mu0 = mk * 0.1, mu1 = mu0 + dk * 0.1;
          ++cases;
          try {
            const auto fp = noisy_max_fixed_point(p, mu0, mu1, b);
            if (fp.iterations > 100) ++slow;
            if (fp.report < p - 2 / b || fp.report > p + 4 / b) ++violations;
            const double best = noisy_max_round_utility(fp.report, p, mu0, mu1, b);
            for (int k = 0; k <= 2000; ++k) {
              if (noisy_max_round_utility(k / 2000.0, p, mu0, mu1, b) > best + 1e-12) {
                ++suboptimal;
                break;
              }
            }
          } catch (const std::exception&) {
            ++failures;
          }
        }
      }
    }
  }
  return {violations == 0 && slow == 0 && failures == 0 && suboptimal == 0,
          fmt("%zu cases: %zu outside [p - 2/b, p + 4/b], %zu not converged, %zu beaten on a grid",
              cases, violations, slow + failures, suboptimal)};
}

Outcome complexity_ordering() {
  const std::size_t n = 10;
  const double eps = 0.3, delta = 0.1;
  const TrialOptions opts{2000, 108, 1};
  const SettingFamily family{FamilyKind::kRandom, n, eps};

  const auto m_sm = theoretical_bounds(n, eps, delta, BoundVariant::kSimpleMax);
  const auto sm = estimate_success_prob(family, m_sm, Truthful{}, SimpleMax{}, eps, opts);

  const MultWeights mw{mw_bound_eta(eps)};
  const auto m_mw = theoretical_bounds(n, eps, delta, BoundVariant::kMw);
  const auto mw_truthful = estimate_success_prob(family, m_mw, Truthful{}, mw, eps, opts);

  const std::size_t n_desk = 4;
  const auto m_desk = theoretical_bounds(n_desk, eps, delta, BoundVariant::kMw);
  BestResponse br;
  br.solver.mode = BestResponseMode::kLeaveOneOut;
  const auto mw_br = estimate_success_prob(SettingFamily{FamilyKind::kRandom, n_desk, eps}, m_desk,
                                           br, mw, eps, opts);

  const auto elf_m = estimate_event_complexity(Elf{}, family, Truthful{}, eps, delta, opts);
  const auto mw_m = estimate_event_complexity(mw, family, Truthful{}, eps, delta, opts);

  const bool ok_sm = sm.rate >= 0.9;
  const bool ok_mw = mw_truthful.rate >= 0.9 && mw_br.rate >= 0.9;
  const bool ordering = elf_m.m_estimate > mw_m.m_estimate;
  return {ok_sm && ok_mw && ordering,
          fmt("Simple Max rate %.4f at m = %llu; MW truthful rate %.4f at m = %llu (n = 10), "
              "best-response rate %.4f at m = %llu (n = 4); events needed: ELF %zu, MW %zu "
              "(ordering ELF > MW %s)",
              sm.rate, static_cast<unsigned long long>(m_sm), mw_truthful.rate,
              static_cast<unsigned long long>(m_mw), mw_br.rate,
              static_cast<unsigned long long>(m_desk), elf_m.m_estimate, mw_m.m_estimate,
              ordering ? "holds" : "does not hold")};
}

Outcome lower_bound() {
  const LowerBoundDemo demo = lower_bound_demo(100, {2000, 109, 1});
  return {demo.elf.rate < 0.5 && demo.simple_max.rate == 1.0,
          fmt("m = %zu: ELF rate %.4f, Simple Max rate %.4f", demo.m, demo.elf.rate,
              demo.simple_max.rate)};
}

Outcome balls_in_bins() {
  const std::size_t bins = 10000;
  const auto balls = static_cast<std::size_t>(std::llround(0.1 * bins * std::log(double(bins))));
  const BallsInBins b = balls_in_bins_max(bins, balls, {200, 110, 1});
  return {b.probability >= 0.95,
          fmt("%zu balls, threshold %.4f, Pr[max load > threshold] = %.4f, mean max load %.3f",
              balls, b.threshold, b.probability, b.mean_max_load)};
}

Outcome no_regret() {
  const std::size_t n = 10, T = 10000, trials = 50;
  const double eta = online_eta_mw(T, n);
  const double bound = regret_bound_mw(T, n);
  NegativeEntropy reg;
  double worst = -1e300;
  std::size_t over = 0, replay_failures = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    Rng rng(derive_seed(111, k));
    const CompetitionSetting s =
        generate_setting(SettingFamily{FamilyKind::kRandom, n, 0.1}, T, rng);
    OnlineSetup setup;
    setup.beliefs = s.beliefs();
    setup.theta.assign(s.theta().values().begin(), s.theta().values().end());
    for (std::size_t i = 0; i < n; ++i) {
      setup.strategies.push_back(i % 2 ? AgentStrategy(Extremizer{4 * eta}) : AgentStrategy(Truthful{}));
    }
    setup.eta = eta;
    const RegretTrace trace = online_run(setup, rng);
    worst = std::max(worst, trace.regret);
    if (trace.regret > bound) ++over;
    for (std::size_t q = 0; q <= 32; ++q) {
      const std::size_t t = std::min(T - 1, q * T / 32);
      const auto pi = online_distribution(trace.reports, trace.outcomes, t, reg, eta);
      for (std::size_t i = 0; i < n; ++i) {
        if (pi[i] != trace.pi(t, i)) {
          ++replay_failures;
          break;
        }
      }
    }
  }
  return {over == 0 && replay_failures == 0,
          fmt("max regret %.3f vs bound %.3f, trials over bound %zu, replay mismatches %zu", worst,
              bound, over, replay_failures)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "forecomp_acceptance";
  std::filesystem::remove_all(root);
  std::vector<std::string> mismatched;
  for (Command command : all_commands()) {
    ExperimentConfig c;
    c.command = command;
    c.seed = 112;
    c.trials = 200;
    c.setting.n = 6;
    c.setting.m = 40;
    c.epsilon = 0.3;
    c.sweep.contexts = 40;
    c.sweep.max_events = 4;
    c.online.rounds = 500;
    c.condition.samples = 2000;
    if (command == Command::kEstimateComplexity) {
      c.mechanism = Elf{};
      c.trials = 300;
    }
    if (command == Command::kOnlineRegret) c.trials = 8;
    std::string body[2];
    for (int k = 0; k < 2; ++k) {
      c.threads = k == 0 ? 1 : 8;
      c.out = (root / (std::string(to_string(command)) + "_" + std::to_string(c.threads))).string();
      if (dispatch(c).exit_code != 0) {
        mismatched.push_back(std::string(to_string(command)) + " (failed)");
        break;
      }
      body[k] = slurp(std::filesystem::path(c.out) / "results.csv");
    }
    if (body[0].empty() || body[0] != body[1]) mismatched.push_back(to_string(command));
  }
  std::string list;
  for (const auto& m : mismatched) list += (list.empty() ? "" : ", ") + m;
  return {mismatched.empty(),
          mismatched.empty() ? "7 subcommands byte-identical at 1 and 8 threads"
                             : "differences in " + list};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "properness and score identity", 5, properness},
      {2, "ELF structure", 5, elf_structure},
      {3, "FTRL with negative entropy equals MW", 10, ftrl_equals_mw},
      {4, "curvature constants of negative entropy", 30, condition_constants},
      {5, "leave-one-out truthfulness", 60, leave_one_out},
      {6, "full approximate truthfulness of MW", 300, full_truthfulness},
      {7, "Noisy Max fixed point band", 60, noisy_max_band},
      {8, "event-complexity ordering", 900, complexity_ordering},
      {9, "ELF lower-bound scenario", 120, lower_bound},
      {10, "balls in bins maximum load", 120, balls_in_bins},
      {11, "online no-regret", 300, no_regret},
      {12, "determinism across thread counts", 600, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = out.pass && secs <= c.budget_seconds;
    if (!pass) ++failed;
    std::printf("criterion %2d %s: %s [%.1fs of %.0fs] %s\n", c.id, pass ? "PASS" : "FAIL", c.name,
                secs, c.budget_seconds, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
