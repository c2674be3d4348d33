#include "forecomp/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "forecomp/scoring.hpp"

namespace forecomp {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<std::size_t> argmax_set(std::span<const double> values) {
  const double best = *std::max_element(values.begin(), values.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == best) out.push_back(i);
  }
  return out;
}

void require_outcome_shape(const ReportMatrix& reports, const OutcomeVector& outcomes) {
  if (reports.rows() == 0) throw std::invalid_argument("no forecasters");
  if (reports.cols() != outcomes.size()) {
    throw std::invalid_argument("report matrix has " + std::to_string(reports.cols()) +
                                " events but outcome vector has " +
                                std::to_string(outcomes.size()));
  }
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::domain_error(std::string(what) + " must be positive and finite");
  }
}

// Tally one point per event from the given per-event lotteries, then pick the
// point leader uniformly among ties.
template <class PerEvent>
WinnerDraw run_point_lotteries(std::size_t n, std::size_t m, PerEvent&& per_event, Rng& rng) {
  const std::uint64_t first = rng.draws();
  std::vector<double> points(n, 0.0);
  for (std::size_t t = 0; t < m; ++t) {
    const Vector f = per_event(t);
    points[sample_index(f, rng)] += 1.0;
  }
  const auto leaders = argmax_set(points);
  WinnerDraw draw;
  draw.winner = leaders.size() == 1 ? leaders.front() : leaders[rng.below(leaders.size())];
  draw.distribution = SelectionDistribution::uniform_over(n, leaders);
  draw.exact_law = false;
  draw.rng_trace = {rng.seed(), first, rng.draws() - first};
  return draw;
}

std::string format_witness(double r, int y, double g, double lo, double hi) {
  std::ostringstream os;
  os << "g(" << r << ", " << y << ") = " << g << " outside declared range [" << lo << ", " << hi
     << "]";
  return os.str();
}

}  // namespace

std::string mechanism_name(const MechanismConfig& config) {
  return std::visit(Overloaded{
                        [](const SimpleMax&) { return std::string("simple_max"); },
                        [](const Elf&) { return std::string("elf"); },
                        [](const PointPerRound&) { return std::string("point_per_round"); },
                        [](const Ftrl&) { return std::string("ftrl"); },
                        [](const MultWeights&) { return std::string("mw"); },
                        [](const ReportNoisyMax&) { return std::string("noisy_max"); },
                    },
                    config);
}

double truthful_eta_limit(const CurvatureConstants& constants) {
  return std::min(constants.alpha / 2.0, 1.0 / constants.beta);
}

ConfigCheck validate_mechanism(const MechanismConfig& config, std::size_t n) {
  ConfigCheck check;
  auto check_eta = [&](double eta, const Regularizer* reg) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      check.errors.push_back("eta = " + std::to_string(eta) +
                             " violates eta > 0 (FTRL learning rate)");
      return;
    }
    if (reg == nullptr) return;
    if (auto constants = reg->declared_constants()) {
      const double limit = truthful_eta_limit(*constants);
      if (!(eta < limit)) {
        check.warnings.push_back("eta = " + std::to_string(eta) +
                                 " is outside the approximate-truthfulness range eta < " +
                                 std::to_string(limit));
      }
    } else {
      check.warnings.push_back("regularizer " + reg->name() +
                               " declares no curvature constants; no truthfulness guarantee");
    }
  };
  std::visit(Overloaded{
                 [&](const SimpleMax&) {},
                 [&](const Elf&) {
                   if (n < 2) check.errors.push_back("ELF needs n >= 2 forecasters");
                 },
                 [&](const PointPerRound& p) {
                   if (n < 2) check.errors.push_back("point-per-round needs n >= 2 forecasters");
                   if (!(p.scale >= 0.0)) check.errors.push_back("point rule scale must be >= 0");
                   if (n >= 2 && p.scale > 1.0 / static_cast<double>(n) + 1e-15) {
                     check.errors.push_back("point rule range length " + std::to_string(p.scale) +
                                            " exceeds 1/n = " +
                                            std::to_string(1.0 / static_cast<double>(n)));
                   }
                 },
                 [&](const Ftrl& f) {
                   std::shared_ptr<const Regularizer> reg;
                   try {
                     reg = make_regularizer(f.regularizer);
                   } catch (const std::exception& e) {
                     check.errors.push_back(e.what());
                   }
                   check_eta(f.eta, reg.get());
                 },
                 [&](const MultWeights& w) {
                   NegativeEntropy reg;
                   check_eta(w.eta, &reg);
                 },
                 [&](const ReportNoisyMax& r) {
                   if (!(r.b >= 4.0) || !std::isfinite(r.b)) {
                     check.errors.push_back("b = " + std::to_string(r.b) +
                                            " violates b >= 4 (Laplace scale needed for "
                                            "approximate truthfulness)");
                   }
                 },
             },
             config);
  return check;
}

std::size_t sample_index(std::span<const double> probabilities, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] > 0.0) last_positive = i;
    cumulative += probabilities[i];
    if (u < cumulative) return i;
  }
  return last_positive;  // u landed in the rounding gap above the sum
}

// ---------------------------------------------------------------------------

SelectionDistribution simple_max_law(std::span<const double> totals) {
  const auto leaders = argmax_set(totals);
  return SelectionDistribution::uniform_over(totals.size(), leaders);
}

WinnerDraw simple_max_select(const ReportMatrix& reports, const OutcomeVector& outcomes,
                             Rng& rng) {
  require_outcome_shape(reports, outcomes);
  const std::uint64_t first = rng.draws();
  const Vector q = total_scores(reports, outcomes);
  const auto leaders = argmax_set(q);
  WinnerDraw draw;
  draw.winner = leaders.size() == 1 ? leaders.front() : leaders[rng.below(leaders.size())];
  draw.distribution = SelectionDistribution::uniform_over(q.size(), leaders);
  draw.exact_law = true;
  draw.rng_trace = {rng.seed(), first, rng.draws() - first};
  return draw;
}

// ---------------------------------------------------------------------------

ScoringRule scaled_quadratic_rule(double scale, double offset) {
  ScoringRule g;
  g.name = "scaled_quadratic";
  g.fn = [scale, offset](double r, int y) {
    return offset + scale * quadratic_score_unchecked(r, y);
  };
  g.range_lo = offset;
  g.range_hi = offset + scale;
  return g;
}

void validate_point_rule(const ScoringRule& g, std::size_t n) {
  if (n < 2) throw std::invalid_argument("point-per-round needs n >= 2");
  if (!g.fn) throw std::invalid_argument("point rule has no function");
  const double length = g.range_hi - g.range_lo;
  const double limit = 1.0 / static_cast<double>(n);
  if (!(length >= 0.0) || length > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "declared range [" << g.range_lo << ", " << g.range_hi << "] has length " << length
       << " > 1/n = " << limit;
    throw PointRuleRangeError("point rule range too wide", os.str());
  }
  constexpr int kGrid = 1000;
  const double slack = 1e-12;
  for (int k = 0; k <= kGrid; ++k) {
    const double r = static_cast<double>(k) / kGrid;
    for (int y = 0; y <= 1; ++y) {
      const double v = g.fn(r, y);
      if (!(v >= g.range_lo - slack && v <= g.range_hi + slack)) {
        throw PointRuleRangeError("point rule leaves its declared range",
                                  format_witness(r, y, v, g.range_lo, g.range_hi));
      }
    }
  }
}

Vector elf_point_prob(const ReportMatrix& reports, int outcome, std::size_t t) {
  const std::size_t n = reports.rows();
  if (n < 2) throw std::invalid_argument("ELF needs n >= 2 forecasters");
  if (t >= reports.cols()) throw std::out_of_range("event index");
  if (outcome != 0 && outcome != 1) throw std::domain_error("outcome must be 0 or 1");
  Vector s(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = quadratic_score_unchecked(reports(i, t), outcome);
    total += s[i];
  }
  // f_i = ((n-1)(1 + S_i) - (total - S_i)) / (n(n-1)): one rounding at the end.
  const double nd = static_cast<double>(n);
  const double denom = nd * (nd - 1.0);
  Vector f(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = ((nd - 1.0) * (1.0 + s[i]) - (total - s[i])) / denom;
  }
  return f;
}

Vector point_per_round_prob(const ReportMatrix& reports, int outcome, std::size_t t,
                            const ScoringRule& g) {
  const std::size_t n = reports.rows();
  if (n < 2) throw std::invalid_argument("point-per-round needs n >= 2 forecasters");
  if (t >= reports.cols()) throw std::out_of_range("event index");
  Vector s(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = g.fn(reports(i, t), outcome);
    total += s[i];
  }
  const double nd = static_cast<double>(n);
  Vector f(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = 1.0 / nd + s[i] - (total - s[i]) / (nd - 1.0);
    if (!(f[i] >= -1e-12 && f[i] <= 1.0 + 1e-12)) {
      std::ostringstream os;
      os << "forecaster " << i << ", event " << t << ", y = " << outcome << ": f = " << f[i];
      throw PointRuleRangeError("point rule produced a probability outside [0,1]", os.str());
    }
    f[i] = std::clamp(f[i], 0.0, 1.0);
  }
  return f;
}

WinnerDraw elf_select(const ReportMatrix& reports, const OutcomeVector& outcomes, Rng& rng) {
  require_outcome_shape(reports, outcomes);
  if (reports.rows() < 2) throw std::invalid_argument("ELF needs n >= 2 forecasters");
  return run_point_lotteries(
      reports.rows(), reports.cols(),
      [&](std::size_t t) { return elf_point_prob(reports, outcomes[t], t); }, rng);
}

WinnerDraw point_per_round_select(const ReportMatrix& reports, const OutcomeVector& outcomes,
                                  const ScoringRule& g, Rng& rng) {
  require_outcome_shape(reports, outcomes);
  validate_point_rule(g, reports.rows());
  return run_point_lotteries(
      reports.rows(), reports.cols(),
      [&](std::size_t t) { return point_per_round_prob(reports, outcomes[t], t, g); }, rng);
}

SelectionDistribution point_lottery_winner_law(const Matrix& per_event_probs,
                                               std::uint64_t budget) {
  const std::size_t n = per_event_probs.rows();
  const std::size_t m = per_event_probs.cols();
  if (n == 0) throw std::invalid_argument("no forecasters");
  std::uint64_t size = 1;
  for (std::size_t t = 0; t < m; ++t) {
    if (size > budget / n) {
      throw std::length_error("point lottery enumeration n^m exceeds budget " +
                              std::to_string(budget));
    }
    size *= n;
  }
  Vector law(n, 0.0);
  std::vector<int> points(n, 0);
  std::vector<std::size_t> leaders;
  leaders.reserve(n);
  auto recurse = [&](auto&& self, std::size_t t, double prob) -> void {
    if (prob == 0.0) return;
    if (t == m) {
      const int best = *std::max_element(points.begin(), points.end());
      leaders.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (points[i] == best) leaders.push_back(i);
      }
      const double share = prob / static_cast<double>(leaders.size());
      for (std::size_t i : leaders) law[i] += share;
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      ++points[i];
      self(self, t + 1, prob * per_event_probs(i, t));
      --points[i];
    }
  };
  recurse(recurse, 0, 1.0);
  return SelectionDistribution(std::move(law));
}

// ---------------------------------------------------------------------------

SelectionDistribution mw_from_scores(std::span<const double> totals, double eta) {
  require_positive(eta, "eta");
  Vector x(totals.size());
  for (std::size_t i = 0; i < totals.size(); ++i) x[i] = eta * totals[i];
  return SelectionDistribution(entropy_conjugate_grad(x));
}

SelectionDistribution ftrl_select(const ReportMatrix& reports, const OutcomeVector& outcomes,
                                  const Regularizer& reg, double eta) {
  require_outcome_shape(reports, outcomes);
  require_positive(eta, "eta");
  Vector x = total_scores(reports, outcomes);
  for (double& v : x) v *= eta;
  return SelectionDistribution(reg.conjugate_grad(x));
}

SelectionDistribution mw_select(const ReportMatrix& reports, const OutcomeVector& outcomes,
                                double eta) {
  require_outcome_shape(reports, outcomes);
  const Vector q = total_scores(reports, outcomes);
  return mw_from_scores(q, eta);
}

// ---------------------------------------------------------------------------

double laplace_from_uniform(double u, double b) {
  require_positive(b, "Laplace scale b");
  if (!(u > -0.5 && u < 0.5)) throw std::domain_error("Laplace uniform must lie in (-1/2, 1/2)");
  if (u == 0.0) return 0.0;
  const double sign = u > 0.0 ? 1.0 : -1.0;
  return -b * sign * std::log1p(-2.0 * std::abs(u));
}

double sample_laplace(Rng& rng, double b) {
  require_positive(b, "Laplace scale b");
  return laplace_from_uniform(rng.uniform_open() - 0.5, b);
}

WinnerDraw report_noisy_max_select(const ReportMatrix& reports, const OutcomeVector& outcomes,
                                   double b, Rng& rng) {
  require_outcome_shape(reports, outcomes);
  require_positive(b, "Laplace scale b");
  const std::uint64_t first = rng.draws();
  const Vector q = total_scores(reports, outcomes);
  std::size_t winner = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double z = q[i] + sample_laplace(rng, b);
    if (z > best) {  // strict: ties go to the lowest index
      best = z;
      winner = i;
    }
  }
  WinnerDraw draw;
  draw.winner = winner;
  draw.distribution = SelectionDistribution::point_mass(q.size(), winner);
  draw.exact_law = false;
  draw.rng_trace = {rng.seed(), first, rng.draws() - first};
  return draw;
}

// Integrates density_i(x) * prod_{j != i} F_j(x) piece by piece between the
// sorted centers. On a piece [x0, x1] with v = (x - x0)/b every factor is
// either kappa * exp(v - L) (x left of its center) or 1 - kappa * exp(-v)
// (x right of its center) with kappa <= 1/2, so the product expands into
// terms exp(a (v - L) - k v) whose integrals are bounded and overflow-free.
double noisy_max_win_probability(std::span<const double> totals, double b, std::size_t i) {
  require_positive(b, "Laplace scale b");
  const std::size_t n = totals.size();
  if (i >= n) throw std::out_of_range("forecaster index");
  if (n == 1) return 1.0;

  Vector breaks(totals.begin(), totals.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  // J(a, k, L) = integral_0^L exp(a (v - L) - k v) dv.
  auto segment_integral = [](int a, int k, double length) {
    if (a == k) return length * std::exp(-a * length);
    if (a > k) return -std::exp(-k * length) * std::expm1(-(a - k) * length) / (a - k);
    return -std::exp(-a * length) * std::expm1(-(k - a) * length) / (k - a);
  };

  double prob = 0.0;

  // Left tail: the density and every CDF rise as exp((x - x1)/b) toward
  // x1 = breaks.front(), so the integrand is K exp(n (x - x1)/b).
  {
    const double x1 = breaks.front();
    double k_coef = std::exp((x1 - totals[i]) / b);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) k_coef *= 0.5 * std::exp((x1 - totals[j]) / b);
    }
    prob += 0.5 * k_coef / static_cast<double>(n);
  }

  Vector sym(n + 1);
  auto piece = [&](double x0, double x1, bool infinite) {
    const double length = infinite ? 0.0 : (x1 - x0) / b;
    int a = 0;
    int c0 = 0;
    double k_coef = 0.5;  // density 1/(2b) times dx = b dv
    std::fill(sym.begin(), sym.end(), 0.0);
    sym[0] = 1.0;
    std::size_t m_count = 0;
    if (!infinite && totals[i] >= x1) {
      ++a;
      k_coef *= std::exp((x1 - totals[i]) / b);
    } else {
      ++c0;
      k_coef *= std::exp(-(x0 - totals[i]) / b);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (!infinite && totals[j] >= x1) {
        ++a;
        k_coef *= 0.5 * std::exp((x1 - totals[j]) / b);
      } else {
        // 1 - kappa exp(-v): update the signed elementary symmetric sums.
        const double kappa = 0.5 * std::exp(-(x0 - totals[j]) / b);
        ++m_count;
        for (std::size_t c = m_count; c >= 1; --c) sym[c] -= kappa * sym[c - 1];
      }
    }
    double sum = 0.0;
    for (std::size_t c = 0; c <= m_count; ++c) {
      const int k = c0 + static_cast<int>(c);
      const double integral =
          infinite ? 1.0 / static_cast<double>(k) : segment_integral(a, k, length);
      sum += sym[c] * integral;
    }
    return k_coef * sum;
  };

  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) prob += piece(breaks[s], breaks[s + 1], false);
  prob += piece(breaks.back(), 0.0, true);
  return std::clamp(prob, 0.0, 1.0);
}

Vector noisy_max_win_probabilities(std::span<const double> totals, double b) {
  if (totals.empty()) throw std::invalid_argument("no forecasters");
  Vector win(totals.size());
  for (std::size_t i = 0; i < totals.size(); ++i) win[i] = noisy_max_win_probability(totals, b, i);
  return win;
}

// ---------------------------------------------------------------------------

WinnerDraw select_winner(const MechanismConfig& config, const ReportMatrix& reports,
                         const OutcomeVector& outcomes, Rng& rng) {
  auto from_distribution = [&](SelectionDistribution pi) {
    const std::uint64_t first = rng.draws();
    WinnerDraw draw;
    draw.winner = sample_index(pi.values(), rng);
    draw.distribution = std::move(pi);
    draw.exact_law = true;
    draw.rng_trace = {rng.seed(), first, rng.draws() - first};
    return draw;
  };
  return std::visit(
      Overloaded{
          [&](const SimpleMax&) { return simple_max_select(reports, outcomes, rng); },
          [&](const Elf&) { return elf_select(reports, outcomes, rng); },
          [&](const PointPerRound& p) {
            return point_per_round_select(reports, outcomes,
                                          scaled_quadratic_rule(p.scale, p.offset), rng);
          },
          [&](const Ftrl& f) {
            const auto reg = make_regularizer(f.regularizer);
            return from_distribution(ftrl_select(reports, outcomes, *reg, f.eta));
          },
          [&](const MultWeights& w) {
            return from_distribution(mw_select(reports, outcomes, w.eta));
          },
          [&](const ReportNoisyMax& r) {
            return report_noisy_max_select(reports, outcomes, r.b, rng);
          },
      },
      config);
}

WinnerLaw winner_law(const MechanismConfig& config, const ReportMatrix& reports,
                     const OutcomeVector& outcomes, const WinnerLawOptions& options) {
  require_outcome_shape(reports, outcomes);
  const std::size_t n = reports.rows();
  const std::size_t m = reports.cols();

  auto lottery_law = [&](auto&& per_event) {
    Matrix probs(n, m);
    for (std::size_t t = 0; t < m; ++t) {
      const Vector f = per_event(t);
      for (std::size_t i = 0; i < n; ++i) probs(i, t) = f[i];
    }
    try {
      const SelectionDistribution law = point_lottery_winner_law(probs, options.enumeration_budget);
      return WinnerLaw{Vector(law.values().begin(), law.values().end()), true, {}};
    } catch (const std::length_error&) {
      if (options.monte_carlo_samples == 0) throw;
    }
    Rng rng(options.seed);
    Vector counts(n, 0.0);
    std::vector<double> points(n);
    Vector f(n);
    for (std::size_t s = 0; s < options.monte_carlo_samples; ++s) {
      std::fill(points.begin(), points.end(), 0.0);
      for (std::size_t t = 0; t < m; ++t) {
        for (std::size_t i = 0; i < n; ++i) f[i] = probs(i, t);
        points[sample_index(f, rng)] += 1.0;
      }
      const auto leaders = argmax_set(points);
      for (std::size_t i : leaders) counts[i] += 1.0 / static_cast<double>(leaders.size());
    }
    WinnerLaw law;
    law.exact = false;
    const double samples = static_cast<double>(options.monte_carlo_samples);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = counts[i] / samples;
      law.probabilities.push_back(p);
      law.standard_error.push_back(std::sqrt(p * (1.0 - p) / samples));
    }
    return law;
  };

  auto exact = [](const SelectionDistribution& pi) {
    return WinnerLaw{Vector(pi.values().begin(), pi.values().end()), true, {}};
  };

  return std::visit(
      Overloaded{
          [&](const SimpleMax&) { return exact(simple_max_law(total_scores(reports, outcomes))); },
          [&](const Elf&) {
            if (n < 2) throw std::invalid_argument("ELF needs n >= 2 forecasters");
            return lottery_law([&](std::size_t t) { return elf_point_prob(reports, outcomes[t], t); });
          },
          [&](const PointPerRound& p) {
            const ScoringRule g = scaled_quadratic_rule(p.scale, p.offset);
            validate_point_rule(g, n);
            return lottery_law(
                [&](std::size_t t) { return point_per_round_prob(reports, outcomes[t], t, g); });
          },
          [&](const Ftrl& f) {
            const auto reg = make_regularizer(f.regularizer);
            return exact(ftrl_select(reports, outcomes, *reg, f.eta));
          },
          [&](const MultWeights& w) { return exact(mw_select(reports, outcomes, w.eta)); },
          [&](const ReportNoisyMax& r) {
            return WinnerLaw{noisy_max_win_probabilities(total_scores(reports, outcomes), r.b),
                             true,
                             {}};
          },
      },
      config);
}

}  // namespace forecomp
