#include "forecomp/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "forecomp/rng.hpp"

namespace forecomp {
namespace {

constexpr double kSimplexTolerance = 1e-9;

void require_simplex(std::span<const double> pi) {
  if (pi.empty()) throw std::invalid_argument("empty simplex point");
  double sum = 0.0;
  for (double v : pi) {
    if (!(v >= -kSimplexTolerance)) throw std::domain_error("simplex point has negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw std::domain_error("simplex point sums to " + std::to_string(sum));
  }
}

void require_finite(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("empty conjugate argument");
  for (double v : x) {
    if (!std::isfinite(v)) throw std::domain_error("non-finite conjugate argument");
  }
}

// exp(x_j - max x) for all j, the shared shift for every log-sum-exp quantity.
struct ShiftedExp {
  double shift = 0.0;
  Vector e;
  double total = 0.0;

  explicit ShiftedExp(std::span<const double> x) : e(x.size()) {
    require_finite(x);
    shift = *std::max_element(x.begin(), x.end());
    for (std::size_t j = 0; j < x.size(); ++j) {
      e[j] = std::exp(x[j] - shift);
      total += e[j];
    }
  }
  // sum_{j != i} e_j, summed directly rather than as total - e_i.
  double others(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
      if (j != i) s += e[j];
    }
    return s;
  }
};

}  // namespace

double neg_entropy(std::span<const double> pi) {
  require_simplex(pi);
  double s = 0.0;
  for (double v : pi) {
    if (v > 0.0) s += v * std::log(v);
  }
  return s;
}

double entropy_conjugate(std::span<const double> x) {
  ShiftedExp se(x);
  return se.shift + std::log(se.total);
}

Vector entropy_conjugate_grad(std::span<const double> x) {
  ShiftedExp se(x);
  Vector out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = se.e[j] / se.total;
  return out;
}

double entropy_conjugate_partial2(std::span<const double> x, std::size_t i) {
  ShiftedExp se(x);
  if (i >= x.size()) throw std::out_of_range("partial index");
  const double s = se.e[i] / se.total;
  return s * (se.others(i) / se.total);
}

double entropy_conjugate_partial3(std::span<const double> x, std::size_t i) {
  ShiftedExp se(x);
  if (i >= x.size()) throw std::out_of_range("partial index");
  const double s = se.e[i] / se.total;
  const double o = se.others(i) / se.total;
  return s * o * (o - s);
}

double NegativeEntropy::value(std::span<const double> pi) const { return neg_entropy(pi); }
double NegativeEntropy::conjugate(std::span<const double> x) const {
  return entropy_conjugate(x);
}
Vector NegativeEntropy::conjugate_grad(std::span<const double> x) const {
  return entropy_conjugate_grad(x);
}
double NegativeEntropy::conjugate_partial2(std::span<const double> x, std::size_t i) const {
  return entropy_conjugate_partial2(x, i);
}
double NegativeEntropy::conjugate_partial3(std::span<const double> x, std::size_t i) const {
  return entropy_conjugate_partial3(x, i);
}
double NegativeEntropy::diameter(std::size_t n) const { return std::log(static_cast<double>(n)); }

Vector project_to_simplex(std::span<const double> x) {
  require_finite(x);
  Vector sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) tau = candidate;
  }
  Vector out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = std::max(x[j] - tau, 0.0);
  return out;
}

double SquaredL2::value(std::span<const double> pi) const {
  require_simplex(pi);
  double s = 0.0;
  for (double v : pi) s += v * v;
  return 0.5 * s;
}

double SquaredL2::conjugate(std::span<const double> x) const {
  const Vector pi = project_to_simplex(x);
  double dot = 0.0;
  double sq = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    dot += pi[j] * x[j];
    sq += pi[j] * pi[j];
  }
  return dot - 0.5 * sq;
}

Vector SquaredL2::conjugate_grad(std::span<const double> x) const {
  return project_to_simplex(x);
}

double SquaredL2::conjugate_partial2(std::span<const double> x, std::size_t i) const {
  const Vector pi = project_to_simplex(x);
  if (i >= pi.size()) throw std::out_of_range("partial index");
  if (pi[i] <= 0.0) return 0.0;
  const auto support = std::count_if(pi.begin(), pi.end(), [](double v) { return v > 0.0; });
  return 1.0 - 1.0 / static_cast<double>(support);
}

double SquaredL2::conjugate_partial3(std::span<const double> x, std::size_t i) const {
  if (i >= x.size()) throw std::out_of_range("partial index");
  return 0.0;  // piecewise linear gradient
}

double SquaredL2::diameter(std::size_t n) const {
  return 0.5 * (1.0 - 1.0 / static_cast<double>(n));
}

double FiniteDifferencePartials::conjugate_partial2(std::span<const double> x,
                                                    std::size_t i) const {
  Vector up(x.begin(), x.end());
  Vector down(x.begin(), x.end());
  up.at(i) += step_;
  down.at(i) -= step_;
  return (base_->conjugate_grad(up)[i] - base_->conjugate_grad(down)[i]) / (2.0 * step_);
}

double FiniteDifferencePartials::conjugate_partial3(std::span<const double> x,
                                                    std::size_t i) const {
  Vector up(x.begin(), x.end());
  Vector down(x.begin(), x.end());
  up.at(i) += step_;
  down.at(i) -= step_;
  const double mid = base_->conjugate_grad(x)[i];
  return (base_->conjugate_grad(up)[i] - 2.0 * mid + base_->conjugate_grad(down)[i]) /
         (step_ * step_);
}

std::shared_ptr<const Regularizer> make_regularizer(const std::string& name) {
  if (name == "neg_entropy") return std::make_shared<NegativeEntropy>();
  if (name == "l2") return std::make_shared<SquaredL2>();
  throw std::invalid_argument("unknown regularizer '" + name + "' (expected neg_entropy or l2)");
}

const char* to_string(ConditionStatus status) {
  switch (status) {
    case ConditionStatus::kPass:
      return "pass";
    case ConditionStatus::kViolation:
      return "violation";
    case ConditionStatus::kNonpositiveCurvature:
      return "nonpositive_curvature";
  }
  return "unknown";
}

ConditionReport condition_check(const Regularizer& reg, const ConditionCheckConfig& config) {
  if (config.sample_count == 0) throw std::invalid_argument("condition_check: sample_count = 0");
  if (config.dimension < 2) throw std::invalid_argument("condition_check: dimension < 2");
  if (!(config.domain_radius > 0.0)) {
    throw std::invalid_argument("condition_check: domain_radius must be positive");
  }
  for (double step : config.pair_steps) {
    if (!(step > 0.0 && step <= 1.0)) {
      throw std::invalid_argument("condition_check: pair steps must lie in (0, 1]");
    }
  }

  ConditionReport report;
  report.regularizer = reg.name();
  report.dimension = config.dimension;
  report.samples = config.sample_count;
  report.domain_radius = config.domain_radius;
  report.seed = config.seed;
  report.finite_difference = !reg.closed_form_partials();
  report.declared = config.declared ? config.declared : reg.declared_constants();
  report.empirical_alpha = std::numeric_limits<double>::infinity();
  report.empirical_beta = 0.0;

  Rng rng(config.seed);
  const std::size_t n = config.dimension;
  const double radius = config.domain_radius;

  auto hard_failure = [&](const Vector& x, const Vector& xp, std::size_t i, double v) {
    report.curvature_witness = ConditionWitness{x, xp, i, v};
    report.status = ConditionStatus::kNonpositiveCurvature;
    report.alpha_ok = false;
    report.beta_ok = false;
    report.empirical_beta = std::numeric_limits<double>::infinity();
    return report;
  };

  Vector x(n);
  Vector xp(n);
  for (std::size_t sample = 0; sample < config.sample_count; ++sample) {
    for (double& v : x) v = rng.uniform(-radius, radius);
    const auto i = static_cast<std::size_t>(rng.below(n));

    const double d2 = reg.conjugate_partial2(x, i);
    if (!(d2 > 0.0)) return hard_failure(x, {}, i, d2);
    const double d3 = std::abs(reg.conjugate_partial3(x, i));
    const double ratio = d3 > 0.0 ? d2 / d3 : std::numeric_limits<double>::infinity();
    if (ratio < report.empirical_alpha) {
      report.empirical_alpha = ratio;
      report.alpha_witness = ConditionWitness{x, {}, i, ratio};
    }

    for (double step : config.pair_steps) {
      // Direction with |d|_inf = 1 exactly, so |x - x'|_inf = step.
      const auto pinned = static_cast<std::size_t>(rng.below(n));
      for (std::size_t j = 0; j < n; ++j) {
        double d = rng.uniform(-1.0, 1.0);
        if (j == pinned) d = d < 0.0 ? -1.0 : 1.0;
        xp[j] = x[j] + step * d;
      }
      const double d2p = reg.conjugate_partial2(xp, i);
      if (!(d2p > 0.0)) return hard_failure(x, xp, i, d2p);
      const double lip = std::abs(std::log(d2) - std::log(d2p)) / step;
      if (lip > report.empirical_beta) {
        report.empirical_beta = lip;
        report.beta_witness = ConditionWitness{x, xp, i, lip};
      }
    }
  }

  if (report.declared) {
    report.alpha_ok = report.empirical_alpha >= report.declared->alpha;
    report.beta_ok = report.empirical_beta <= report.declared->beta + config.beta_tolerance;
  } else {
    report.alpha_ok = report.empirical_alpha > 0.0;
    report.beta_ok = std::isfinite(report.empirical_beta);
  }
  report.status = report.alpha_ok && report.beta_ok ? ConditionStatus::kPass
                                                     : ConditionStatus::kViolation;
  return report;
}

}  // namespace forecomp
