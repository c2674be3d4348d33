#include "forecomp/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace forecomp {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

double quadratic_score(double q, int y) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("score report outside [0,1]");
  if (y != 0 && y != 1) throw std::domain_error("outcome must be 0 or 1");
  return quadratic_score_unchecked(q, y);
}

double accuracy(std::span<const double> beliefs, const GroundTruth& theta) {
  if (beliefs.size() != theta.size()) throw std::invalid_argument("accuracy: length mismatch");
  CompensatedSum sq;
  for (std::size_t t = 0; t < beliefs.size(); ++t) {
    const double d = beliefs[t] - theta[t];
    sq.add(d * d);
  }
  return 1.0 - sq.value() / static_cast<double>(theta.size());
}

AccuracyVector accuracies(const BeliefMatrix& beliefs, const GroundTruth& theta) {
  AccuracyVector out(beliefs.rows());
  for (std::size_t i = 0; i < beliefs.rows(); ++i) out[i] = accuracy(beliefs.row(i), theta);
  return out;
}

double outcome_variance_constant(const GroundTruth& theta) {
  CompensatedSum s;
  for (double v : theta.values()) s.add(v * (1.0 - v));
  return s.value() / static_cast<double>(theta.size());
}

double expected_avg_quadratic_score(std::span<const double> reports, const GroundTruth& theta) {
  if (reports.size() != theta.size()) {
    throw std::invalid_argument("expected score: length mismatch");
  }
  CompensatedSum s;
  for (std::size_t t = 0; t < reports.size(); ++t) {
    require_probability(reports[t], "report");
    const double r = reports[t];
    s.add(theta[t] * quadratic_score_unchecked(r, 1) +
          (1.0 - theta[t]) * quadratic_score_unchecked(r, 0));
  }
  return s.value() / static_cast<double>(theta.size());
}

std::vector<std::size_t> epsilon_optimal_set(std::span<const double> acc, double epsilon) {
  if (acc.empty()) throw std::invalid_argument("empty accuracy vector");
  if (!(epsilon >= 0.0)) throw std::domain_error("epsilon must be nonnegative");
  const double best = *std::max_element(acc.begin(), acc.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (acc[i] >= best - epsilon) out.push_back(i);
  }
  return out;
}

Vector total_scores(const ReportMatrix& reports, const OutcomeVector& outcomes) {
  if (reports.cols() != outcomes.size()) {
    throw std::invalid_argument("total_scores: report/outcome length mismatch");
  }
  Vector q(reports.rows(), 0.0);
  for (std::size_t i = 0; i < reports.rows(); ++i) {
    const auto row = reports.row(i);
    double s = 0.0;
    for (std::size_t t = 0; t < row.size(); ++t) {
      s += quadratic_score_unchecked(row[t], outcomes[t]);
    }
    q[i] = s;
  }
  return q;
}

}  // namespace forecomp
