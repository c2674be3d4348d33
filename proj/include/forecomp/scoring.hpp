#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "forecomp/types.hpp"

namespace forecomp {

// Quadratic (Brier) score S(q, y) = 1 - (y - q)^2.
double quadratic_score(double q, int y);

// Unchecked variant for inner loops whose inputs were validated upstream.
inline double quadratic_score_unchecked(double q, int y) {
  const double d = static_cast<double>(y) - q;
  return 1.0 - d * d;
}

// a_i = 1 - mean_t (p_it - theta_t)^2.
double accuracy(std::span<const double> beliefs, const GroundTruth& theta);

using AccuracyVector = std::vector<double>;
AccuracyVector accuracies(const BeliefMatrix& beliefs, const GroundTruth& theta);

// C_theta = mean_t theta_t (1 - theta_t); the gap between accuracy and the
// expected average score of a truthful forecaster.
double outcome_variance_constant(const GroundTruth& theta);

// Mean over events of E_{y_t ~ theta_t} S(r_t, y_t).
double expected_avg_quadratic_score(std::span<const double> reports, const GroundTruth& theta);

// Indices i with a_i >= max_j a_j - epsilon, in increasing order.
std::vector<std::size_t> epsilon_optimal_set(std::span<const double> acc, double epsilon);

// Total score q_i = sum_t S(r_it, y_t) of every forecaster.
Vector total_scores(const ReportMatrix& reports, const OutcomeVector& outcomes);

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace forecomp
