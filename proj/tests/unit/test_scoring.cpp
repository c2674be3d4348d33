#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "forecomp/rng.hpp"
#include "forecomp/scoring.hpp"

using namespace forecomp;

TEST_CASE("quadratic score values") {
  CHECK(quadratic_score(0.7, 1) == doctest::Approx(0.91).epsilon(1e-15));
  CHECK(quadratic_score(0.7, 0) == doctest::Approx(0.51).epsilon(1e-15));
  CHECK(quadratic_score(1.0, 1) == 1.0);
  CHECK(quadratic_score(1.0, 0) == 0.0);
  CHECK(quadratic_score(0.5, 0) == 0.75);
}

TEST_CASE("quadratic score rejects bad inputs") {
  CHECK_THROWS_AS(quadratic_score(1.5, 1), std::domain_error);
  CHECK_THROWS_AS(quadratic_score(-0.1, 0), std::domain_error);
  CHECK_THROWS_AS(quadratic_score(std::nan(""), 0), std::domain_error);
  CHECK_THROWS(quadratic_score(0.5, 2));
}

TEST_CASE("expected score equals accuracy minus outcome variance") {
  Rng rng(11);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t m = 1 + rng.below(50);
    Vector p(m), theta(m);
    for (std::size_t t = 0; t < m; ++t) {
      p[t] = rng.uniform();
      theta[t] = rng.uniform();
    }
    long double score = 0, sq = 0, var = 0;
    for (std::size_t t = 0; t < m; ++t) {
      const long double th = theta[t], q = p[t];
      score += th * (1 - (1 - q) * (1 - q)) + (1 - th) * (1 - q * q);
      sq += (q - th) * (q - th);
      var += th * (1 - th);
    }
    const GroundTruth gt(theta);
    CHECK(std::abs(expected_avg_quadratic_score(p, gt) - static_cast<double>(score / m)) < 1e-13);
    CHECK(std::abs(accuracy(p, gt) - static_cast<double>(1 - sq / m)) < 1e-13);
    CHECK(std::abs(outcome_variance_constant(gt) - static_cast<double>(var / m)) < 1e-13);
    CHECK(std::abs(expected_avg_quadratic_score(p, gt) -
                   (accuracy(p, gt) - outcome_variance_constant(gt))) < 1e-12);
  }
}

TEST_CASE("truthful report maximizes expected score on a grid") {
  for (double theta : {0.0, 0.13, 0.5, 0.77, 1.0}) {
    const GroundTruth gt(Vector{theta});
    const double truthful = expected_avg_quadratic_score(Vector{theta}, gt);
    for (int k = 0; k <= 1000; ++k) {
      const double r = k / 1000.0;
      CHECK(expected_avg_quadratic_score(Vector{r}, gt) <= truthful + 1e-15);
    }
  }
}

TEST_CASE("epsilon optimal set") {
  const Vector acc = {0.9, 0.85, 0.7, 0.95};
  CHECK(epsilon_optimal_set(acc, 0.1) == std::vector<std::size_t>{0, 1, 3});
  CHECK(epsilon_optimal_set(acc, 0.0) == std::vector<std::size_t>{3});
  CHECK(epsilon_optimal_set(acc, 0.25) == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("total scores") {
  const auto r = ReportMatrix::from_rows({{0.2, 0.9}, {1.0, 0.0}});
  const OutcomeVector y({1, 0});
  const Vector q = total_scores(r, y);
  CHECK(q[0] == doctest::Approx((1 - 0.64) + (1 - 0.81)));
  CHECK(q[1] == doctest::Approx(2.0));
}

TEST_CASE("compensated sum recovers cancelled terms") {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1.0);

  CompensatedSum tenth;
  for (int k = 0; k < 1000000; ++k) tenth.add(0.1);
  CHECK(std::abs(tenth.value() - 100000.0) < 1e-9);
}

TEST_CASE("probability containers validate entries") {
  CHECK_THROWS(BeliefMatrix::from_rows({{0.5, 1.2}}));
  CHECK_THROWS(GroundTruth(Vector{-0.01}));
  CHECK_THROWS(OutcomeVector(std::vector<int>{0, 3}));
  CHECK_THROWS(SelectionDistribution(Vector{0.5, 0.6}));
  CHECK_NOTHROW(SelectionDistribution(Vector{0.25, 0.75}));
}
