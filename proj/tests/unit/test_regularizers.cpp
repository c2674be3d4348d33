#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "forecomp/regularizers.hpp"
#include "forecomp/rng.hpp"

using namespace forecomp;

namespace {

std::vector<long double> softmax_ld(const Vector& x) {
  long double mx = *std::max_element(x.begin(), x.end());
  long double z = 0;
  std::vector<long double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z += std::exp(static_cast<long double>(x[i]) - mx);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i] - mx) / z;
  return out;
}

// Projection onto the simplex by bisection on the threshold tau in
// sum_i max(x_i - tau, 0) = 1.
Vector projection_oracle(const Vector& x) {
  long double lo = *std::min_element(x.begin(), x.end()) - 1.0L;
  long double hi = *std::max_element(x.begin(), x.end());
  for (int it = 0; it < 200; ++it) {
    const long double tau = (lo + hi) / 2;
    long double s = 0;
    for (double v : x) s += std::max<long double>(v - tau, 0);
    (s > 1 ? lo : hi) = tau;
  }
  Vector out;
  for (double v : x) out.push_back(static_cast<double>(std::max<long double>(v - lo, 0)));
  return out;
}

Vector random_point(Rng& rng, std::size_t n, double radius) {
  Vector x(n);
  for (double& v : x) v = rng.uniform(-radius, radius);
  return x;
}

}  // namespace

TEST_CASE("negative entropy conjugate gradient is softmax") {
  NegativeEntropy reg;
  Rng rng(3);
  for (int rep = 0; rep < 500; ++rep) {
    const Vector x = random_point(rng, 2 + rng.below(20), 30.0);
    const Vector g = reg.conjugate_grad(x);
    const auto oracle = softmax_ld(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(std::abs(g[i] - static_cast<double>(oracle[i])) < 1e-15);
    }
  }
}

TEST_CASE("negative entropy conjugate stays finite for large inputs") {
  NegativeEntropy reg;
  const Vector x = {1000.0, 999.0, -1000.0};
  CHECK(std::isfinite(reg.conjugate(x)));
  CHECK(reg.conjugate(x) == doctest::Approx(1000.0 + std::log1p(std::exp(-1.0))));
  const Vector g = reg.conjugate_grad(x);
  CHECK(g[2] == 0.0);
  CHECK(g[0] + g[1] + g[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("closed-form partials match finite differences of the gradient") {
  NegativeEntropy reg;
  Rng rng(5);
  const long double h = 1e-5;
  for (int rep = 0; rep < 200; ++rep) {
    Vector x = random_point(rng, 3, 3.0);
    const std::size_t i = rng.below(3);
    Vector xp = x, xm = x;
    xp[i] += static_cast<double>(h);
    xm[i] -= static_cast<double>(h);
    const long double d2 = (softmax_ld(xp)[i] - softmax_ld(xm)[i]) / (2 * h);
    const long double d3 = (softmax_ld(xp)[i] - 2 * softmax_ld(x)[i] + softmax_ld(xm)[i]) / (h * h);
    CHECK(std::abs(reg.conjugate_partial2(x, i) - static_cast<double>(d2)) < 1e-8);
    CHECK(std::abs(reg.conjugate_partial3(x, i) - static_cast<double>(d3)) < 1e-4);
  }
}

TEST_CASE("finite difference wrapper agrees with closed form") {
  auto base = std::make_shared<NegativeEntropy>();
  FiniteDifferencePartials fd(base);
  CHECK_FALSE(fd.closed_form_partials());
  CHECK(fd.name() == "neg_entropy_fd");
  const Vector x = {0.3, -1.2, 0.8};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(fd.conjugate_partial2(x, i) == doctest::Approx(base->conjugate_partial2(x, i)).epsilon(1e-6));
    CHECK(fd.conjugate_partial3(x, i) == doctest::Approx(base->conjugate_partial3(x, i)).epsilon(1e-4));
  }
}

TEST_CASE("squared L2 conjugate gradient is the simplex projection") {
  SquaredL2 reg;
  Rng rng(9);
  for (int rep = 0; rep < 500; ++rep) {
    const Vector x = random_point(rng, 2 + rng.below(10), 2.0);
    const Vector g = reg.conjugate_grad(x);
    const Vector oracle = projection_oracle(x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(g[i] - oracle[i]) < 1e-12);
    CHECK(project_to_simplex(x) == g);
  }
}

TEST_CASE("regularizer values and diameters") {
  NegativeEntropy ent;
  SquaredL2 l2;
  const Vector uniform = {0.25, 0.25, 0.25, 0.25};
  CHECK(ent.value(uniform) == doctest::Approx(-std::log(4.0)));
  CHECK(ent.value(Vector{1.0, 0.0}) == 0.0);
  CHECK(ent.diameter(10) == doctest::Approx(std::log(10.0)));
  CHECK(l2.value(uniform) == doctest::Approx(0.125));
  CHECK(l2.diameter(4) == doctest::Approx(0.5 * (1.0 - 0.25)));
}

TEST_CASE("regularizer factory") {
  CHECK(make_regularizer("neg_entropy")->name() == "neg_entropy");
  CHECK(make_regularizer("l2")->name() == "l2");
  CHECK_THROWS(make_regularizer("huber"));
  CHECK(NegativeEntropy().declared_constants()->alpha == 2.0);
  CHECK(NegativeEntropy().declared_constants()->beta == 3.0);
  CHECK_FALSE(SquaredL2().declared_constants().has_value());
}

TEST_CASE("condition check on negative entropy") {
  NegativeEntropy reg;
  ConditionCheckConfig cfg;
  cfg.sample_count = 4000;
  const ConditionReport r = condition_check(reg, cfg);
  CHECK(r.beta_ok);
  CHECK(r.empirical_beta <= 3.0 + 0.01);
  CHECK(r.empirical_beta > 1.5);
  // The ratio d2/|d3| of softmax approaches 1 where one coordinate dominates
  // the others, below the declared 2.
  CHECK(r.empirical_alpha >= 1.0 - 1e-9);
  CHECK(r.empirical_alpha < 1.1);
  CHECK_FALSE(r.alpha_ok);
  CHECK(r.status == ConditionStatus::kViolation);
  CHECK(r.alpha_witness.value == doctest::Approx(r.empirical_alpha));
}

TEST_CASE("condition check is reproducible") {
  NegativeEntropy reg;
  ConditionCheckConfig cfg;
  cfg.sample_count = 500;
  cfg.seed = 77;
  const ConditionReport a = condition_check(reg, cfg);
  const ConditionReport b = condition_check(reg, cfg);
  CHECK(a.empirical_alpha == b.empirical_alpha);
  CHECK(a.empirical_beta == b.empirical_beta);
}

TEST_CASE("condition check flags squared L2 with a witness") {
  SquaredL2 reg;
  ConditionCheckConfig cfg;
  cfg.sample_count = 2000;
  cfg.declared = CurvatureConstants{2.0, 3.0};
  const ConditionReport r = condition_check(reg, cfg);
  CHECK_FALSE(r.beta_ok);
  CHECK(r.status == ConditionStatus::kNonpositiveCurvature);
  REQUIRE(r.curvature_witness.has_value());
  CHECK(reg.conjugate_partial2(r.curvature_witness->x, r.curvature_witness->coordinate) <= 0.0);
}

TEST_CASE("condition check rejects empty sampling") {
  ConditionCheckConfig cfg;
  cfg.sample_count = 0;
  CHECK_THROWS_AS(condition_check(NegativeEntropy(), cfg), std::invalid_argument);
}
