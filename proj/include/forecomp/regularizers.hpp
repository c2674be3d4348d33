#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forecomp/types.hpp"

namespace forecomp {

// Curvature constants of a conjugate C = R*:
//   d2_i C(x) >= alpha |d3_i C(x)|                      (third-order control)
//   |log d2_i C(x) - log d2_i C(x')| <= beta |x - x'|_inf (log-Lipschitz second partial)
struct CurvatureConstants {
  double alpha = 0.0;
  double beta = 0.0;
};

// Strictly convex regularizer on the simplex, accessed mostly through its
// convex conjugate C. FTRL selects grad C(eta q).
class Regularizer {
 public:
  virtual ~Regularizer() = default;

  virtual std::string name() const = 0;
  virtual double value(std::span<const double> pi) const = 0;
  virtual double conjugate(std::span<const double> x) const = 0;
  virtual Vector conjugate_grad(std::span<const double> x) const = 0;
  virtual double conjugate_partial2(std::span<const double> x, std::size_t i) const = 0;
  virtual double conjugate_partial3(std::span<const double> x, std::size_t i) const = 0;

  // False when the partials come from finite differences; curvature estimates
  // built on them are noisy.
  virtual bool closed_form_partials() const { return true; }
  // Constants the regularizer claims to satisfy, if any.
  virtual std::optional<CurvatureConstants> declared_constants() const { return std::nullopt; }
  // D_R = max R - min R over the n-simplex.
  virtual double diameter(std::size_t n) const = 0;
};

// R(pi) = sum_i pi_i log pi_i, C(x) = log sum_i exp(x_i). Declares
// alpha = 2, beta = 3.
class NegativeEntropy final : public Regularizer {
 public:
  std::string name() const override { return "neg_entropy"; }
  double value(std::span<const double> pi) const override;
  double conjugate(std::span<const double> x) const override;
  Vector conjugate_grad(std::span<const double> x) const override;
  double conjugate_partial2(std::span<const double> x, std::size_t i) const override;
  double conjugate_partial3(std::span<const double> x, std::size_t i) const override;
  std::optional<CurvatureConstants> declared_constants() const override {
    return CurvatureConstants{2.0, 3.0};
  }
  double diameter(std::size_t n) const override;
};

// R(pi) = |pi|^2 / 2. The conjugate is piecewise quadratic, so its second
// partial vanishes far from the origin and the log-Lipschitz condition fails.
class SquaredL2 final : public Regularizer {
 public:
  std::string name() const override { return "l2"; }
  double value(std::span<const double> pi) const override;
  double conjugate(std::span<const double> x) const override;
  Vector conjugate_grad(std::span<const double> x) const override;
  double conjugate_partial2(std::span<const double> x, std::size_t i) const override;
  double conjugate_partial3(std::span<const double> x, std::size_t i) const override;
  double diameter(std::size_t n) const override;
};

// Replaces a regularizer's closed-form partials with central differences of
// its conjugate gradient.
class FiniteDifferencePartials final : public Regularizer {
 public:
  explicit FiniteDifferencePartials(std::shared_ptr<const Regularizer> base, double step = 1e-4)
      : base_(std::move(base)), step_(step) {}

  std::string name() const override { return base_->name() + "_fd"; }
  double value(std::span<const double> pi) const override { return base_->value(pi); }
  double conjugate(std::span<const double> x) const override { return base_->conjugate(x); }
  Vector conjugate_grad(std::span<const double> x) const override {
    return base_->conjugate_grad(x);
  }
  double conjugate_partial2(std::span<const double> x, std::size_t i) const override;
  double conjugate_partial3(std::span<const double> x, std::size_t i) const override;
  bool closed_form_partials() const override { return false; }
  std::optional<CurvatureConstants> declared_constants() const override {
    return base_->declared_constants();
  }
  double diameter(std::size_t n) const override { return base_->diameter(n); }

 private:
  std::shared_ptr<const Regularizer> base_;
  double step_;
};

std::shared_ptr<const Regularizer> make_regularizer(const std::string& name);

// Free-function forms of the log-sum-exp conjugate.
double neg_entropy(std::span<const double> pi);
double entropy_conjugate(std::span<const double> x);
Vector entropy_conjugate_grad(std::span<const double> x);
double entropy_conjugate_partial2(std::span<const double> x, std::size_t i);
double entropy_conjugate_partial3(std::span<const double> x, std::size_t i);

// Euclidean projection onto the probability simplex.
Vector project_to_simplex(std::span<const double> x);

// ---------------------------------------------------------------------------
// Numerical verification of the curvature constants.

struct ConditionCheckConfig {
  std::size_t sample_count = 10000;
  double domain_radius = 10.0;
  std::size_t dimension = 3;
  std::uint64_t seed = 1;
  // Distances |x - x'|_inf at which the log-Lipschitz ratio is probed.
  std::vector<double> pair_steps = {0.01, 0.1, 1.0};
  // Slack allowed on beta before it counts as a violation.
  double beta_tolerance = 0.01;
  // Overrides the regularizer's own declared constants.
  std::optional<CurvatureConstants> declared;
};

enum class ConditionStatus { kPass, kViolation, kNonpositiveCurvature };
const char* to_string(ConditionStatus status);

struct ConditionWitness {
  Vector x;
  Vector x_prime;  // empty for single-point quantities
  std::size_t coordinate = 0;
  double value = 0.0;
};

struct ConditionReport {
  std::string regularizer;
  std::size_t dimension = 0;
  std::size_t samples = 0;
  double domain_radius = 0.0;
  std::uint64_t seed = 0;
  bool finite_difference = false;
  std::optional<CurvatureConstants> declared;
  // min d2/|d3| over samples (+inf when d3 vanished everywhere).
  double empirical_alpha = 0.0;
  // max |log d2(x) - log d2(x')| / |x - x'|_inf over probed pairs.
  double empirical_beta = 0.0;
  bool alpha_ok = false;
  bool beta_ok = false;
  ConditionStatus status = ConditionStatus::kViolation;
  ConditionWitness alpha_witness;
  ConditionWitness beta_witness;
  std::optional<ConditionWitness> curvature_witness;
};

// Throws std::invalid_argument for sample_count == 0 or a bad domain.
ConditionReport condition_check(const Regularizer& reg, const ConditionCheckConfig& config);

}  // namespace forecomp
