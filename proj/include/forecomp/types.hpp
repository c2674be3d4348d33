#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace forecomp {

using Vector = std::vector<double>;

// Dense row-major matrix. Row i is forecaster i, column t is event t.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t t) { return data_[i * cols_ + t]; }
  double operator()(std::size_t i, std::size_t t) const { return data_[i * cols_ + t]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<Vector> to_rows() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

void require_probability(double value, const char* what);

// Matrix whose entries are all probabilities. The tag keeps beliefs and
// reports from being mixed up at call sites.
template <class Tag>
class ProbabilityMatrix {
 public:
  ProbabilityMatrix() = default;
  explicit ProbabilityMatrix(Matrix values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.rows(); ++i) {
      for (double v : values_.row(i)) require_probability(v, Tag::name);
    }
  }
  static ProbabilityMatrix from_rows(const std::vector<Vector>& rows) {
    return ProbabilityMatrix(Matrix::from_rows(rows));
  }

  std::size_t rows() const { return values_.rows(); }
  std::size_t cols() const { return values_.cols(); }
  double operator()(std::size_t i, std::size_t t) const { return values_(i, t); }
  std::span<const double> row(std::size_t i) const { return values_.row(i); }
  const Matrix& values() const { return values_; }

  bool operator==(const ProbabilityMatrix&) const = default;

 private:
  Matrix values_;
};

struct BeliefTag {
  static constexpr const char* name = "belief";
};
struct ReportTag {
  static constexpr const char* name = "report";
};

using BeliefMatrix = ProbabilityMatrix<BeliefTag>;
using ReportMatrix = ProbabilityMatrix<ReportTag>;

// Per-event probability that the event occurs.
class GroundTruth {
 public:
  explicit GroundTruth(Vector theta);
  std::size_t size() const { return theta_.size(); }
  double operator[](std::size_t t) const { return theta_[t]; }
  std::span<const double> values() const { return theta_; }

 private:
  Vector theta_;
};

class OutcomeVector {
 public:
  OutcomeVector() = default;
  explicit OutcomeVector(std::vector<int> outcomes);
  std::size_t size() const { return y_.size(); }
  int operator[](std::size_t t) const { return y_[t]; }
  std::span<const int> values() const { return y_; }

 private:
  std::vector<int> y_;
};

// A point in the probability simplex over forecasters.
class SelectionDistribution {
 public:
  static constexpr double kSumTolerance = 1e-10;

  SelectionDistribution() = default;
  explicit SelectionDistribution(Vector pi);

  static SelectionDistribution uniform(std::size_t n);
  static SelectionDistribution point_mass(std::size_t n, std::size_t i);
  // Uniform over the given indices.
  static SelectionDistribution uniform_over(std::size_t n, std::span<const std::size_t> support);

  std::size_t size() const { return pi_.size(); }
  double operator[](std::size_t i) const { return pi_[i]; }
  std::span<const double> values() const { return pi_; }

 private:
  Vector pi_;
};

// Throws std::invalid_argument unless the reports have the beliefs' shape.
void require_same_shape(const ReportMatrix& reports, std::size_t n, std::size_t m);

}  // namespace forecomp
