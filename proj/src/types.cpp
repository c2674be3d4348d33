#include "forecomp/types.hpp"

#include <cmath>
#include <numeric>

namespace forecomp {

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix out(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw std::invalid_argument("ragged matrix rows");
    std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  }
  return out;
}

std::vector<Vector> Matrix::to_rows() const {
  std::vector<Vector> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

void require_probability(double value, const char* what) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::domain_error(std::string(what) + " value outside [0,1]: " + std::to_string(value));
  }
}

GroundTruth::GroundTruth(Vector theta) : theta_(std::move(theta)) {
  if (theta_.empty()) throw std::invalid_argument("ground truth needs at least one event");
  for (double v : theta_) require_probability(v, "ground truth");
}

OutcomeVector::OutcomeVector(std::vector<int> outcomes) : y_(std::move(outcomes)) {
  for (int v : y_) {
    if (v != 0 && v != 1) throw std::domain_error("outcome must be 0 or 1");
  }
}

SelectionDistribution::SelectionDistribution(Vector pi) : pi_(std::move(pi)) {
  if (pi_.empty()) throw std::invalid_argument("empty selection distribution");
  double sum = 0.0;
  for (double v : pi_) {
    if (!(v >= 0.0)) throw std::domain_error("negative selection probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::domain_error("selection distribution sums to " + std::to_string(sum));
  }
}

SelectionDistribution SelectionDistribution::uniform(std::size_t n) {
  return SelectionDistribution(Vector(n, 1.0 / static_cast<double>(n)));
}

SelectionDistribution SelectionDistribution::point_mass(std::size_t n, std::size_t i) {
  Vector pi(n, 0.0);
  pi.at(i) = 1.0;
  return SelectionDistribution(std::move(pi));
}

SelectionDistribution SelectionDistribution::uniform_over(std::size_t n,
                                                          std::span<const std::size_t> support) {
  if (support.empty()) throw std::invalid_argument("empty support");
  Vector pi(n, 0.0);
  const double w = 1.0 / static_cast<double>(support.size());
  for (std::size_t i : support) pi.at(i) = w;
  return SelectionDistribution(std::move(pi));
}

void require_same_shape(const ReportMatrix& reports, std::size_t n, std::size_t m) {
  if (reports.rows() != n || reports.cols() != m) {
    throw std::invalid_argument("report matrix is " + std::to_string(reports.rows()) + "x" +
                                std::to_string(reports.cols()) + ", expected " +
                                std::to_string(n) + "x" + std::to_string(m));
  }
}

}  // namespace forecomp
