#pragma once

#include <cstddef>
#include <vector>

#include "ctpe/errors.hpp"

namespace ctpe {

// Dense row-major matrix; just enough surface for the solvers in this
// library. Values are zero-initialized.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SolveReport {
  std::vector<double> solution;
  // ||A||_1 times a Hager-style lower estimate of ||A^{-1}||_1 (A here means
  // the regularized matrix actually factorized).
  double condition_estimate = 0.0;
  // ||(A + ridge*I) x - b||_2 recomputed from the inputs, not a by-product of
  // elimination.
  double residual_norm = 0.0;
  double regularization = 0.0;
  // Set when condition_estimate > 1e12.
  bool condition_warning = false;
};

inline constexpr double kConditionWarnThreshold = 1e12;

// Solves (A + ridge*I) x = b by partial-pivot LU. Ridge is opt-in and
// defaults to zero; it is never applied silently. Throws
// SingularSystemError (carrying the pivot index) when elimination meets an
// exactly zero pivot, DomainError on shape mismatch.
SolveReport solve(const Matrix& A, const std::vector<double>& b, double ridge = 0.0);

}  // namespace ctpe
