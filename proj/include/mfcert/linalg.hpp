#pragma once

// Small dense linear algebra for model validation and closed-form oracles.
// Sizes here are tens of rows at most, so straightforward O(n^3) routines
// are used throughout.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace mfcert {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<std::vector<double>> to_rows() const;

  Matrix transpose() const;
  Matrix operator*(const Matrix& rhs) const;
  Matrix& operator*=(double s);
  Matrix& operator+=(const Matrix& rhs);
  std::vector<double> apply(std::span<const double> x) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

bool is_symmetric(const Matrix& a, double tol);

/// Lower-triangular L with L L^T = A, or nullopt when A is not positive definite.
std::optional<Matrix> cholesky(const Matrix& a);

/// Errors: NotSPD.
double log_det_spd(const Matrix& a);
Matrix inverse_spd(const Matrix& a);
std::vector<double> solve_spd(const Matrix& a, std::span<const double> b);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column k pairs with values[k]
};

/// Cyclic Jacobi rotations; exact to rounding for the sizes used here.
SymmetricEigen symmetric_eigen(const Matrix& a);

/// Smallest eigenvalue of a symmetric matrix. Positive definite input goes
/// through inverse power iteration (tolerance 1e-10 on the Rayleigh quotient,
/// at most 10000 iterations); otherwise the Jacobi solver is used.
double lambda_min(const Matrix& a);
double lambda_max(const Matrix& a);

/// Gauss-Hermite rule for the standard normal: E f(Z) ~ sum w_k f(x_k).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const QuadratureRule& gauss_hermite(std::size_t order);

}  // namespace mfcert
