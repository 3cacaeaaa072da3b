#include "mfcert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

#include "mfcert/error.hpp"

namespace mfcert {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows[0].size() : 0;
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    require(rows[i].size() == c, Errc::InvalidArgument, "Matrix: ragged rows");
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::operator*(const Matrix& rhs) const {
  require(cols_ == rhs.rows_, Errc::LengthMismatch, "Matrix product: shape mismatch");
  Matrix out(rows_, rhs.cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(i, k);
      for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += a * rhs(k, j);
    }
  return out;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix& Matrix::operator+=(const Matrix& rhs) {
  require(rows_ == rhs.rows_ && cols_ == rhs.cols_, Errc::LengthMismatch, "Matrix sum: shape");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
  return *this;
}

std::vector<double> Matrix::apply(std::span<const double> x) const {
  require(x.size() == cols_, Errc::LengthMismatch, "Matrix::apply: shape mismatch");
  std::vector<double> y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
  return y;
}

bool is_symmetric(const Matrix& a, double tol) {
  if (!a.square()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

std::optional<Matrix> cholesky(const Matrix& a) {
  if (!a.square()) return std::nullopt;
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

namespace {

Matrix require_cholesky(const Matrix& a) {
  auto l = cholesky(a);
  require(l.has_value(), Errc::NotSPD, "matrix is not symmetric positive definite");
  return *l;
}

std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
    y[i] /= l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= l(k, ii) * y[k];
    y[ii] /= l(ii, ii);
  }
  return y;
}

}  // namespace

double log_det_spd(const Matrix& a) {
  const Matrix l = require_cholesky(a);
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

Matrix inverse_spd(const Matrix& a) {
  const Matrix l = require_cholesky(a);
  const std::size_t n = a.rows();
  Matrix inv(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    const auto col = cholesky_solve(l, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

std::vector<double> solve_spd(const Matrix& a, std::span<const double> b) {
  require(b.size() == a.rows(), Errc::LengthMismatch, "solve_spd: shape mismatch");
  return cholesky_solve(require_cholesky(a), b);
}

SymmetricEigen symmetric_eigen(const Matrix& input) {
  require(input.square(), Errc::InvalidArgument, "symmetric_eigen: matrix must be square");
  const std::size_t n = input.rows();
  Matrix a = input;
  Matrix v = Matrix::identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) off += a(i, j) * a(i, j);
        scale += a(i, j) * a(i, j);
      }
    if (off <= 1e-30 * std::max(scale, 1e-300)) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

double lambda_min(const Matrix& a) {
  require(a.square() && a.rows() > 0, Errc::InvalidArgument, "lambda_min: need a square matrix");
  const auto l = cholesky(a);
  if (!l) return symmetric_eigen(a).values.front();

  const std::size_t n = a.rows();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * std::sin(static_cast<double>(i) + 1.0);
  auto normalise = [](std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    s = std::sqrt(s);
    for (double& e : v) e /= s;
  };
  normalise(x);
  double mu = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 10000; ++it) {
    x = cholesky_solve(*l, x);
    normalise(x);
    const auto ax = a.apply(x);
    double rq = 0.0;
    for (std::size_t i = 0; i < n; ++i) rq += x[i] * ax[i];
    if (std::abs(rq - mu) <= 1e-10 * std::max(1.0, std::abs(rq))) return rq;
    mu = rq;
  }
  return mu;
}

double lambda_max(const Matrix& a) { return symmetric_eigen(a).values.back(); }

const QuadratureRule& gauss_hermite(std::size_t order) {
  static std::mutex mu;
  static std::map<std::size_t, QuadratureRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  require(order >= 1, Errc::InvalidArgument, "gauss_hermite: order must be positive");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Matrix jac(order, order);
  for (std::size_t k = 1; k < order; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
  const auto eig = symmetric_eigen(jac);
  QuadratureRule rule{eig.values, std::vector<double>(order)};
  double total = 0.0;
  for (std::size_t k = 0; k < order; ++k) {
    rule.weights[k] = eig.vectors(0, k) * eig.vectors(0, k);
    total += rule.weights[k];
  }
  for (double& w : rule.weights) w /= total;
  return cache.emplace(order, std::move(rule)).first->second;
}

}  // namespace mfcert
