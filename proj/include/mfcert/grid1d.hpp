#pragma once

// One-dimensional densities on uniform grids. All integrals use the composite
// trapezoid rule on the grid; every normalisation goes through a max-shifted
// log-sum-exp so sharply peaked densities do not overflow.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mfcert {

using Fn1D = std::function<double(double)>;

class Grid {
 public:
  static constexpr std::size_t kMinPoints = 16;

  Grid(double lo, double hi, std::size_t m);
  static Grid centered(double center, double halfwidth, std::size_t m);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t size() const noexcept { return m_; }
  double spacing() const noexcept { return h_; }
  double center() const noexcept { return 0.5 * (lo_ + hi_); }
  double halfwidth() const noexcept { return 0.5 * (hi_ - lo_); }

  double point(std::size_t k) const noexcept { return lo_ + static_cast<double>(k) * h_; }
  /// Trapezoid weight of node k.
  double weight(std::size_t k) const noexcept { return (k == 0 || k + 1 == m_) ? 0.5 * h_ : h_; }

  std::vector<double> points() const;
  std::vector<double> weights() const;

  bool same_spacing(const Grid& other) const noexcept;
  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.m_ == b.m_;
  }

 private:
  double lo_, hi_;
  std::size_t m_;
  double h_;
};

/// Probability density q(x) = exp(logw(x) - logZ1) sampled on a grid.
class GridDensity {
 public:
  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return logw_.size(); }
  std::span<const double> logw() const noexcept { return logw_; }
  double logZ1() const noexcept { return logZ1_; }

  double log_pdf(std::size_t k) const noexcept { return logw_[k] - logZ1_; }
  double pdf(std::size_t k) const;
  std::vector<double> pdf_values() const;
  std::vector<double> log_pdf_values() const;
  /// Trapezoid mass w_k q_k at each node; sums to one.
  std::vector<double> masses() const;

  /// Density at either endpoint exceeds 1e-8 of its maximum.
  bool truncated() const;

  /// Trapezoid cumulative integral at the nodes; front() == 0, back() ~ 1.
  std::vector<double> cdf() const;

  /// Density at an arbitrary point by linear interpolation of log q; zero
  /// outside the grid.
  double log_pdf_at(double x) const;

 private:
  friend GridDensity normalize(std::vector<double> logw, const Grid& grid);
  GridDensity(Grid grid, std::vector<double> logw, double logZ1)
      : grid_(grid), logw_(std::move(logw)), logZ1_(logZ1) {}

  Grid grid_;
  std::vector<double> logw_;
  double logZ1_;
};

using ProductMeasure = std::vector<GridDensity>;

/// Errors: AllNegInfinite, NonFiniteInput, LengthMismatch.
GridDensity normalize(std::vector<double> logw, const Grid& grid);

/// Gaussian N(mean, var) restricted to the grid and renormalised.
GridDensity gaussian_density(const Grid& grid, double mean, double var);

/// Density proportional to exp(fn(x)) on the grid.
GridDensity density_from_log(const Grid& grid, const Fn1D& log_fn);

/// Integral of q log q (the negative of differential entropy).
double entropy(const GridDensity& q);

/// Trapezoid integral of x^k q(x).
double moment(const GridDensity& q, int k);
double mean(const GridDensity& q);
double variance(const GridDensity& q);

/// Trapezoid integral of values[k] * q(x_k).
double expect(const GridDensity& q, std::span<const double> values);
double expect(const GridDensity& q, const Fn1D& fn);

/// Inverse of the trapezoid CDF, linear within a grid cell. u must lie in (0,1).
double quantile(const GridDensity& q, double u);

/// Quantiles at ascending probabilities, one pass over the CDF.
std::vector<double> quantiles(const GridDensity& q, std::span<const double> sorted_u);

/// Quadratic Wasserstein distance via the quantile coupling, midpoint rule
/// with `levels` points on (0,1).
double w2(const GridDensity& a, const GridDensity& b, std::size_t levels = 4096);

/// Discretised kernel operator c[a] = sum_b K(x_a - y_b) mass[b] from a
/// source grid onto a target grid. When the spacings match, K is tabulated
/// once on the difference lattice and applied as a correlation; otherwise a
/// dense matrix is stored.
class KernelConvolution {
 public:
  /// Errors: NonFiniteKernel if K is non-finite on a needed difference.
  KernelConvolution(const Fn1D& kernel, const Grid& source, const Grid& target);

  const Grid& source() const noexcept { return source_; }
  const Grid& target() const noexcept { return target_; }

  /// mass[b] is the trapezoid mass of the source density at node b.
  std::vector<double> apply(std::span<const double> mass) const;

 private:
  Grid source_, target_;
  bool toeplitz_;
  std::vector<double> table_;
};

/// c[x] = integral K(x - y) q(y) dy on q's own grid.
std::vector<double> kernel_smooth(const GridDensity& q, const Fn1D& kernel);

/// Same integral, evaluated at the nodes of `target`.
std::vector<double> kernel_smooth_onto(const GridDensity& q, const Fn1D& kernel,
                                       const Grid& target);

}  // namespace mfcert
