#include "mfcert/grid1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfcert/error.hpp"
#include "mfcert/simd.hpp"

namespace mfcert {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Replacement for isolated -inf log weights; exp() of this offset is zero.
constexpr double kLogFloorOffset = 1000.0;

}  // namespace

Grid::Grid(double lo, double hi, std::size_t m) : lo_(lo), hi_(hi), m_(m), h_(0.0) {
  require(std::isfinite(lo) && std::isfinite(hi) && hi > lo, Errc::InvalidArgument,
          "Grid: need finite hi > lo");
  require(m >= kMinPoints, Errc::InvalidArgument,
          "Grid: need at least " + std::to_string(kMinPoints) + " points");
  h_ = (hi - lo) / static_cast<double>(m - 1);
}

Grid Grid::centered(double center, double halfwidth, std::size_t m) {
  return Grid(center - halfwidth, center + halfwidth, m);
}

std::vector<double> Grid::points() const {
  std::vector<double> x(m_);
  for (std::size_t k = 0; k < m_; ++k) x[k] = point(k);
  return x;
}

std::vector<double> Grid::weights() const {
  std::vector<double> w(m_, h_);
  w.front() = w.back() = 0.5 * h_;
  return w;
}

bool Grid::same_spacing(const Grid& other) const noexcept {
  return std::abs(h_ - other.h_) <= 1e-14 * std::max(h_, other.h_);
}

GridDensity normalize(std::vector<double> logw, const Grid& grid) {
  require(logw.size() == grid.size(), Errc::LengthMismatch, "normalize: logw/grid size mismatch");
  double top = kNegInf;
  for (double v : logw) {
    require(!std::isnan(v) && v != std::numeric_limits<double>::infinity(), Errc::NonFiniteInput,
            "normalize: NaN or +inf log weight");
    top = std::max(top, v);
  }
  require(top != kNegInf, Errc::AllNegInfinite, "normalize: every log weight is -inf");
  for (double& v : logw)
    if (v == kNegInf) v = top - kLogFloorOffset;

  std::vector<double> shifted(logw.size());
  for (std::size_t k = 0; k < logw.size(); ++k) shifted[k] = std::exp(logw[k] - top);
  const auto w = grid.weights();
  const double s = simd::dot(w, shifted);
  return GridDensity(grid, std::move(logw), top + std::log(s));
}

GridDensity gaussian_density(const Grid& grid, double mean, double var) {
  require(var > 0.0, Errc::InvalidArgument, "gaussian_density: variance must be positive");
  std::vector<double> logw(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double d = grid.point(k) - mean;
    logw[k] = -0.5 * d * d / var;
  }
  return normalize(std::move(logw), grid);
}

GridDensity density_from_log(const Grid& grid, const Fn1D& log_fn) {
  std::vector<double> logw(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) logw[k] = log_fn(grid.point(k));
  return normalize(std::move(logw), grid);
}

double GridDensity::pdf(std::size_t k) const { return std::exp(log_pdf(k)); }

std::vector<double> GridDensity::pdf_values() const {
  std::vector<double> q(size());
  for (std::size_t k = 0; k < size(); ++k) q[k] = std::exp(logw_[k] - logZ1_);
  return q;
}

std::vector<double> GridDensity::log_pdf_values() const {
  std::vector<double> l(size());
  for (std::size_t k = 0; k < size(); ++k) l[k] = logw_[k] - logZ1_;
  return l;
}

std::vector<double> GridDensity::masses() const {
  auto q = pdf_values();
  for (std::size_t k = 0; k < q.size(); ++k) q[k] *= grid_.weight(k);
  return q;
}

bool GridDensity::truncated() const {
  const double top = simd::max(logw_);
  const double limit = top + std::log(1e-8);
  return logw_.front() > limit || logw_.back() > limit;
}

std::vector<double> GridDensity::cdf() const {
  const auto q = pdf_values();
  const double h = grid_.spacing();
  std::vector<double> F(q.size());
  F[0] = 0.0;
  for (std::size_t k = 1; k < q.size(); ++k) F[k] = F[k - 1] + 0.5 * h * (q[k - 1] + q[k]);
  return F;
}

double GridDensity::log_pdf_at(double x) const {
  const double t = (x - grid_.lo()) / grid_.spacing();
  if (t < 0.0 || t > static_cast<double>(size() - 1)) return kNegInf;
  const std::size_t k = std::min(static_cast<std::size_t>(t), size() - 2);
  const double frac = t - static_cast<double>(k);
  return (1.0 - frac) * log_pdf(k) + frac * log_pdf(k + 1);
}

double entropy(const GridDensity& q) {
  const Grid& g = q.grid();
  double acc = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double lp = q.log_pdf(k);
    const double p = std::exp(lp);
    if (p > 0.0) acc += g.weight(k) * p * lp;
  }
  return acc;
}

double expect(const GridDensity& q, std::span<const double> values) {
  require(values.size() == q.size(), Errc::LengthMismatch, "expect: size mismatch");
  const auto mass = q.masses();
  return simd::dot(mass, values);
}

double expect(const GridDensity& q, const Fn1D& fn) {
  std::vector<double> v(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) v[k] = fn(q.grid().point(k));
  return expect(q, v);
}

double moment(const GridDensity& q, int k) {
  require(k == 1 || k == 2, Errc::InvalidArgument, "moment: k must be 1 or 2");
  auto x = q.grid().points();
  if (k == 2)
    for (double& v : x) v *= v;
  return expect(q, x);
}

double mean(const GridDensity& q) { return moment(q, 1); }

double variance(const GridDensity& q) {
  const double mu = mean(q);
  auto x = q.grid().points();
  for (double& v : x) v = (v - mu) * (v - mu);
  return expect(q, x);
}

namespace {

double invert_cell(const std::vector<double>& F, const Grid& g, std::size_t k, double u) {
  // F[k-1] < u <= F[k]
  const double span = F[k] - F[k - 1];
  const double frac = span > 0.0 ? (u - F[k - 1]) / span : 1.0;
  return g.point(k - 1) + frac * g.spacing();
}

}  // namespace

double quantile(const GridDensity& q, double u) {
  require(u > 0.0 && u < 1.0, Errc::OutOfRange, "quantile: u must lie in (0,1)");
  const auto F = q.cdf();
  auto it = std::lower_bound(F.begin() + 1, F.end(), u);
  if (it == F.end()) return q.grid().hi();
  return invert_cell(F, q.grid(), static_cast<std::size_t>(it - F.begin()), u);
}

std::vector<double> quantiles(const GridDensity& q, std::span<const double> sorted_u) {
  const auto F = q.cdf();
  std::vector<double> out(sorted_u.size());
  std::size_t k = 1;
  for (std::size_t j = 0; j < sorted_u.size(); ++j) {
    const double u = sorted_u[j];
    require(u > 0.0 && u < 1.0, Errc::OutOfRange, "quantiles: u must lie in (0,1)");
    require(j == 0 || u >= sorted_u[j - 1], Errc::InvalidArgument, "quantiles: u not sorted");
    while (k < F.size() && F[k] < u) ++k;
    out[j] = k == F.size() ? q.grid().hi() : invert_cell(F, q.grid(), k, u);
  }
  return out;
}

double w2(const GridDensity& a, const GridDensity& b, std::size_t levels) {
  require(levels >= 1, Errc::InvalidArgument, "w2: need at least one level");
  std::vector<double> u(levels);
  for (std::size_t j = 0; j < levels; ++j)
    u[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(levels);
  const auto qa = quantiles(a, u);
  const auto qb = quantiles(b, u);
  double acc = 0.0;
  for (std::size_t j = 0; j < levels; ++j) acc += (qa[j] - qb[j]) * (qa[j] - qb[j]);
  return std::sqrt(acc / static_cast<double>(levels));
}

KernelConvolution::KernelConvolution(const Fn1D& kernel, const Grid& source, const Grid& target)
    : source_(source), target_(target), toeplitz_(source.same_spacing(target)) {
  const std::size_t ms = source.size(), mt = target.size();
  auto check = [](double v) {
    require(std::isfinite(v), Errc::NonFiniteKernel, "kernel is non-finite on the difference range");
    return v;
  };
  if (toeplitz_) {
    // table[d] = K(offset + (d - (ms-1)) h); out[a] = sum_j table[a + j] * rev_mass[j].
    const double h = source.spacing();
    const double offset = target.lo() - source.lo();
    table_.resize(mt + ms - 1);
    for (std::size_t d = 0; d < table_.size(); ++d) {
      const double diff = offset + (static_cast<double>(d) - static_cast<double>(ms - 1)) * h;
      table_[d] = check(kernel(diff));
    }
  } else {
    table_.resize(mt * ms);
    for (std::size_t a = 0; a < mt; ++a)
      for (std::size_t b = 0; b < ms; ++b)
        table_[a * ms + b] = check(kernel(target.point(a) - source.point(b)));
  }
}

std::vector<double> KernelConvolution::apply(std::span<const double> mass) const {
  require(mass.size() == source_.size(), Errc::LengthMismatch, "KernelConvolution: mass size");
  const std::size_t ms = source_.size(), mt = target_.size();
  std::vector<double> out(mt);
  if (toeplitz_) {
    std::vector<double> rev(mass.rbegin(), mass.rend());
    simd::correlate(table_, rev, out);
  } else {
    for (std::size_t a = 0; a < mt; ++a)
      out[a] = simd::dot(std::span<const double>(table_.data() + a * ms, ms), mass);
  }
  return out;
}

std::vector<double> kernel_smooth(const GridDensity& q, const Fn1D& kernel) {
  return kernel_smooth_onto(q, kernel, q.grid());
}

std::vector<double> kernel_smooth_onto(const GridDensity& q, const Fn1D& kernel,
                                       const Grid& target) {
  return KernelConvolution(kernel, q.grid(), target).apply(q.masses());
}

}  // namespace mfcert
