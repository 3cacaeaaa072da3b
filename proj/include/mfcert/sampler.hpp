#pragma once

// Samplers used to probe the probabilistic statements: MALA/ULA on P,
// exact draws from product measures and Gaussians, sorted-coupling W2, and
// the law-of-large-numbers check for 1-Lipschitz test functions.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfcert/grid1d.hpp"
#include "mfcert/linalg.hpp"
#include "mfcert/models.hpp"

namespace mfcert {

struct Certificate;

struct ChainOptions {
  std::size_t steps = 20000;
  std::size_t burnin = 2000;
  /// Unset means tune during burn-in toward acceptance 0.574.
  std::optional<double> step_size;
  std::size_t n_chains = 4;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  bool mala = true;
};

enum class SampleSource { Mala, Ula, GaussianExact, ProductExact };
std::string source_name(SampleSource s);

struct SampleSet {
  std::size_t n = 0;
  std::vector<double> draws;  // row-major, n_draws x n
  SampleSource source = SampleSource::ProductExact;
  double acceptance = 1.0;
  double step_size = 0.0;
  std::vector<double> ess;

  std::size_t n_draws() const noexcept { return n ? draws.size() / n : 0; }
  std::span<const double> row(std::size_t k) const { return {draws.data() + k * n, n}; }
  std::vector<double> column(std::size_t i) const;
};

/// Errors: NotStronglyConcave, DivergentChain, InvalidArgument.
SampleSet sample_p(const Model& model, const ChainOptions& opts);

/// Coordinate j of draw s is quantile(q_j, u(seed, stream, s, j)).
std::vector<double> product_draws(const ProductMeasure& q, std::size_t count, std::uint64_t seed,
                                  std::uint64_t stream = 0);
SampleSet sample_q(const ProductMeasure& q, std::size_t n_draws, std::uint64_t seed);

/// Exact draws from N(mean, A^{-1}). Errors: NotSPD.
SampleSet sample_gaussian(const Matrix& precision, std::span<const double> mean, std::size_t n_draws,
                          std::uint64_t seed);

/// Errors: LengthMismatch (sizes differ or fewer than two points).
double empirical_w2(std::span<const double> a, std::span<const double> b);

/// Effective sample size of one series by batch means.
double batch_means_ess(std::span<const double> x, std::size_t batches = 32);
/// Standard error of the mean of a series by batch means.
double batch_means_stderr(std::span<const double> x, std::size_t batches = 32);

/// Largest gap between the empirical CDF of x and the CDF of q.
double ks_statistic(std::span<const double> x, const GridDensity& q);

enum class Phi { Identity, Abs, Tanh };
Phi parse_phi(const std::string& name);
double apply_phi(Phi phi, double x);

struct LlnCheck {
  double lhs_estimate = 0.0;
  double lhs_stderr = 0.0;
  double rhs = 0.0;
  double rbar = 0.0;
};

/// Monte Carlo estimate of E_P[((1/n) Σ φ(X_i) - (1/n) Σ E_{q_i} φ)²] against
/// (1 + √(2 R̄))² / (κ n).
LlnCheck lln_check(const Model& model, const ProductMeasure& q, const Certificate& cert, Phi phi,
                   const ChainOptions& opts);

/// "MFCSAMP1", uint64 n_draws, uint64 n, row-major little-endian float64.
void write_samples(const std::string& path, const SampleSet& s);
SampleSet read_samples(const std::string& path);

}  // namespace mfcert
