#pragma once

// Ground truth for small problems: Gaussian closed forms and tensor-grid
// brute force for n <= 4.

#include <cstddef>
#include <vector>

#include "mfcert/grid1d.hpp"
#include "mfcert/linalg.hpp"
#include "mfcert/models.hpp"

namespace mfcert {

/// Target exp(-x^T A x / 2).
struct GaussianTruth {
  Matrix A;
  double logZ = 0.0;
  double log_det = 0.0;
  /// ½ log(Π A_ii / det A): log Z minus the mean-field optimum.
  double rf_exact = 0.0;
  std::vector<double> qstar_vars;     // 1 / A_ii
  std::vector<double> marginal_vars;  // (A^{-1})_ii
  std::vector<double> pstar_vars;     // product of the marginals of P
};

/// Errors: NotSPD.
GaussianTruth gaussian_truth(const Matrix& a);

struct BruteOptions {
  std::size_t m_start = 33;
  std::size_t m_max = 257;
  double tol = 1e-7;
  double window_sd = 12.0;
};

struct BruteResult {
  double logZ = 0.0;
  std::size_t m_used = 0;
  /// |logZ(m) - logZ(m/2)| at the accepted resolution.
  double refinement_change = 0.0;
  bool converged = false;
};

/// Window per axis: mode_i ± window_sd / sqrt(kappa).
std::vector<Grid> brute_windows(const Model& model, std::size_t m, double window_sd = 12.0);

/// log of the tensor trapezoid sum of e^f on fixed windows. Errors: DimensionTooLarge.
double brute_logZ_on(const Model& model, const std::vector<Grid>& windows);
/// Doubles m from m_start until the change drops below tol. Errors: DimensionTooLarge.
BruteResult brute_logZ(const Model& model, const BruteOptions& opts = {});

/// Marginal of P on coordinate i: m_axis points on axis i, m_other on the
/// rest. Errors: DimensionTooLarge for n > 3.
GridDensity brute_marginal(const Model& model, std::size_t i, std::size_t m_axis = 1025,
                           std::size_t m_other = 129, double window_sd = 12.0);

/// H(Q|P) = ∫ q log(q/p) by tensor trapezoid on every `stride`-th node of
/// Q's grids, p = e^{f - logZ}.
double relative_entropy_qp(const Model& model, const ProductMeasure& q, double logZ, std::size_t stride = 8);

/// H(P|Q) = ∫ p log(p/q) on the same decimated tensor grid.
double relative_entropy_pq(const Model& model, const ProductMeasure& q, double logZ, std::size_t stride = 8);

}  // namespace mfcert
