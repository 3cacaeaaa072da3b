#pragma once

// Mean-field lower bound on log Z and the two certified upper bounds on the
// mean-field error R_f:
//   var_bound   = (1/2κ) Σ_i E Var(∂_i f | X_i)
//   cross_bound = (1/κ²) Σ_{i<j} E |∂_ij f|²
// both evaluated under the product measure Q.

#include <cstdint>
#include <optional>
#include <string>

#include "mfcert/mfsolver.hpp"
#include "mfcert/models.hpp"

namespace mfcert {

/// Quadrature-mode values carry stderr = 0; black-box values are Monte Carlo.
struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

struct CertifyOptions {
  std::size_t mc_samples = 20000;
  std::uint64_t seed = 0;
  /// Width of the Monte Carlo inflation, in standard errors.
  double mc_sigmas = 3.0;
};

/// ∫f dQ - H(Q), with f = g + Σ log rho_i when a reference is given.
Estimate elbo_estimate(const Model& model, const ProductMeasure& q, const CertifyOptions& opts = {},
                       const Reference* ref = nullptr);
double elbo(const Model& model, const ProductMeasure& q, const Reference* ref = nullptr);

/// kappa used by the bounds: kappa_of(f), or kappa_rho plus the concavity of
/// g in reference mode.
double certificate_kappa(const Model& model, const Reference* ref = nullptr);

Estimate var_bound(const Model& model, const ProductMeasure& q, double kappa, const CertifyOptions& opts = {});
Estimate cross_bound(const Model& model, const ProductMeasure& q, double kappa, const CertifyOptions& opts = {});

/// Σ_{i<j} E_Q |∂_ij f|² (the cross bound without the 1/κ² factor).
Estimate sum_cross_sq(const Model& model, const ProductMeasure& q, const CertifyOptions& opts = {});

/// Tr(J²) a κ⁻² e^{b²/κ}. Errors: SymmetryGateFailed if the marginal means
/// differ by more than `gate_tol`.
double trJ2_bound(const PairwiseGibbs& model, const ProductMeasure& q, double gate_tol = 1e-6);

struct Certificate {
  double elbo = 0.0;
  double elbo_stderr = 0.0;
  double var_bound = 0.0;
  double var_stderr = 0.0;
  double cross_bound = 0.0;
  double cross_stderr = 0.0;
  std::optional<double> trJ2_bound;
  /// "certified", "gate_failed" or "not_applicable".
  std::string trJ2_status = "not_applicable";
  double logZ_lo = 0.0;
  double logZ_hi = 0.0;
  /// Which bound set logZ_hi: "var_bound", "cross_bound" or "trJ2_bound".
  std::string bound_source;
  double kappa = 0.0;
  std::size_t n = 0;
  bool monte_carlo = false;
  SolveMode mode = SolveMode::Lebesgue;

  /// Certified upper bound on R_f: logZ_hi - elbo.
  double rbar = 0.0;
};

Certificate certify(const Model& model, const ProductMeasure& q, const CertifyOptions& opts = {},
                    const Reference* ref = nullptr);

struct ConcentrationReport {
  double rbar = 0.0;
  double lln_rhs = 0.0;
  std::size_t k = 1;
  double w2_budget = 0.0;
  std::optional<double> bayes_lln_rhs;
};

/// Errors: InvalidArgument unless 1 <= k <= n.
ConcentrationReport concentration(const Model& model, const Certificate& cert, std::size_t k = 1);

/// σ²(κ1σ² + κ2 + √(2 Σ_{i<j} J_ij²))² / (p (κ1σ² + κ2)³).
double bayes_lln_rhs(const BayesLinReg& model);

}  // namespace mfcert
