#pragma once

// Distributed stochastic control: the values
//   V_orig = (1/n) log ∫ e^{ng} dγ_T,
//   V_dstr = sup over product laws of ∫g dQ - (1/n) H(Q | γ_T),
//   V_det  = sup over Gaussian tilts,
// their gap bounds, and an Euler-Maruyama check of V_dstr driven by the
// per-coordinate Föllmer drifts of Q*.

#include <cstdint>
#include <optional>
#include <vector>

#include "mfcert/certify.hpp"
#include "mfcert/grid1d.hpp"
#include "mfcert/mfsolver.hpp"
#include "mfcert/models.hpp"

namespace mfcert {

struct SdeOptions {
  double dt = 1e-3;
  std::size_t paths = 20000;
  std::uint64_t seed = 0;
  /// Largest tolerated fraction of clipped drift evaluations.
  double clip_budget = 1e-3;
};

struct ControlProblem {
  std::size_t n = 0;
  double T = 1.0;
  /// Concave objective; declared growth c2 must stay below 1/(2T).
  Model g = QuadraticModel{};
  SdeOptions sde;
};

/// Errors: InvalidModel (dimension, horizon, growth gate, concavity).
void validate_problem(const ControlProblem& prob);

/// Point value (lo == hi) by brute quadrature for n <= 4, otherwise the
/// certified interval (1/n)[elbo, logZ_hi].
struct ValueInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool exact = false;
  double mid() const noexcept { return 0.5 * (lo + hi); }
};

ValueInterval value_orig(const ControlProblem& prob, const SolveOptions& opts = {});

struct DstrValue {
  double value = 0.0;
  ProductMeasure qstar;
  SolveResult solve;
  Certificate cert;
};

/// Mean-field solve of ng against γ_T marginals; value is elbo / n.
DstrValue value_dstr(const ControlProblem& prob, const SolveOptions& opts = {});

struct DetValue {
  double value = 0.0;
  std::vector<double> ystar;
  int iterations = 0;
};

DetValue value_det(const ControlProblem& prob, const TiltOptions& opts = {});

struct GapBounds {
  double gap_bound = 0.0;
  double det_gap_bound = 0.0;
};

/// gap_bound = nT² Σ_{i<j} E_{Q*}|∂_ij g|²,
/// det_gap_bound = (nT²/2) Σ_{i,j} E_{N(y*, T)}|∂_ij g|².
GapBounds gap_bounds(const ControlProblem& prob, const ProductMeasure& qstar, std::span<const double> ystar,
                     const CertifyOptions& opts = {});

/// Σ_{i,j} E_{N(y, tI)}|∂_ij g|², diagonal included.
double gaussian_hessian_sq(const Model& g, std::span<const double> y, double t, const CertifyOptions& opts = {});

/// Drift α(t, x) = ∂_x log E[h(x + B_T - B_t)] with h = dq/dγ_T, tabulated on
/// q's grid one time slice at a time. The derivative is taken analytically:
/// α = (E[Z φ] / E[φ] - x) / (T - t) under the heat kernel φ.
class FollmerDrift {
 public:
  /// Errors: InvalidArgument if T <= 0.
  FollmerDrift(const GridDensity& q, double T);

  const Grid& grid() const noexcept { return q_.grid(); }
  double horizon() const noexcept { return T_; }

  /// Drift at every node of the grid at time t. Non-finite entries mark nodes
  /// where the smoothed density underflowed. Errors: TimeOutOfRange.
  std::vector<double> slice(double t) const;

  /// Linear interpolation of a slice; nullopt outside the grid or on an
  /// underflowed cell.
  std::optional<double> interpolate(std::span<const double> slice, double x) const;

 private:
  GridDensity q_;
  double T_;
  std::vector<double> a_, az_;
};

/// Single evaluation. Errors: TimeOutOfRange unless 0 <= t < T, OutOfRange
/// if x is off the grid.
double follmer_drift(const GridDensity& q, double T, double t, double x);

struct SimResult {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t drift_evals = 0;
  std::size_t clip_events = 0;
  double clip_limit = 0.0;
  /// Per coordinate: mean and variance of X_T, empirical W2 of X_T against
  /// q*_i, and the W2 between two independent exact samples of q*_i.
  std::vector<double> terminal_mean, terminal_var, terminal_w2, w2_floor;
};

/// Euler-Maruyama from X_0 = 0 with drift α_i from q*_i. Monte Carlo
/// estimate of E[g(X_T) - (1/2n) Σ ∫|α_i|² dt]. Errors: InvalidArgument
/// (dt > T/100 or paths < 1000), ClipBudgetExceeded.
SimResult simulate(const ControlProblem& prob, const ProductMeasure& qstar, const SdeOptions& sde);

struct ControlReport {
  ValueInterval v_orig;
  double v_dstr = 0.0;
  double v_det = 0.0;
  std::vector<double> ystar;
  GapBounds bounds;
  std::optional<SimResult> sim;
  /// Ordering checks with tolerance 1e-5 (interval arithmetic for v_orig).
  bool dstr_le_orig = false;
  bool orig_gap_ok = false;
  bool det_gap_ok = false;
  /// v_det <= v_dstr is reported, never enforced.
  bool det_le_dstr = false;
  ProductMeasure qstar;
};

struct ControlOptions {
  SolveOptions solve;
  TiltOptions tilt;
  CertifyOptions certify;
  bool simulate = true;
};

ControlReport run_control(const ControlProblem& prob, const ControlOptions& opts = {});

}  // namespace mfcert
