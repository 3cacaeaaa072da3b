#pragma once

// Coordinate ascent on the mean-field fixed point
//   q_i(x) ∝ exp(E_Q[f(X) | X_i = x]),
// in Lebesgue form and against a product reference measure, plus the
// Gaussian-tilt fixed point y = t E_{N(y, tI)}[∇f].

#include <cstdint>
#include <optional>
#include <vector>

#include "mfcert/grid1d.hpp"
#include "mfcert/models.hpp"

namespace mfcert {

/// Product reference measure rho for the reference-measure form
/// f = g + sum_i log rho_i. kappa is the log-concavity of rho.
struct Reference {
  ProductMeasure rho;
  double kappa = 0.0;
};

/// Reference made of n copies of N(0, t) on [-window_sd sqrt(t), window_sd sqrt(t)].
Reference gaussian_reference(std::size_t n, double t, std::size_t m = 1025, double window_sd = 12.0);

/// Largest kappa with (log q)'' <= -kappa, from discrete second differences.
double log_concavity(const GridDensity& q);

enum class Schedule { GaussSeidel, Jacobi };
enum class SolveMode { Lebesgue, Reference };

struct SolveOptions {
  int max_sweeps = 500;
  double tol_logdensity = 1e-9;
  double tol_elbo = 1e-12;
  double damping = 0.0;
  std::size_t mc_samples = 20000;
  std::uint64_t seed = 0;
  std::size_t grid_points = 1025;
  double window_sd = 12.0;
  int max_expansions = 3;
  /// Jacobi updates every marginal from the previous sweep; Gauss-Seidel
  /// (the default) is exact coordinate ascent.
  Schedule schedule = Schedule::GaussSeidel;
};

struct SolveResult {
  ProductMeasure qstar;
  int sweeps_used = 0;
  /// ELBO before the first update and after every subsequent coordinate
  /// update (after every sweep under the Jacobi schedule).
  std::vector<double> elbo_trace;
  double residual = 0.0;
  SolveMode mode = SolveMode::Lebesgue;
  int window_expansions = 0;
};

/// x -> E_Q[f | X_i = x] on q[i]'s grid, up to an additive constant. With a
/// reference, log rho_i is added.
std::vector<double> conditional_logdensity(const Model& model, const ProductMeasure& q, std::size_t i,
                                           const SolveOptions& opts = {}, const Reference* ref = nullptr);

/// Default windows: one grid per coordinate centred on the mode of f with
/// half-width window_sd / sqrt(kappa); pairwise models share one grid.
std::vector<Grid> default_grids(const Model& model, const SolveOptions& opts);
ProductMeasure default_init(const Model& model, const std::vector<Grid>& grids);
/// Seeded Gaussian starting point with random means and spreads.
ProductMeasure random_init(const std::vector<Grid>& grids, double kappa, std::uint64_t seed);

/// Errors: NotStronglyConcave, NoConvergence, GridOverflow.
SolveResult cavi_solve(const Model& model, const std::optional<ProductMeasure>& init = std::nullopt,
                       const SolveOptions& opts = {});
/// Same iteration for f = g + sum log rho_i; marginal i lives on rho_i's grid.
SolveResult cavi_solve_ref(const Model& g, const Reference& ref,
                           const std::optional<ProductMeasure>& init = std::nullopt,
                           const SolveOptions& opts = {});

/// Max over coordinates of the sup-norm gap between log q_i and the
/// normalised conditional exponent.
double fixed_point_residual(const Model& model, const ProductMeasure& q, const SolveOptions& opts = {},
                            const Reference* ref = nullptr);

struct TiltOptions {
  double lambda = 0.5;
  double tol = 1e-10;
  int max_iter = 10000;
  std::size_t gh_order = 40;
  std::size_t mc_samples = 20000;
  std::uint64_t seed = 0;
};

struct TiltResult {
  std::vector<double> ystar;
  /// integral of f against N(y*, tI) minus |y*|^2 / (2t).
  double value = 0.0;
  int iterations = 0;
  double lambda_used = 0.0;
};

/// E_{N(y, tI)}[f].
double gaussian_mean_f(const Model& model, std::span<const double> y, double t, const TiltOptions& opts = {});
/// E_{N(y, tI)}[∂_i f] for every i.
std::vector<double> gaussian_mean_grad(const Model& model, std::span<const double> y, double t,
                                       const TiltOptions& opts = {});

/// Errors: NoConvergence.
TiltResult tilt_solve(const Model& model, double t, const TiltOptions& opts = {});

}  // namespace mfcert
