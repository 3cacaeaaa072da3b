#pragma once

// Large-n limits of the mean-field problem: the scalar fixed point for
// doubly stochastic couplings and the block (step graphon) fixed point.

#include <cstdint>
#include <optional>
#include <vector>

#include "mfcert/grid1d.hpp"
#include "mfcert/linalg.hpp"
#include "mfcert/mfsolver.hpp"
#include "mfcert/models.hpp"

namespace mfcert {

struct LimitOptions {
  double damping = 0.5;
  double tol = 1e-9;
  int max_iter = 100000;
  std::size_t grid_points = 1025;
  double window_sd = 12.0;
  /// Start from a seeded random Gaussian instead of e^V.
  std::optional<std::uint64_t> random_init_seed;
};

struct ScalarLimit {
  GridDensity q;
  /// sup_Q ∫V dQ + ½∬K(x-y) Q(dx)Q(dy) - H(Q).
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

/// Objective above evaluated at q.
double scalar_objective(const ScalarPotential& v, const InteractionKernel& k, const GridDensity& q);

/// Errors: NoConvergence.
ScalarLimit scalar_limit(const ScalarPotential& v, const InteractionKernel& k, const LimitOptions& opts = {});

struct BlockLimit {
  std::vector<GridDensity> blocks;
  Matrix weights;
  /// Step-graphon objective with V shifted so that ∫e^V = 1.
  double value = 0.0;
  /// The shift: V_used = V + v_shift.
  double v_shift = 0.0;
  GridDensity mixture;
  int iterations = 0;
  double residual = 0.0;
};

/// Errors: InvalidModel (weights not symmetric nonnegative),
/// NotNonpositiveKernel, NoConvergence.
BlockLimit block_limit(const ScalarPotential& v, const InteractionKernel& k, const Matrix& weights,
                       const LimitOptions& opts = {});

struct FiniteVsLimit {
  double elbo_per_site = 0.0;
  double per_site_gap = 0.0;
  double rf_budget_per_site = 0.0;
  SolveResult solve;
};

/// Errors: NotDoublyStochastic if a row of J does not sum to 1 within 1e-10.
FiniteVsLimit finite_vs_limit(const PairwiseGibbs& model, const ScalarLimit& limit, const SolveOptions& opts = {});

}  // namespace mfcert
