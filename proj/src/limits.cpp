#include "mfcert/limits.hpp"

#include <algorithm>
#include <cmath>

#include "mfcert/certify.hpp"
#include "mfcert/error.hpp"
#include "mfcert/rng.hpp"
#include "mfcert/simd.hpp"

namespace mfcert {
namespace {

Grid limit_grid(const ScalarPotential& v, const LimitOptions& opts) {
  require(v.kappa > 0.0, Errc::NotStronglyConcave, "limit: V must be strongly concave");
  return Grid::centered(v.mode, opts.window_sd / std::sqrt(v.kappa), opts.grid_points);
}

GridDensity limit_init(const ScalarPotential& v, const Grid& grid, const LimitOptions& opts, std::uint64_t salt) {
  if (!opts.random_init_seed) return density_from_log(grid, v.eval);
  RngStream rng(*opts.random_init_seed, 0x11a1 + salt);
  const double sd = 1.0 / std::sqrt(v.kappa);
  const double m = v.mode + (4.0 * rng.uniform() - 2.0) * sd;
  const double var = (0.5 + 1.5 * rng.uniform()) * sd * sd;
  return gaussian_density(grid, m, var);
}

double sup_gap(const GridDensity& a, const GridDensity& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a.log_pdf(k) - b.log_pdf(k)));
  return worst;
}

std::vector<double> on_grid(const Fn1D& fn, const Grid& grid) {
  std::vector<double> v(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) v[k] = fn(grid.point(k));
  return v;
}

}  // namespace

double scalar_objective(const ScalarPotential& v, const InteractionKernel& k, const GridDensity& q) {
  const KernelConvolution conv(k.eval, q.grid(), q.grid());
  const auto mass = q.masses();
  const double pair = simd::dot(mass, conv.apply(mass));
  return expect(q, on_grid(v.eval, q.grid())) + 0.5 * pair - entropy(q);
}

ScalarLimit scalar_limit(const ScalarPotential& v, const InteractionKernel& k, const LimitOptions& opts) {
  const Grid grid = limit_grid(v, opts);
  const KernelConvolution conv(k.eval, grid, grid);
  const auto vv = on_grid(v.eval, grid);
  GridDensity q = limit_init(v, grid, opts, 0);
  for (int it = 1; it <= opts.max_iter; ++it) {
    auto phi = conv.apply(q.masses());
    for (std::size_t a = 0; a < phi.size(); ++a) phi[a] += vv[a];
    const GridDensity target = normalize(phi, grid);
    const double residual = sup_gap(target, q);
    if (residual < opts.tol) {
      ScalarLimit r{target, scalar_objective(v, k, target), it, residual};
      return r;
    }
    for (std::size_t a = 0; a < phi.size(); ++a) phi[a] = (1.0 - opts.damping) * phi[a] + opts.damping * q.log_pdf(a);
    q = normalize(std::move(phi), grid);
  }
  fail(Errc::NoConvergence, "scalar limit fixed point did not converge");
}

BlockLimit block_limit(const ScalarPotential& v, const InteractionKernel& k, const Matrix& weights,
                       const LimitOptions& opts) {
  const std::size_t m = weights.rows();
  require(m >= 1 && weights.square() && is_symmetric(weights, 1e-12), Errc::InvalidModel,
          "block weights must be a symmetric square matrix");
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      require(weights(a, b) >= 0.0 && std::isfinite(weights(a, b)), Errc::InvalidModel,
              "block weights must be finite and nonnegative");
  const Grid grid = limit_grid(v, opts);
  for (std::size_t s = 0; s <= 2000; ++s) {
    const double u = 2.0 * (grid.hi() - grid.lo()) * (static_cast<double>(s) / 1000.0 - 1.0);
    require(k.eval(u) <= 1e-12, Errc::NotNonpositiveKernel,
            "kernel is positive at u = " + std::to_string(u));
  }

  // Normalise e^V on the grid so the reference measure is a probability.
  const double shift = -normalize(on_grid(v.eval, grid), grid).logZ1();
  auto vv = on_grid(v.eval, grid);
  for (double& x : vv) x += shift;

  const KernelConvolution conv(k.eval, grid, grid);
  std::vector<GridDensity> q;
  for (std::size_t a = 0; a < m; ++a) q.push_back(limit_init(v, grid, opts, a));
  const double inv_m = 1.0 / static_cast<double>(m);

  for (int it = 1; it <= opts.max_iter; ++it) {
    std::vector<std::vector<double>> smoothed(m);
    for (std::size_t b = 0; b < m; ++b) smoothed[b] = conv.apply(q[b].masses());
    std::vector<GridDensity> next, targets;
    double residual = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      std::vector<double> phi = vv;
      for (std::size_t b = 0; b < m; ++b)
        if (weights(a, b) != 0.0) simd::axpy(inv_m * weights(a, b), smoothed[b], phi);
      targets.push_back(normalize(phi, grid));
      residual = std::max(residual, sup_gap(targets.back(), q[a]));
      for (std::size_t x = 0; x < phi.size(); ++x)
        phi[x] = (1.0 - opts.damping) * phi[x] + opts.damping * q[a].log_pdf(x);
      next.push_back(normalize(std::move(phi), grid));
    }
    if (residual < opts.tol) {
      q = std::move(targets);
      BlockLimit r{q, weights, 0.0, shift, q.front(), it, residual};
      double value = 0.0;
      std::vector<std::vector<double>> mass(m);
      for (std::size_t a = 0; a < m; ++a) {
        mass[a] = q[a].masses();
        value += inv_m * (expect(q[a], vv) - entropy(q[a]));
      }
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
          if (weights(a, b) != 0.0)
            value += 0.5 * inv_m * inv_m * weights(a, b) * simd::dot(mass[a], conv.apply(mass[b]));
      r.value = value;
      std::vector<double> mix(grid.size(), 0.0);
      for (std::size_t a = 0; a < m; ++a) {
        const auto pdf = q[a].pdf_values();
        simd::axpy(inv_m, pdf, mix);
      }
      std::vector<double> logmix(mix.size());
      for (std::size_t x = 0; x < mix.size(); ++x) logmix[x] = std::log(mix[x]);
      r.mixture = normalize(std::move(logmix), grid);
      return r;
    }
    q = std::move(next);
  }
  fail(Errc::NoConvergence, "block limit fixed point did not converge");
}

FiniteVsLimit finite_vs_limit(const PairwiseGibbs& model, const ScalarLimit& limit, const SolveOptions& opts) {
  const double dev = model.J.max_row_sum_deviation(1.0);
  require(dev <= 1e-10, Errc::NotDoublyStochastic,
          "coupling rows must sum to one (max deviation " + std::to_string(dev) + ")");
  FiniteVsLimit r;
  r.solve = cavi_solve(model, std::nullopt, opts);
  const double n = static_cast<double>(model.n());
  r.elbo_per_site = elbo(model, r.solve.qstar) / n;
  r.per_site_gap = std::abs(r.elbo_per_site - limit.value);
  r.rf_budget_per_site = trJ2_bound(model, r.solve.qstar) / n;
  return r;
}

}  // namespace mfcert
