#include "mfcert/mfsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "mfcert/certify.hpp"
#include "mfcert/error.hpp"
#include "mfcert/parallel.hpp"
#include "mfcert/rng.hpp"
#include "mfcert/sampler.hpp"
#include "mfcert/simd.hpp"

namespace mfcert {
namespace {

bool shared_grid(const ProductMeasure& q) {
  for (const auto& d : q)
    if (!(d.grid() == q.front().grid())) return false;
  return true;
}

std::vector<double> log_reference_on(const Reference& ref, std::size_t i, const Grid& grid) {
  const GridDensity& rho = ref.rho.at(i);
  std::vector<double> out(grid.size());
  if (rho.grid() == grid) {
    for (std::size_t k = 0; k < grid.size(); ++k) out[k] = rho.log_pdf(k);
  } else {
    for (std::size_t k = 0; k < grid.size(); ++k) out[k] = rho.log_pdf_at(grid.point(k));
  }
  return out;
}

// Computes conditional exponents; holds the kernel operator for pairwise
// models on a shared grid so it is tabulated once per solve.
class Conditioner {
 public:
  Conditioner(const Model& model, const SolveOptions& opts, const Reference* ref)
      : model_(model), opts_(opts), ref_(ref) {}

  std::vector<double> operator()(const ProductMeasure& q, std::size_t i) {
    const Grid& grid = q[i].grid();
    std::vector<double> phi = std::visit([&](const auto& m) { return exponent(m, q, i); }, model_);
    if (ref_) {
      const auto lr = log_reference_on(*ref_, i, grid);
      for (std::size_t k = 0; k < phi.size(); ++k) phi[k] += lr[k];
    }
    return phi;
  }

 private:
  std::vector<double> exponent(const PairwiseGibbs& p, const ProductMeasure& q, std::size_t i) {
    const Grid& grid = q[i].grid();
    std::vector<double> phi(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) phi[k] = p.V.eval(grid.point(k));
    const auto& nb = p.J.neighbors(i);
    if (nb.empty()) return phi;
    if (shared_grid(q)) {
      // Linearity: sum_j J_ij (K * q_j) = K * (sum_j J_ij q_j).
      std::vector<double> mix(grid.size(), 0.0);
      for (const auto& e : nb) simd::axpy(e.weight, q[e.j].masses(), mix);
      if (!conv_ || !(conv_->source() == grid)) conv_ = std::make_unique<KernelConvolution>(p.K.eval, grid, grid);
      const auto c = conv_->apply(mix);
      for (std::size_t k = 0; k < grid.size(); ++k) phi[k] += c[k];
    } else {
      for (const auto& e : nb) {
        const auto c = kernel_smooth_onto(q[e.j], p.K.eval, grid);
        for (std::size_t k = 0; k < grid.size(); ++k) phi[k] += e.weight * c[k];
      }
    }
    return phi;
  }

  std::vector<double> exponent(const QuadraticModel& m, const ProductMeasure& q, std::size_t i) {
    double lin = m.b.empty() ? 0.0 : m.b[i];
    for (std::size_t j = 0; j < q.size(); ++j)
      if (j != i && m.A(i, j) != 0.0) lin -= m.A(i, j) * mean(q[j]);
    const Grid& grid = q[i].grid();
    std::vector<double> phi(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double x = grid.point(k);
      phi[k] = -0.5 * m.A(i, i) * x * x + lin * x;
    }
    return phi;
  }

  std::vector<double> exponent(const BayesLinReg& b, const ProductMeasure& q, std::size_t i) {
    double s = -b.xty[i];
    for (std::size_t j = 0; j < q.size(); ++j)
      if (j != i && b.gram(i, j) != 0.0) s += b.gram(i, j) * mean(q[j]);
    const Grid& grid = q[i].grid();
    std::vector<double> phi(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double x = grid.point(k);
      phi[k] = b.prior.eval(x) - (b.gram(i, i) * x * x + 2.0 * x * s) / (2.0 * b.sigma2);
    }
    return phi;
  }

  std::vector<double> exponent(const BlackBox& bb, const ProductMeasure& q, std::size_t i) {
    // The uniforms behind the draws are fixed per coordinate, so the
    // exponent is a smooth deterministic function of x and of the other
    // marginals.
    const std::size_t n = q.size(), s = std::max<std::size_t>(opts_.mc_samples, 1);
    const auto draws = product_draws(q, s, opts_.seed, 0x100 + i);
    const Grid& grid = q[i].grid();
    std::vector<double> phi(grid.size());
    parallel_for(grid.size(), [&](std::size_t k) {
      std::vector<double> x(n);
      double acc = 0.0;
      for (std::size_t r = 0; r < s; ++r) {
        std::copy(draws.begin() + r * n, draws.begin() + (r + 1) * n, x.begin());
        x[i] = grid.point(k);
        acc += bb.f(x);
      }
      phi[k] = acc / static_cast<double>(s);
    });
    for (double v : phi) require(std::isfinite(v), Errc::NonFinite, "black box conditional is not finite");
    return phi;
  }

  const Model& model_;
  SolveOptions opts_;
  const Reference* ref_;
  std::unique_ptr<KernelConvolution> conv_;
};

double local_objective(const GridDensity& q, std::span<const double> phi) {
  return expect(q, phi) - entropy(q);
}

double sup_log_gap(const GridDensity& a, const GridDensity& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a.log_pdf(k) - b.log_pdf(k)));
  return worst;
}

GridDensity damped_update(std::vector<double> phi, const GridDensity& old, double damping) {
  if (damping > 0.0)
    for (std::size_t k = 0; k < phi.size(); ++k) phi[k] = (1.0 - damping) * phi[k] + damping * old.log_pdf(k);
  return normalize(std::move(phi), old.grid());
}

double current_elbo(const Model& model, const ProductMeasure& q, const SolveOptions& opts,
                    const Reference* ref) {
  CertifyOptions co;
  co.mc_samples = opts.mc_samples;
  co.seed = opts.seed;
  return elbo_estimate(model, q, co, ref).value;
}

SolveResult run_cavi(const Model& model, ProductMeasure q, const SolveOptions& opts, const Reference* ref) {
  require(opts.tol_logdensity > 0.0 && opts.tol_elbo > 0.0, Errc::InvalidArgument, "tolerances must be positive");
  require(opts.damping >= 0.0 && opts.damping < 1.0, Errc::InvalidArgument, "damping must lie in [0, 1)");
  require(q.size() == dimension(model), Errc::LengthMismatch, "initial product measure has the wrong dimension");
  const std::size_t n = q.size();
  Conditioner cond(model, opts, ref);
  SolveResult res;
  res.mode = ref ? SolveMode::Reference : SolveMode::Lebesgue;
  res.elbo_trace.push_back(current_elbo(model, q, opts, ref));

  bool converged = false;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double residual = 0.0, gain = 0.0;
    if (opts.schedule == Schedule::GaussSeidel) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto phi = cond(q, i);
        GridDensity next = damped_update(phi, q[i], opts.damping);
        const double delta = local_objective(next, phi) - local_objective(q[i], phi);
        residual = std::max(residual, sup_log_gap(next, q[i]));
        gain += delta;
        res.elbo_trace.push_back(res.elbo_trace.back() + delta);
        q[i] = std::move(next);
      }
    } else {
      ProductMeasure next = q;
      for (std::size_t i = 0; i < n; ++i) {
        next[i] = damped_update(cond(q, i), q[i], opts.damping);
        residual = std::max(residual, sup_log_gap(next[i], q[i]));
      }
      q = std::move(next);
      const double e = current_elbo(model, q, opts, ref);
      gain = e - res.elbo_trace.back();
      res.elbo_trace.push_back(e);
    }
    res.sweeps_used = sweep;
    res.residual = residual;
    if (residual < opts.tol_logdensity && gain < opts.tol_elbo) {
      converged = true;
      break;
    }
  }
  if (!converged && res.residual > 1e3 * opts.tol_logdensity)
    fail(Errc::NoConvergence, "CAVI did not converge in " + std::to_string(opts.max_sweeps) +
                                  " sweeps (residual " + std::to_string(res.residual) + ")");
  res.qstar = std::move(q);
  return res;
}

bool any_truncated(const ProductMeasure& q) {
  return std::any_of(q.begin(), q.end(), [](const GridDensity& d) { return d.truncated(); });
}

}  // namespace

Reference gaussian_reference(std::size_t n, double t, std::size_t m, double window_sd) {
  require(t > 0.0, Errc::InvalidArgument, "gaussian_reference: t must be positive");
  const Grid grid = Grid::centered(0.0, window_sd * std::sqrt(t), m);
  return Reference{ProductMeasure(n, gaussian_density(grid, 0.0, t)), 1.0 / t};
}

double log_concavity(const GridDensity& q) {
  const double h = q.grid().spacing();
  double kappa = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k + 1 < q.size(); ++k) {
    const double d2 = (q.log_pdf(k + 1) - 2.0 * q.log_pdf(k) + q.log_pdf(k - 1)) / (h * h);
    kappa = std::min(kappa, -d2);
  }
  return kappa;
}

std::vector<double> conditional_logdensity(const Model& model, const ProductMeasure& q, std::size_t i,
                                           const SolveOptions& opts, const Reference* ref) {
  require(q.size() == dimension(model) && i < q.size(), Errc::LengthMismatch,
          "conditional_logdensity: bad coordinate");
  Conditioner cond(model, opts, ref);
  return cond(q, i);
}

std::vector<Grid> default_grids(const Model& model, const SolveOptions& opts) {
  const double kappa = kappa_of(model);
  const double hw = opts.window_sd / std::sqrt(kappa);
  const auto mode = find_mode(model);
  if (std::holds_alternative<PairwiseGibbs>(model)) {
    const auto [lo, hi] = std::minmax_element(mode.begin(), mode.end());
    const double c = 0.5 * (*lo + *hi);
    return std::vector<Grid>(mode.size(), Grid::centered(c, hw + 0.5 * (*hi - *lo), opts.grid_points));
  }
  std::vector<Grid> grids;
  for (double c : mode) grids.push_back(Grid::centered(c, hw, opts.grid_points));
  return grids;
}

ProductMeasure default_init(const Model& model, const std::vector<Grid>& grids) {
  ProductMeasure q;
  if (const auto* p = std::get_if<PairwiseGibbs>(&model)) {
    for (const auto& g : grids) q.push_back(density_from_log(g, p->V.eval));
  } else if (const auto* b = std::get_if<BayesLinReg>(&model)) {
    for (const auto& g : grids) q.push_back(density_from_log(g, b->prior.eval));
  } else {
    const double var = 1.0 / std::max(concavity_of(model), 1e-12);
    for (const auto& g : grids) q.push_back(gaussian_density(g, g.center(), var));
  }
  return q;
}

ProductMeasure random_init(const std::vector<Grid>& grids, double kappa, std::uint64_t seed) {
  RngStream rng(seed, 0x1417);
  ProductMeasure q;
  const double sd = 1.0 / std::sqrt(kappa);
  for (const auto& g : grids) {
    const double m = g.center() + (4.0 * rng.uniform() - 2.0) * sd;
    const double var = (0.5 + 1.5 * rng.uniform()) * sd * sd;
    q.push_back(gaussian_density(g, m, var));
  }
  return q;
}

SolveResult cavi_solve(const Model& model, const std::optional<ProductMeasure>& init, const SolveOptions& opts) {
  kappa_of(model);
  ProductMeasure q = init ? *init : default_init(model, default_grids(model, opts));
  for (int expansion = 0;; ++expansion) {
    SolveResult res = run_cavi(model, std::move(q), opts, nullptr);
    res.window_expansions = expansion;
    if (!any_truncated(res.qstar)) return res;
    require(expansion < opts.max_expansions, Errc::GridOverflow,
            "marginals still reach the window edge after " + std::to_string(expansion) + " expansions");
    // Double every window around the current means and restart.
    std::vector<Grid> grids;
    const bool shared = shared_grid(res.qstar);
    double centre = 0.0;
    for (const auto& d : res.qstar) centre += mean(d) / static_cast<double>(res.qstar.size());
    for (const auto& d : res.qstar)
      grids.push_back(Grid::centered(shared ? centre : mean(d), 2.0 * d.grid().halfwidth(), d.size()));
    q = default_init(model, grids);
  }
}

SolveResult cavi_solve_ref(const Model& g, const Reference& ref, const std::optional<ProductMeasure>& init,
                           const SolveOptions& opts) {
  require(ref.rho.size() == dimension(g), Errc::LengthMismatch, "reference has the wrong dimension");
  require(ref.kappa > 0.0, Errc::NotStronglyConcave, "reference measure must be strongly log-concave");
  require(concavity_of(g) >= 0.0, Errc::InvalidModel, "g must be concave");
  ProductMeasure q = init ? *init : ref.rho;
  SolveResult res = run_cavi(g, std::move(q), opts, &ref);
  require(!any_truncated(res.qstar), Errc::GridOverflow, "reference-mode marginals reach the reference window edge");
  return res;
}

double fixed_point_residual(const Model& model, const ProductMeasure& q, const SolveOptions& opts,
                            const Reference* ref) {
  Conditioner cond(model, opts, ref);
  double worst = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    worst = std::max(worst, sup_log_gap(normalize(cond(q, i), q[i].grid()), q[i]));
  return worst;
}

namespace {

double gh_expect(const Fn1D& fn, double mean, double var, std::size_t order) {
  const auto& rule = gauss_hermite(order);
  const double sd = std::sqrt(var);
  double s = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) s += rule.weights[k] * fn(mean + sd * rule.nodes[k]);
  return s;
}

std::vector<double> standard_normals(std::size_t count, std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> z(count * n);
  for (std::size_t s = 0; s < count; ++s)
    for (std::size_t j = 0; j < n; ++j) z[s * n + j] = rng.normal(0x7117, s, j);
  return z;
}

}  // namespace

double gaussian_mean_f(const Model& model, std::span<const double> y, double t, const TiltOptions& opts) {
  const std::size_t n = dimension(model);
  require(y.size() == n, Errc::LengthMismatch, "gaussian_mean_f: dimension");
  const std::size_t order = opts.gh_order;
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PairwiseGibbs>) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) s += gh_expect(m.V.eval, y[i], t, order);
          for (auto [i, j] : m.J.edges()) s += m.J(i, j) * gh_expect(m.K.eval, y[i] - y[j], 2.0 * t, order);
          return s;
        } else if constexpr (std::is_same_v<T, QuadraticModel>) {
          const auto ay = m.A.apply(y);
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            s += -0.5 * (y[i] * ay[i] + t * m.A(i, i)) + (m.b.empty() ? 0.0 : m.b[i] * y[i]);
          return s;
        } else if constexpr (std::is_same_v<T, BayesLinReg>) {
          const auto gy = m.gram.apply(y);
          double s = 0.0, quad = 0.0, lin = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            s += gh_expect(m.prior.eval, y[i], t, order);
            quad += y[i] * gy[i] + t * m.gram(i, i);
            lin += y[i] * m.xty[i];
          }
          return s - (quad - 2.0 * lin + m.yty) / (2.0 * m.sigma2);
        } else {
          const auto z = standard_normals(opts.mc_samples, n, opts.seed);
          std::vector<double> x(n);
          double s = 0.0;
          for (std::size_t r = 0; r < opts.mc_samples; ++r) {
            for (std::size_t i = 0; i < n; ++i) x[i] = y[i] + std::sqrt(t) * z[r * n + i];
            s += m.f(x);
          }
          return s / static_cast<double>(opts.mc_samples);
        }
      },
      model);
}

std::vector<double> gaussian_mean_grad(const Model& model, std::span<const double> y, double t,
                                       const TiltOptions& opts) {
  const std::size_t n = dimension(model);
  require(y.size() == n, Errc::LengthMismatch, "gaussian_mean_grad: dimension");
  const std::size_t order = opts.gh_order;
  std::vector<double> g(n, 0.0);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PairwiseGibbs>) {
          for (std::size_t i = 0; i < n; ++i) {
            g[i] = gh_expect(m.V.d1, y[i], t, order);
            for (const auto& e : m.J.neighbors(i)) g[i] += e.weight * gh_expect(m.K.d1, y[i] - y[e.j], 2.0 * t, order);
          }
        } else if constexpr (std::is_same_v<T, QuadraticModel>) {
          const auto ay = m.A.apply(y);
          for (std::size_t i = 0; i < n; ++i) g[i] = (m.b.empty() ? 0.0 : m.b[i]) - ay[i];
        } else if constexpr (std::is_same_v<T, BayesLinReg>) {
          const auto gy = m.gram.apply(y);
          for (std::size_t i = 0; i < n; ++i)
            g[i] = gh_expect(m.prior.d1, y[i], t, order) - (gy[i] - m.xty[i]) / m.sigma2;
        } else {
          const auto z = standard_normals(opts.mc_samples, n, opts.seed);
          std::vector<double> x(n);
          for (std::size_t r = 0; r < opts.mc_samples; ++r) {
            for (std::size_t i = 0; i < n; ++i) x[i] = y[i] + std::sqrt(t) * z[r * n + i];
            for (std::size_t i = 0; i < n; ++i) g[i] += m.grad(x, i);
          }
          for (double& v : g) v /= static_cast<double>(opts.mc_samples);
        }
      },
      model);
  return g;
}

TiltResult tilt_solve(const Model& model, double t, const TiltOptions& opts) {
  require(t > 0.0, Errc::InvalidArgument, "tilt_solve: t must be positive");
  require(opts.lambda > 0.0 && opts.lambda <= 1.0, Errc::InvalidArgument, "tilt_solve: lambda must lie in (0, 1]");
  const std::size_t n = dimension(model);
  double lambda = opts.lambda;
  for (int attempt = 0; attempt < 40; ++attempt, lambda *= 0.5) {
    std::vector<double> y(n, 0.0);
    double prev = std::numeric_limits<double>::infinity();
    int growing = 0;
    for (int it = 1; it <= opts.max_iter; ++it) {
      const auto g = gaussian_mean_grad(model, y, t, opts);
      double step = 0.0;
      bool finite = true;
      for (std::size_t i = 0; i < n; ++i) {
        const double next = (1.0 - lambda) * y[i] + lambda * t * g[i];
        finite = finite && std::isfinite(next);
        step = std::max(step, std::abs(next - y[i]));
        y[i] = next;
      }
      if (!finite || step > 1e12) break;
      growing = step > prev ? growing + 1 : 0;
      if (growing > 50) break;
      prev = step;
      if (step < opts.tol) {
        TiltResult res;
        double y2 = 0.0;
        for (double v : y) y2 += v * v;
        res.value = gaussian_mean_f(model, y, t, opts) - y2 / (2.0 * t);
        res.ystar = std::move(y);
        res.iterations = it;
        res.lambda_used = lambda;
        return res;
      }
    }
  }
  fail(Errc::NoConvergence, "Gaussian tilt iteration did not converge");
}

}  // namespace mfcert
