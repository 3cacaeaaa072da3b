#include "mfcert/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mfcert/error.hpp"
#include "mfcert/oracle.hpp"
#include "mfcert/parallel.hpp"
#include "mfcert/rng.hpp"
#include "mfcert/sampler.hpp"

namespace mfcert {
namespace {

constexpr double kOrderTol = 1e-5;

double declared_c2(const Model& g) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PairwiseGibbs>) {
          return m.V.growth.c2;
        } else if constexpr (std::is_same_v<T, BayesLinReg>) {
          return m.prior.growth.c2;
        } else {
          // Polynomial growth: any positive c2 works.
          return 0.0;
        }
      },
      g);
}

double gh_expect(const Fn1D& fn, double mean, double var) {
  const auto& rule = gauss_hermite(40);
  const double sd = std::sqrt(var);
  double s = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) s += rule.weights[k] * fn(mean + sd * rule.nodes[k]);
  return s;
}

ValueInterval interval_from(const Certificate& cert, std::size_t n) {
  const double dn = static_cast<double>(n);
  return {cert.elbo / dn, cert.logZ_hi / dn, false};
}

}  // namespace

void validate_problem(const ControlProblem& prob) {
  require(prob.n >= 1 && dimension(prob.g) == prob.n, Errc::InvalidModel, "control: g has the wrong dimension");
  require(std::isfinite(prob.T) && prob.T > 0.0, Errc::InvalidModel, "control: horizon T must be positive");
  const double c2 = declared_c2(prob.g);
  require(c2 < 1.0 / (2.0 * prob.T), Errc::InvalidModel,
          "control: growth constant c2 = " + std::to_string(c2) + " must be below 1/(2T)");
  if (const auto* q = std::get_if<QuadraticModel>(&prob.g))
    require(q->A.rows() == 0 || lambda_min(q->A) >= -1e-12, Errc::InvalidModel, "control: g must be concave");
}

DstrValue value_dstr(const ControlProblem& prob, const SolveOptions& opts) {
  validate_problem(prob);
  const Model ng = scale_model(prob.g, static_cast<double>(prob.n));
  const Reference ref = gaussian_reference(prob.n, prob.T, opts.grid_points, opts.window_sd);
  DstrValue r;
  r.solve = cavi_solve_ref(ng, ref, std::nullopt, opts);
  r.qstar = r.solve.qstar;
  CertifyOptions co;
  co.mc_samples = opts.mc_samples;
  co.seed = opts.seed;
  r.cert = certify(ng, r.qstar, co, &ref);
  r.value = r.cert.elbo / static_cast<double>(prob.n);
  return r;
}

ValueInterval value_orig(const ControlProblem& prob, const SolveOptions& opts) {
  validate_problem(prob);
  const double n = static_cast<double>(prob.n);
  if (prob.n > 4) return interval_from(value_dstr(prob, opts).cert, prob.n);
  const Model f = add_gaussian_reference(scale_model(prob.g, n), prob.T);
  const BruteResult b = brute_logZ(f);
  const double v = (b.logZ - 0.5 * n * std::log(2.0 * std::numbers::pi * prob.T)) / n;
  return {v, v, true};
}

DetValue value_det(const ControlProblem& prob, const TiltOptions& opts) {
  validate_problem(prob);
  const TiltResult t = tilt_solve(scale_model(prob.g, static_cast<double>(prob.n)), prob.T, opts);
  return {t.value / static_cast<double>(prob.n), t.ystar, t.iterations};
}

double gaussian_hessian_sq(const Model& g, std::span<const double> y, double t, const CertifyOptions& opts) {
  const std::size_t n = dimension(g);
  require(y.size() == n, Errc::LengthMismatch, "gaussian_hessian_sq: dimension");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, QuadraticModel>) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) s += m.A(i, j) * m.A(i, j);
          return s;
        } else if constexpr (std::is_same_v<T, BayesLinReg>) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j)
              if (i != j) s += m.gram(i, j) * m.gram(i, j) / (m.sigma2 * m.sigma2);
            const double c = m.gram(i, i) / m.sigma2;
            const Fn1D& v2 = m.prior.d2;
            s += gh_expect([&](double x) { const double d = v2(x) - c; return d * d; }, y[i], t);
          }
          return s;
        } else if constexpr (std::is_same_v<T, PairwiseGibbs>) {
          const Fn1D& k2 = m.K.d2;
          const Fn1D& v2 = m.V.d2;
          double s = 0.0;
          for (auto [i, j] : m.J.edges()) {
            const double w = m.J(i, j);
            s += 2.0 * w * w * gh_expect([&](double u) { const double d = k2(u); return d * d; }, y[i] - y[j], 2.0 * t);
          }
          // Diagonal: given x_i the neighbours are independent, so the square
          // splits into the squared conditional mean plus conditional variances.
          const auto& rule = gauss_hermite(40);
          const double sd = std::sqrt(t);
          for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
              const double x = y[i] + sd * rule.nodes[a];
              double mu = v2(x), var = 0.0;
              for (const auto& e : m.J.neighbors(i)) {
                double m1 = 0.0, m2 = 0.0;
                for (std::size_t b = 0; b < rule.nodes.size(); ++b) {
                  const double d = k2(x - (y[e.j] + sd * rule.nodes[b]));
                  m1 += rule.weights[b] * d;
                  m2 += rule.weights[b] * d * d;
                }
                mu += e.weight * m1;
                var += e.weight * e.weight * std::max(0.0, m2 - m1 * m1);
              }
              acc += rule.weights[a] * (mu * mu + var);
            }
            s += acc;
          }
          return s;
        } else {
          const std::size_t count = std::max<std::size_t>(opts.mc_samples, 2);
          CounterRng rng(opts.seed);
          std::vector<double> x(n);
          double s = 0.0;
          for (std::size_t r = 0; r < count; ++r) {
            for (std::size_t i = 0; i < n; ++i) x[i] = y[i] + std::sqrt(t) * rng.normal(0x4e55, r, i);
            for (std::size_t i = 0; i < n; ++i) {
              const double d = hess_ii(g, x, i);
              s += d * d;
              for (std::size_t j = i + 1; j < n; ++j) {
                const double c = m.cross(x, i, j);
                s += 2.0 * c * c;
              }
            }
          }
          return s / static_cast<double>(count);
        }
      },
      g);
}

GapBounds gap_bounds(const ControlProblem& prob, const ProductMeasure& qstar, std::span<const double> ystar,
                     const CertifyOptions& opts) {
  const double n = static_cast<double>(prob.n);
  const double t2 = prob.T * prob.T;
  GapBounds b;
  const Estimate cross = sum_cross_sq(prob.g, qstar, opts);
  b.gap_bound = n * t2 * (cross.value + opts.mc_sigmas * cross.stderr_);
  b.det_gap_bound = 0.5 * n * t2 * gaussian_hessian_sq(prob.g, ystar, prob.T, opts);
  return b;
}

FollmerDrift::FollmerDrift(const GridDensity& q, double T) : q_(q), T_(T) {
  require(T > 0.0 && std::isfinite(T), Errc::InvalidArgument, "follmer drift: T must be positive");
  const Grid& g = q.grid();
  const std::size_t m = g.size();
  // h = q / γ_T up to a constant, times the trapezoid weight, max-shifted.
  std::vector<double> loga(m);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < m; ++b) {
    const double z = g.point(b);
    loga[b] = std::log(g.weight(b)) + q.log_pdf(b) + z * z / (2.0 * T);
    top = std::max(top, loga[b]);
  }
  a_.resize(m);
  az_.resize(m);
  for (std::size_t b = 0; b < m; ++b) {
    a_[b] = std::exp(loga[b] - top);
    az_[b] = a_[b] * g.point(b);
  }
}

std::vector<double> FollmerDrift::slice(double t) const {
  require(t >= 0.0 && t < T_, Errc::TimeOutOfRange, "follmer drift: t must lie in [0, T)");
  const double s = T_ - t;
  const Grid& g = q_.grid();
  const KernelConvolution heat([s](double u) { return std::exp(-u * u / (2.0 * s)); }, g, g);
  const auto u0 = heat.apply(a_);
  const auto u1 = heat.apply(az_);
  std::vector<double> alpha(g.size());
  for (std::size_t a = 0; a < g.size(); ++a)
    alpha[a] = u0[a] > 1e-280 ? (u1[a] / u0[a] - g.point(a)) / s : std::numeric_limits<double>::quiet_NaN();
  return alpha;
}

std::optional<double> FollmerDrift::interpolate(std::span<const double> slice, double x) const {
  const Grid& g = q_.grid();
  const double pos = (x - g.lo()) / g.spacing();
  if (!(pos >= 0.0) || pos > static_cast<double>(g.size() - 1)) return std::nullopt;
  const std::size_t k = std::min(static_cast<std::size_t>(pos), g.size() - 2);
  const double frac = pos - static_cast<double>(k);
  const double v = (1.0 - frac) * slice[k] + frac * slice[k + 1];
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

double follmer_drift(const GridDensity& q, double T, double t, double x) {
  const FollmerDrift d(q, T);
  const auto s = d.slice(t);
  const auto v = d.interpolate(s, x);
  require(v.has_value(), Errc::OutOfRange, "follmer drift: x is off the grid or in an underflowed tail");
  return *v;
}

SimResult simulate(const ControlProblem& prob, const ProductMeasure& qstar, const SdeOptions& sde) {
  validate_problem(prob);
  const std::size_t n = prob.n;
  require(qstar.size() == n, Errc::LengthMismatch, "simulate: qstar has the wrong dimension");
  require(sde.dt > 0.0 && sde.dt <= prob.T / 100.0 * (1.0 + 1e-12), Errc::InvalidArgument,
          "simulate: dt must lie in (0, T/100]");
  require(sde.paths >= 1000, Errc::InvalidArgument, "simulate: at least 1000 paths required");

  const std::size_t steps = static_cast<std::size_t>(std::llround(prob.T / sde.dt));
  const double dt = prob.T / static_cast<double>(steps);
  const double sq = std::sqrt(dt);
  const double kappa_eff = 1.0 / prob.T + static_cast<double>(n) * concavity_of(prob.g);
  const double clip = 50.0 / std::sqrt(prob.T * kappa_eff);

  std::vector<FollmerDrift> drift;
  std::vector<double> centre(n);
  for (std::size_t i = 0; i < n; ++i) {
    drift.emplace_back(qstar[i], prob.T);
    centre[i] = mean(qstar[i]);
  }

  const std::size_t paths = sde.paths;
  std::vector<double> x(paths * n, 0.0), cost(paths, 0.0);
  constexpr std::size_t kBlock = 256;
  const std::size_t n_blocks = (paths + kBlock - 1) / kBlock;
  std::vector<std::size_t> clips(n_blocks, 0);
  const CounterRng rng(sde.seed);
  std::vector<std::vector<double>> slices(n);

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    parallel_for(n, [&](std::size_t i) { slices[i] = drift[i].slice(t); });
    parallel_for(n_blocks, [&](std::size_t blk) {
      const std::size_t end = std::min(paths, (blk + 1) * kBlock);
      for (std::size_t p = blk * kBlock; p < end; ++p) {
        double* xp = x.data() + p * n;
        for (std::size_t i = 0; i < n; ++i) {
          const auto v = drift[i].interpolate(slices[i], xp[i]);
          double a;
          if (!v) {
            a = std::copysign(clip, centre[i] - xp[i]);
            ++clips[blk];
          } else if (std::abs(*v) > clip) {
            a = std::copysign(clip, *v);
            ++clips[blk];
          } else {
            a = *v;
          }
          cost[p] += a * a * dt;
          xp[i] += a * dt + sq * rng.normal(0xc0de, p, k, i);
        }
      }
    });
  }

  SimResult r;
  r.clip_limit = clip;
  r.drift_evals = paths * steps * n;
  for (std::size_t c : clips) r.clip_events += c;
  require(static_cast<double>(r.clip_events) <= sde.clip_budget * static_cast<double>(r.drift_evals),
          Errc::ClipBudgetExceeded,
          "simulate: " + std::to_string(r.clip_events) + " of " + std::to_string(r.drift_evals) +
              " drift evaluations were clipped");

  std::vector<double> obj(paths);
  parallel_for(paths, [&](std::size_t p) {
    obj[p] = eval_f(prob.g, std::span<const double>(x.data() + p * n, n)) - cost[p] / (2.0 * static_cast<double>(n));
  });
  double s = 0.0;
  for (double v : obj) s += v;
  r.mean = s / static_cast<double>(paths);
  double ss = 0.0;
  for (double v : obj) ss += (v - r.mean) * (v - r.mean);
  r.stderr_ = std::sqrt(ss / static_cast<double>(paths - 1) / static_cast<double>(paths));

  const auto ref_a = product_draws(qstar, paths, sde.seed, 0xb1);
  const auto ref_b = product_draws(qstar, paths, sde.seed, 0xb2);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> col(paths), ca(paths), cb(paths);
    for (std::size_t p = 0; p < paths; ++p) {
      col[p] = x[p * n + i];
      ca[p] = ref_a[p * n + i];
      cb[p] = ref_b[p * n + i];
    }
    double mu = 0.0;
    for (double v : col) mu += v;
    mu /= static_cast<double>(paths);
    double var = 0.0;
    for (double v : col) var += (v - mu) * (v - mu);
    r.terminal_mean.push_back(mu);
    r.terminal_var.push_back(var / static_cast<double>(paths - 1));
    r.terminal_w2.push_back(empirical_w2(col, ca));
    r.w2_floor.push_back(empirical_w2(cb, ca));
  }
  return r;
}

ControlReport run_control(const ControlProblem& prob, const ControlOptions& opts) {
  validate_problem(prob);
  ControlReport r;
  const DstrValue d = value_dstr(prob, opts.solve);
  r.v_dstr = d.value;
  r.qstar = d.qstar;
  r.v_orig = prob.n > 4 ? interval_from(d.cert, prob.n) : value_orig(prob, opts.solve);
  const DetValue det = value_det(prob, opts.tilt);
  r.v_det = det.value;
  r.ystar = det.ystar;
  r.bounds = gap_bounds(prob, d.qstar, det.ystar, opts.certify);
  if (opts.simulate) r.sim = simulate(prob, d.qstar, prob.sde);

  // With a black box the values are Monte Carlo; widen by the certificate's
  // ELBO error.
  const double tol = kOrderTol + opts.certify.mc_sigmas * d.cert.elbo_stderr / static_cast<double>(prob.n);
  r.dstr_le_orig = r.v_dstr <= r.v_orig.hi + tol;
  r.orig_gap_ok = r.v_orig.lo - r.v_dstr <= r.bounds.gap_bound + tol && r.bounds.gap_bound >= 0.0;
  r.det_gap_ok = r.v_det <= r.v_orig.hi + tol && r.v_orig.lo - r.v_det <= r.bounds.det_gap_bound + tol;
  r.det_le_dstr = r.v_det <= r.v_dstr + tol;
  return r;
}

}  // namespace mfcert
