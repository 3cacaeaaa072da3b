#include "mfcert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "mfcert/error.hpp"
#include "mfcert/sampler.hpp"
#include "mfcert/simd.hpp"

namespace mfcert {
namespace {

bool shared_grid(const ProductMeasure& q) {
  for (const auto& d : q)
    if (!(d.grid() == q.front().grid())) return false;
  return true;
}

// (K * q_j) evaluated on the grid of every target marginal that needs it.
class Smoother {
 public:
  Smoother(Fn1D kernel, const ProductMeasure& q) : kernel_(std::move(kernel)), q_(q), shared_(shared_grid(q)) {
    if (shared_) op_ = std::make_unique<KernelConvolution>(kernel_, q.front().grid(), q.front().grid());
  }

  /// x_a -> ∫K(x_a - y) q_j(y) dy on q_i's grid.
  const std::vector<double>& onto(std::size_t j, std::size_t i) {
    if (shared_) {
      auto it = cache_.find(j);
      if (it == cache_.end()) it = cache_.emplace(j, op_->apply(q_[j].masses())).first;
      return it->second;
    }
    scratch_ = kernel_smooth_onto(q_[j], kernel_, q_[i].grid());
    return scratch_;
  }

 private:
  Fn1D kernel_;
  const ProductMeasure& q_;
  bool shared_;
  std::unique_ptr<KernelConvolution> op_;
  std::map<std::size_t, std::vector<double>> cache_;
  std::vector<double> scratch_;
};

double expect_fn(const GridDensity& q, const Fn1D& fn) { return expect(q, fn); }

Estimate mean_and_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  const double m = s / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0};
}

void check_shape(const Model& model, const ProductMeasure& q) {
  require(!q.empty() && q.size() == dimension(model), Errc::LengthMismatch,
          "product measure dimension does not match the model");
}

}  // namespace

Estimate elbo_estimate(const Model& model, const ProductMeasure& q, const CertifyOptions& opts,
                       const Reference* ref) {
  check_shape(model, q);
  const std::size_t n = q.size();
  double h = 0.0;
  for (const auto& d : q) h += entropy(d);

  double ref_term = 0.0;
  if (ref) {
    require(ref->rho.size() == n, Errc::LengthMismatch, "reference has the wrong dimension");
    for (std::size_t i = 0; i < n; ++i) {
      const GridDensity& rho = ref->rho[i];
      const Grid& grid = q[i].grid();
      std::vector<double> lr(grid.size());
      for (std::size_t k = 0; k < grid.size(); ++k)
        lr[k] = rho.grid() == grid ? rho.log_pdf(k) : rho.log_pdf_at(grid.point(k));
      ref_term += expect(q[i], lr);
    }
  }

  Estimate fpart = std::visit(
      [&](const auto& m) -> Estimate {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PairwiseGibbs>) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) s += expect_fn(q[i], m.V.eval);
          if (!m.J.edges().empty()) {
            Smoother sm(m.K.eval, q);
            for (auto [i, j] : m.J.edges()) s += m.J(i, j) * simd::dot(q[i].masses(), sm.onto(j, i));
          }
          return {s, 0.0};
        } else if constexpr (std::is_same_v<T, QuadraticModel>) {
          std::vector<double> mu(n);
          for (std::size_t i = 0; i < n; ++i) mu[i] = mean(q[i]);
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            s += -0.5 * m.A(i, i) * moment(q[i], 2) + (m.b.empty() ? 0.0 : m.b[i] * mu[i]);
            for (std::size_t j = i + 1; j < n; ++j) s -= m.A(i, j) * mu[i] * mu[j];
          }
          return {s, 0.0};
        } else if constexpr (std::is_same_v<T, BayesLinReg>) {
          std::vector<double> mu(n);
          for (std::size_t i = 0; i < n; ++i) mu[i] = mean(q[i]);
          double s = 0.0, quad = 0.0, lin = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            s += expect_fn(q[i], m.prior.eval);
            quad += m.gram(i, i) * moment(q[i], 2);
            for (std::size_t j = i + 1; j < n; ++j) quad += 2.0 * m.gram(i, j) * mu[i] * mu[j];
            lin += m.xty[i] * mu[i];
          }
          return {s - (quad - 2.0 * lin + m.yty) / (2.0 * m.sigma2), 0.0};
        } else {
          const std::size_t count = std::max<std::size_t>(opts.mc_samples, 2);
          const auto draws = product_draws(q, count, opts.seed, 0x200);
          std::vector<double> vals(count);
          for (std::size_t r = 0; r < count; ++r) vals[r] = m.f(std::span<const double>(draws.data() + r * n, n));
          return mean_and_se(vals);
        }
      },
      model);
  return {fpart.value + ref_term - h, fpart.stderr_};
}

double elbo(const Model& model, const ProductMeasure& q, const Reference* ref) {
  return elbo_estimate(model, q, {}, ref).value;
}

double certificate_kappa(const Model& model, const Reference* ref) {
  if (!ref) return kappa_of(model);
  const double k = ref->kappa + std::max(0.0, concavity_of(model));
  require(k > 0.0, Errc::NotStronglyConcave, "reference-mode kappa must be positive");
  return k;
}

Estimate var_bound(const Model& model, const ProductMeasure& q, double kappa, const CertifyOptions& opts) {
  check_shape(model, q);
  require(kappa > 0.0, Errc::NotStronglyConcave, "var_bound: kappa must be positive");
  const std::size_t n = q.size();
  Estimate e = std::visit(
      [&](const auto& m) -> Estimate {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PairwiseGibbs>) {
          if (m.J.edges().empty()) return {0.0, 0.0};
          const Fn1D d1 = m.K.d1;
          Smoother first(d1, q);
          Smoother second([d1](double u) { const double v = d1(u); return v * v; }, q);
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            const auto mass = q[i].masses();
            for (const auto& edge : m.J.neighbors(i)) {
              const auto c1 = first.onto(edge.j, i);
              const auto& c2 = second.onto(edge.j, i);
              double v = 0.0;
              for (std::size_t a = 0; a < mass.size(); ++a) v += mass[a] * std::max(0.0, c2[a] - c1[a] * c1[a]);
              s += edge.weight * edge.weight * v;
            }
          }
          return {s, 0.0};
        } else if constexpr (std::is_same_v<T, QuadraticModel> || std::is_same_v<T, BayesLinReg>) {
          std::vector<double> var(n);
          for (std::size_t j = 0; j < n; ++j) var[j] = variance(q[j]);
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
              if (i == j) continue;
              double c;
              if constexpr (std::is_same_v<T, QuadraticModel>)
                c = m.A(i, j);
              else
                c = m.gram(i, j) / m.sigma2;
              s += c * c * var[j];
            }
          return {s, 0.0};
        } else {
          // E Var(Y | X_i) = E (Y - Y')² / 2 with Y' sharing X_i and an
          // independent copy of the other coordinates.
          const std::size_t count = std::max<std::size_t>(opts.mc_samples, 2);
          const auto a = product_draws(q, count, opts.seed, 0x300);
          const auto b = product_draws(q, count, opts.seed, 0x301);
          std::vector<double> vals(count);
          std::vector<double> x(n), xp(n);
          for (std::size_t r = 0; r < count; ++r) {
            std::copy(a.begin() + r * n, a.begin() + (r + 1) * n, x.begin());
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
              std::copy(b.begin() + r * n, b.begin() + (r + 1) * n, xp.begin());
              xp[i] = x[i];
              const double d = m.grad(x, i) - m.grad(xp, i);
              s += 0.5 * d * d;
            }
            vals[r] = s;
          }
          return mean_and_se(vals);
        }
      },
      model);
  return {e.value / (2.0 * kappa), e.stderr_ / (2.0 * kappa)};
}

Estimate sum_cross_sq(const Model& model, const ProductMeasure& q, const CertifyOptions& opts) {
  check_shape(model, q);
  const std::size_t n = q.size();
  return std::visit(
      [&](const auto& m) -> Estimate {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PairwiseGibbs>) {
          if (m.J.edges().empty()) return {0.0, 0.0};
          const Fn1D d2 = m.K.d2;
          Smoother sm([d2](double u) { const double v = d2(u); return v * v; }, q);
          double s = 0.0;
          for (auto [i, j] : m.J.edges()) s += m.J(i, j) * m.J(i, j) * simd::dot(q[i].masses(), sm.onto(j, i));
          return {s, 0.0};
        } else if constexpr (std::is_same_v<T, QuadraticModel>) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += m.A(i, j) * m.A(i, j);
          return {s, 0.0};
        } else if constexpr (std::is_same_v<T, BayesLinReg>) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += m.gram(i, j) * m.gram(i, j);
          return {s / (m.sigma2 * m.sigma2), 0.0};
        } else {
          const std::size_t count = std::max<std::size_t>(opts.mc_samples, 2);
          const auto draws = product_draws(q, count, opts.seed, 0x400);
          std::vector<double> vals(count);
          for (std::size_t r = 0; r < count; ++r) {
            std::span<const double> x(draws.data() + r * n, n);
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t j = i + 1; j < n; ++j) {
                const double c = m.cross(x, i, j);
                s += c * c;
              }
            vals[r] = s;
          }
          return mean_and_se(vals);
        }
      },
      model);
}

Estimate cross_bound(const Model& model, const ProductMeasure& q, double kappa, const CertifyOptions& opts) {
  require(kappa > 0.0, Errc::NotStronglyConcave, "cross_bound: kappa must be positive");
  const Estimate s = sum_cross_sq(model, q, opts);
  return {s.value / (kappa * kappa), s.stderr_ / (kappa * kappa)};
}

double trJ2_bound(const PairwiseGibbs& model, const ProductMeasure& q, double gate_tol) {
  require(q.size() == model.n(), Errc::LengthMismatch, "trJ2_bound: dimension");
  double lo = mean(q.front()), hi = lo;
  for (const auto& d : q) {
    const double m = mean(d);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  require(hi - lo <= gate_tol, Errc::SymmetryGateFailed,
          "marginal means differ by " + std::to_string(hi - lo) + "; Tr(J^2) bound not certified");
  const double kappa = model.V.kappa;
  const auto& g = model.K.growth;
  return model.J.trace_j2() * g.a / (kappa * kappa) * std::exp(g.b * g.b / kappa);
}

Certificate certify(const Model& model, const ProductMeasure& q, const CertifyOptions& opts, const Reference* ref) {
  Certificate c;
  c.n = q.size();
  c.kappa = certificate_kappa(model, ref);
  c.mode = ref ? SolveMode::Reference : SolveMode::Lebesgue;
  c.monte_carlo = std::holds_alternative<BlackBox>(model);
  const double z = c.monte_carlo ? opts.mc_sigmas : 0.0;

  const Estimate e = elbo_estimate(model, q, opts, ref);
  const Estimate v = var_bound(model, q, c.kappa, opts);
  const Estimate x = cross_bound(model, q, c.kappa, opts);
  c.elbo = e.value;
  c.elbo_stderr = e.stderr_;
  c.var_bound = std::max(0.0, v.value + z * v.stderr_);
  c.var_stderr = v.stderr_;
  c.cross_bound = std::max(0.0, x.value + z * x.stderr_);
  c.cross_stderr = x.stderr_;

  c.rbar = c.var_bound;
  c.bound_source = "var_bound";
  if (c.cross_bound < c.rbar) {
    c.rbar = c.cross_bound;
    c.bound_source = "cross_bound";
  }
  if (const auto* p = std::get_if<PairwiseGibbs>(&model); p && !ref) {
    try {
      c.trJ2_bound = trJ2_bound(*p, q);
      c.trJ2_status = "certified";
      if (*c.trJ2_bound < c.rbar) {
        c.rbar = *c.trJ2_bound;
        c.bound_source = "trJ2_bound";
      }
    } catch (const Error& err) {
      if (err.code() != Errc::SymmetryGateFailed) throw;
      c.trJ2_status = "gate_failed";
    }
  }
  c.logZ_lo = c.elbo - z * c.elbo_stderr;
  c.logZ_hi = c.elbo + z * c.elbo_stderr + c.rbar;
  return c;
}

double bayes_lln_rhs(const BayesLinReg& model) {
  const std::size_t p = model.n();
  double s = 0.0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) s += model.gram(i, j) * model.gram(i, j);
  const double base = model.prior.kappa * model.sigma2 + model.kappa2;
  const double top = base + std::sqrt(2.0 * s);
  return model.sigma2 * top * top / (static_cast<double>(p) * base * base * base);
}

ConcentrationReport concentration(const Model& model, const Certificate& cert, std::size_t k) {
  require(k >= 1 && k <= cert.n, Errc::InvalidArgument, "concentration: need 1 <= k <= n");
  ConcentrationReport r;
  r.rbar = cert.rbar;
  r.k = k;
  const double root = 1.0 + std::sqrt(2.0 * cert.rbar);
  r.lln_rhs = root * root / (cert.kappa * static_cast<double>(cert.n));
  r.w2_budget = 2.0 * cert.rbar / (cert.kappa * static_cast<double>(cert.n / k));
  if (const auto* b = std::get_if<BayesLinReg>(&model)) r.bayes_lln_rhs = bayes_lln_rhs(*b);
  return r;
}

}  // namespace mfcert
