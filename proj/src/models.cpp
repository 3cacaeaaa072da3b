#include "mfcert/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "mfcert/error.hpp"
#include "mfcert/rng.hpp"

namespace mfcert {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double finite(double v, const char* what) {
  require(std::isfinite(v), Errc::NonFinite, std::string(what) + " is not finite");
  return v;
}

// Smallest c1 making |V(x)| <= c1 exp(c2 x^2) on a wide sample, padded by 1%.
double fit_c1(const Fn1D& v, double c2, double center, double halfwidth) {
  double worst = 0.0;
  const int samples = 4001;
  for (int k = 0; k < samples; ++k) {
    const double x = center - halfwidth + 2.0 * halfwidth * k / (samples - 1);
    worst = std::max(worst, std::abs(v(x)) * std::exp(-c2 * x * x));
  }
  return 1.01 * worst + 1e-12;
}

// Root of the decreasing function g on the real line (used to locate the mode of a concave V).
double decreasing_root(const Fn1D& g, double guess) {
  double lo = guess - 1.0, hi = guess + 1.0;
  for (int it = 0; it < 200 && g(lo) < 0.0; ++it) lo = guess - 2.0 * (guess - lo);
  for (int it = 0; it < 200 && g(hi) > 0.0; ++it) hi = guess + 2.0 * (hi - guess);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ScalarPotential gaussian_well(double kappa, double mu) {
  require(kappa > 0.0, Errc::InvalidModel, "gaussian_well: kappa must be positive");
  ScalarPotential v;
  v.name = "gaussian_well";
  v.params = {{"kappa", kappa}, {"mu", mu}};
  v.eval = [kappa, mu](double x) { return -0.5 * kappa * (x - mu) * (x - mu); };
  v.d1 = [kappa, mu](double x) { return -kappa * (x - mu); };
  v.d2 = [kappa](double) { return -kappa; };
  v.kappa = kappa;
  v.mode = mu;
  v.growth.c2 = 0.25 * kappa;
  v.growth.c1 = fit_c1(v.eval, v.growth.c2, 0.0, std::abs(mu) + 60.0 / std::sqrt(kappa));
  return v;
}

ScalarPotential quartic_well(double kappa, double lambda, double mu) {
  require(kappa > 0.0, Errc::InvalidModel, "quartic_well: kappa must be positive");
  require(lambda >= 0.0, Errc::InvalidModel, "quartic_well: lambda must be nonnegative");
  ScalarPotential v;
  v.name = "quartic_well";
  v.params = {{"kappa", kappa}, {"lambda", lambda}, {"mu", mu}};
  v.eval = [kappa, lambda, mu](double x) {
    const double y = x - mu, y2 = y * y;
    return -0.5 * kappa * y2 - 0.25 * lambda * y2 * y2;
  };
  v.d1 = [kappa, lambda, mu](double x) {
    const double y = x - mu;
    return -kappa * y - lambda * y * y * y;
  };
  v.d2 = [kappa, lambda, mu](double x) {
    const double y = x - mu;
    return -kappa - 3.0 * lambda * y * y;
  };
  v.kappa = kappa;
  v.mode = mu;
  v.growth.c2 = 0.25 * kappa;
  v.growth.c1 = fit_c1(v.eval, v.growth.c2, 0.0, std::abs(mu) + 60.0 / std::sqrt(kappa));
  return v;
}

ScalarPotential scaled(const ScalarPotential& v, double s) {
  require(s > 0.0, Errc::InvalidArgument, "scaled potential: factor must be positive");
  ScalarPotential out = v;
  out.name = v.name + "*" + std::to_string(s);
  out.eval = [f = v.eval, s](double x) { return s * f(x); };
  out.d1 = [f = v.d1, s](double x) { return s * f(x); };
  out.d2 = [f = v.d2, s](double x) { return s * f(x); };
  out.kappa = s * v.kappa;
  out.growth.c1 = s * v.growth.c1;
  return out;
}

ScalarPotential shifted(const ScalarPotential& v, double shift) {
  ScalarPotential out = v;
  out.eval = [f = v.eval, shift](double x) { return f(x) + shift; };
  out.growth.c1 = v.growth.c1 + std::abs(shift);
  out.params["shift"] = shift;
  return out;
}

InteractionKernel neg_quadratic_kernel() {
  InteractionKernel k;
  k.name = "neg_quadratic_kernel";
  k.eval = [](double u) { return -0.5 * u * u; };
  k.d1 = [](double u) { return -u; };
  k.d2 = [](double) { return -1.0; };
  k.growth = {1.0, 0.0};
  return k;
}

InteractionKernel neg_sqrt_kernel() {
  InteractionKernel k;
  k.name = "neg_sqrt_kernel";
  k.eval = [](double u) { return -std::sqrt(1.0 + u * u); };
  k.d1 = [](double u) { return -u / std::sqrt(1.0 + u * u); };
  k.d2 = [](double u) { return -1.0 / std::pow(1.0 + u * u, 1.5); };
  k.growth = {1.0, 0.0};
  return k;
}

InteractionKernel neg_logcosh_kernel() {
  InteractionKernel k;
  k.name = "neg_logcosh";
  k.eval = [](double u) {
    const double a = std::abs(u);
    return -(a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0));
  };
  k.d1 = [](double u) { return -std::tanh(u); };
  k.d2 = [](double u) {
    const double c = std::cosh(u);
    return -1.0 / (c * c);
  };
  k.growth = {1.0, 0.0};
  return k;
}

InteractionKernel zero_kernel() {
  InteractionKernel k;
  k.name = "zero_kernel";
  k.eval = k.d1 = k.d2 = [](double) { return 0.0; };
  k.growth = {0.0, 0.0};
  return k;
}

InteractionKernel scaled(const InteractionKernel& k, double s) {
  require(std::isfinite(s), Errc::InvalidArgument, "scaled kernel: factor must be finite");
  InteractionKernel out = k;
  out.params["scale"] = s * (k.params.count("scale") ? k.params.at("scale") : 1.0);
  out.eval = [f = k.eval, s](double u) { return s * f(u); };
  out.d1 = [f = k.d1, s](double u) { return s * f(u); };
  out.d2 = [f = k.d2, s](double u) { return s * f(u); };
  out.growth.a = s * s * k.growth.a;
  return out;
}

CouplingMatrix::CouplingMatrix(Matrix j) : j_(std::move(j)) {
  require(j_.square() && j_.rows() >= 1, Errc::InvalidModel, "coupling matrix must be square");
  const std::size_t n = j_.rows();
  require(is_symmetric(j_, 1e-12), Errc::InvalidModel, "coupling matrix must be symmetric");
  adj_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(j_(i, i) == 0.0, Errc::InvalidModel, "coupling matrix must have a zero diagonal");
    for (std::size_t k = 0; k < n; ++k) {
      require(std::isfinite(j_(i, k)) && j_(i, k) >= 0.0, Errc::InvalidModel,
              "coupling matrix entries must be finite and nonnegative");
      if (k != i && j_(i, k) > 0.0) {
        adj_[i].push_back({k, j_(i, k)});
        if (i < k) edges_.emplace_back(i, k);
      }
    }
  }
}

double CouplingMatrix::trace_j2() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i)
    for (const auto& e : adj_[i]) s += e.weight * j_(e.j, i);
  return s;
}

double CouplingMatrix::max_row_sum_deviation(double target) const noexcept {
  double worst = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    double s = 0.0;
    for (const auto& e : adj_[i]) s += e.weight;
    worst = std::max(worst, std::abs(s - target));
  }
  return worst;
}

Matrix cycle_graph(std::size_t n) {
  require(n >= 3, Errc::InvalidModel, "cycle graph needs n >= 3");
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, (i + 1) % n) = 1.0;
    a((i + 1) % n, i) = 1.0;
  }
  return a;
}

Matrix complete_graph(std::size_t n) {
  require(n >= 2, Errc::InvalidModel, "complete graph needs n >= 2");
  Matrix a(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 0.0;
  return a;
}

Matrix dregular_graph(std::size_t n, std::size_t d, std::uint64_t seed) {
  require(d >= 1 && d < n, Errc::InvalidModel, "d-regular graph needs 1 <= d < n");
  require((n * d) % 2 == 0, Errc::InvalidModel, "d-regular graph needs n*d even");
  std::set<std::pair<std::size_t, std::size_t>> present;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  auto add = [&](std::size_t u, std::size_t v) {
    auto key = std::minmax(u, v);
    if (u != v && present.insert(key).second) edges.push_back(key);
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 1; s <= d / 2; ++s) add(i, (i + s) % n);
  if (d % 2 == 1)
    for (std::size_t i = 0; i < n / 2; ++i) add(i, i + n / 2);

  RngStream rng(seed, 0xd7e6);
  const std::size_t swaps = 10 * edges.size();
  for (std::size_t t = 0; t < swaps; ++t) {
    const std::size_t e1 = rng.below(edges.size()), e2 = rng.below(edges.size());
    if (e1 == e2) continue;
    auto [a, b] = edges[e1];
    auto [c, dd] = edges[e2];
    if (rng.below(2) == 1) std::swap(c, dd);
    if (a == dd || c == b || a == c || b == dd) continue;
    const auto n1 = std::minmax(a, dd), n2 = std::minmax(c, b);
    if (present.count(n1) || present.count(n2)) continue;
    present.erase(edges[e1]);
    present.erase(edges[e2]);
    present.insert(n1);
    present.insert(n2);
    edges[e1] = n1;
    edges[e2] = n2;
  }
  Matrix out(n, n);
  for (auto [u, v] : edges) out(u, v) = out(v, u) = 1.0;
  return out;
}

Matrix block_graph(const std::vector<std::size_t>& sizes, const Matrix& weights) {
  require(weights.square() && weights.rows() == sizes.size() && !sizes.empty(), Errc::InvalidModel,
          "block graph: weights must be square with one row per block");
  require(is_symmetric(weights, 1e-12), Errc::InvalidModel, "block graph: weights not symmetric");
  std::vector<std::size_t> label;
  for (std::size_t b = 0; b < sizes.size(); ++b) label.insert(label.end(), sizes[b], b);
  const std::size_t n = label.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) out(i, j) = weights(label[i], label[j]);
  return out;
}

Matrix row_normalized(const Matrix& a) {
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j);
    if (s > 0.0)
      for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) /= s;
  }
  return out;
}

BayesLinReg make_bayes(Matrix x, std::vector<double> y, double sigma2, ScalarPotential prior) {
  require(y.size() == x.rows(), Errc::InvalidModel, "bayes: y length must match rows of X");
  require(sigma2 > 0.0, Errc::InvalidModel, "bayes: sigma2 must be positive");
  BayesLinReg m;
  m.gram = x.transpose() * x;
  m.xty = x.transpose().apply(y);
  m.yty = std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
  m.kappa2 = std::max(0.0, lambda_min(m.gram));
  m.X = std::move(x);
  m.y = std::move(y);
  m.sigma2 = sigma2;
  m.prior = std::move(prior);
  require(m.prior.kappa + m.kappa2 / m.sigma2 > 0.0, Errc::NotStronglyConcave,
          "bayes: kappa1 + kappa2/sigma2 must be positive");
  return m;
}

BlackBox quadratic_lse_blackbox(const Matrix& a, double s) {
  require(a.square() && is_symmetric(a, 1e-12), Errc::InvalidModel, "quadratic_lse: A symmetric");
  require(s >= 0.0, Errc::InvalidModel, "quadratic_lse: s must be nonnegative");
  BlackBox bb;
  bb.name = "quadratic_lse";
  bb.dim = a.rows();
  bb.kappa = lambda_min(a);
  auto softmax = [](std::span<const double> x) {
    const double top = *std::max_element(x.begin(), x.end());
    std::vector<double> p(x.size());
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) z += (p[i] = std::exp(x[i] - top));
    for (double& v : p) v /= z;
    return p;
  };
  bb.f = [a, s](std::span<const double> x) {
    const auto ax = a.apply(x);
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) q += x[i] * ax[i];
    const double top = *std::max_element(x.begin(), x.end());
    double z = 0.0;
    for (double v : x) z += std::exp(v - top);
    return -0.5 * q - s * (top + std::log(z));
  };
  bb.grad = [a, s, softmax](std::span<const double> x, std::size_t i) {
    double ax = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) ax += a(i, j) * x[j];
    return -ax - s * softmax(x)[i];
  };
  bb.cross = [a, s, softmax](std::span<const double> x, std::size_t i, std::size_t j) {
    const auto p = softmax(x);
    return -a(i, j) + s * p[i] * p[j];
  };
  bb.hess_diag = [a, s, softmax](std::span<const double> x, std::size_t i) {
    const auto p = softmax(x);
    return -a(i, i) - s * p[i] * (1.0 - p[i]);
  };
  return bb;
}

BlackBox quadratic_blackbox(const Matrix& a, std::vector<double> b) {
  require(a.square() && is_symmetric(a, 1e-12), Errc::InvalidModel, "quadratic: A symmetric");
  if (b.empty()) b.assign(a.rows(), 0.0);
  require(b.size() == a.rows(), Errc::InvalidModel, "quadratic: b length");
  BlackBox bb;
  bb.name = "quadratic";
  bb.dim = a.rows();
  bb.kappa = lambda_min(a);
  bb.f = [a, b](std::span<const double> x) {
    const auto ax = a.apply(x);
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) v += -0.5 * x[i] * ax[i] + b[i] * x[i];
    return v;
  };
  bb.grad = [a, b](std::span<const double> x, std::size_t i) {
    double ax = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) ax += a(i, j) * x[j];
    return -ax + b[i];
  };
  bb.cross = [a](std::span<const double>, std::size_t i, std::size_t j) { return -a(i, j); };
  bb.hess_diag = [a](std::span<const double>, std::size_t i) { return -a(i, i); };
  return bb;
}

std::size_t dimension(const Model& m) {
  return std::visit([](const auto& x) { return x.n(); }, m);
}

std::string family_name(const Model& m) {
  return std::visit(overloaded{
                        [](const PairwiseGibbs&) { return std::string("pairwise"); },
                        [](const QuadraticModel&) { return std::string("quadratic"); },
                        [](const BayesLinReg&) { return std::string("bayes"); },
                        [](const BlackBox&) { return std::string("blackbox"); },
                    },
                    m);
}

double eval_f(const Model& m, std::span<const double> x) {
  require(x.size() == dimension(m), Errc::LengthMismatch, "eval_f: dimension mismatch");
  const double v = std::visit(
      overloaded{
          [&](const PairwiseGibbs& p) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += p.V.eval(x[i]);
            for (auto [i, j] : p.J.edges()) s += p.J(i, j) * p.K.eval(x[i] - x[j]);
            return s;
          },
          [&](const QuadraticModel& q) {
            const auto ax = q.A.apply(x);
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
              s += -0.5 * x[i] * ax[i] + (q.b.empty() ? 0.0 : q.b[i] * x[i]);
            return s;
          },
          [&](const BayesLinReg& b) {
            const auto gx = b.gram.apply(x);
            double s = 0.0, quad = 0.0, lin = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
              s += b.prior.eval(x[i]);
              quad += x[i] * gx[i];
              lin += x[i] * b.xty[i];
            }
            return s - (quad - 2.0 * lin + b.yty) / (2.0 * b.sigma2);
          },
          [&](const BlackBox& bb) { return bb.f(x); },
      },
      m);
  return finite(v, "f(x)");
}

double partial_i(const Model& m, std::span<const double> x, std::size_t i) {
  require(x.size() == dimension(m) && i < x.size(), Errc::LengthMismatch, "partial_i: bad index");
  const double v = std::visit(
      overloaded{
          [&](const PairwiseGibbs& p) {
            double s = p.V.d1(x[i]);
            for (const auto& e : p.J.neighbors(i)) s += e.weight * p.K.d1(x[i] - x[e.j]);
            return s;
          },
          [&](const QuadraticModel& q) {
            double s = q.b.empty() ? 0.0 : q.b[i];
            for (std::size_t j = 0; j < x.size(); ++j) s -= q.A(i, j) * x[j];
            return s;
          },
          [&](const BayesLinReg& b) {
            double gx = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) gx += b.gram(i, j) * x[j];
            return b.prior.d1(x[i]) - (gx - b.xty[i]) / b.sigma2;
          },
          [&](const BlackBox& bb) { return bb.grad(x, i); },
      },
      m);
  return finite(v, "partial derivative");
}

double cross_ij(const Model& m, std::span<const double> x, std::size_t i, std::size_t j) {
  require(x.size() == dimension(m) && i < x.size() && j < x.size(), Errc::LengthMismatch,
          "cross_ij: bad index");
  require(i != j, Errc::InvalidArgument, "cross_ij: indices must differ");
  const double v = std::visit(overloaded{
                                  [&](const PairwiseGibbs& p) {
                                    const double w = p.J(i, j);
                                    return w == 0.0 ? 0.0 : -w * p.K.d2(x[i] - x[j]);
                                  },
                                  [&](const QuadraticModel& q) { return -q.A(i, j); },
                                  [&](const BayesLinReg& b) { return -b.gram(i, j) / b.sigma2; },
                                  [&](const BlackBox& bb) { return bb.cross(x, i, j); },
                              },
                              m);
  return finite(v, "cross partial");
}

double hess_ii(const Model& m, std::span<const double> x, std::size_t i) {
  require(x.size() == dimension(m) && i < x.size(), Errc::LengthMismatch, "hess_ii: bad index");
  const double v = std::visit(
      overloaded{
          [&](const PairwiseGibbs& p) {
            double s = p.V.d2(x[i]);
            for (const auto& e : p.J.neighbors(i)) s += e.weight * p.K.d2(x[i] - x[e.j]);
            return s;
          },
          [&](const QuadraticModel& q) { return -q.A(i, i); },
          [&](const BayesLinReg& b) { return b.prior.d2(x[i]) - b.gram(i, i) / b.sigma2; },
          [&](const BlackBox& bb) {
            require(static_cast<bool>(bb.hess_diag), Errc::InvalidModel,
                    "black box has no diagonal second derivative");
            return bb.hess_diag(x, i);
          },
      },
      m);
  return finite(v, "second derivative");
}

std::vector<double> gradient(const Model& m, std::span<const double> x) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = partial_i(m, x, i);
  return g;
}

double concavity_of(const Model& m) {
  return std::visit(overloaded{
                        [](const PairwiseGibbs& p) { return p.V.kappa; },
                        [](const QuadraticModel& q) {
                          const double l = lambda_min(q.A);
                          return q.concave_only ? std::max(0.0, l) : l;
                        },
                        [](const BayesLinReg& b) { return b.prior.kappa + b.kappa2 / b.sigma2; },
                        [](const BlackBox& bb) { return bb.kappa; },
                    },
                    m);
}

double kappa_of(const Model& m) {
  const double k = concavity_of(m);
  require(k > 0.0, Errc::NotStronglyConcave,
          "model is not strongly concave (kappa = " + std::to_string(k) + ")");
  return k;
}

std::vector<double> find_mode(const Model& m) {
  const std::size_t n = dimension(m);
  std::vector<double> x(n, 0.0);
  if (const auto* p = std::get_if<PairwiseGibbs>(&m)) {
    std::fill(x.begin(), x.end(), p->V.mode);
  } else if (const auto* q = std::get_if<QuadraticModel>(&m)) {
    if (!q->concave_only || cholesky(q->A)) {
      std::vector<double> b = q->b.empty() ? std::vector<double>(n, 0.0) : q->b;
      if (cholesky(q->A)) return solve_spd(q->A, b);
    }
  } else if (const auto* b = std::get_if<BayesLinReg>(&m)) {
    std::fill(x.begin(), x.end(), b->prior.mode);
  }

  double fx = eval_f(m, x);
  double step = 1.0;
  for (int it = 0; it < 100000; ++it) {
    const auto g = gradient(m, x);
    double g2 = 0.0, ginf = 0.0;
    for (double v : g) {
      g2 += v * v;
      ginf = std::max(ginf, std::abs(v));
    }
    if (ginf <= 1e-11 * std::max(1.0, std::abs(fx))) break;
    bool moved = false;
    for (int bt = 0; bt < 80; ++bt) {
      std::vector<double> trial(n);
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + step * g[i];
      const double ft = eval_f(m, trial);
      if (ft >= fx + 0.25 * step * g2) {
        x = std::move(trial);
        fx = ft;
        moved = true;
        step *= 2.0;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return x;
}

Model scale_model(const Model& m, double s) {
  require(s > 0.0, Errc::InvalidArgument, "scale_model: factor must be positive");
  return std::visit(
      overloaded{
          [&](const PairwiseGibbs& p) -> Model {
            return PairwiseGibbs{scaled(p.V, s), scaled(p.K, s), p.J};
          },
          [&](const QuadraticModel& q) -> Model {
            QuadraticModel out = q;
            out.A *= s;
            for (double& v : out.b) v *= s;
            return out;
          },
          [&](const BayesLinReg& b) -> Model {
            return make_bayes(b.X, b.y, b.sigma2 / s, scaled(b.prior, s));
          },
          [&](const BlackBox& bb) -> Model {
            BlackBox out = bb;
            out.name = bb.name + "*" + std::to_string(s);
            out.f = [f = bb.f, s](std::span<const double> x) { return s * f(x); };
            out.grad = [g = bb.grad, s](std::span<const double> x, std::size_t i) { return s * g(x, i); };
            out.cross = [c = bb.cross, s](std::span<const double> x, std::size_t i, std::size_t j) {
              return s * c(x, i, j);
            };
            if (bb.hess_diag)
              out.hess_diag = [h = bb.hess_diag, s](std::span<const double> x, std::size_t i) {
                return s * h(x, i);
              };
            out.kappa = s * bb.kappa;
            return out;
          },
      },
      m);
}

namespace {

ScalarPotential with_gaussian(const ScalarPotential& v, double t) {
  ScalarPotential out = v;
  out.name = v.name + "+gauss";
  out.eval = [f = v.eval, t](double x) { return f(x) - 0.5 * x * x / t; };
  out.d1 = [f = v.d1, t](double x) { return f(x) - x / t; };
  out.d2 = [f = v.d2, t](double x) { return f(x) - 1.0 / t; };
  out.kappa = v.kappa + 1.0 / t;
  out.mode = decreasing_root(out.d1, v.mode);
  out.growth.c2 = std::max(v.growth.c2, 0.25 * out.kappa);
  out.growth.c1 = v.growth.c1 + 4.0 / (std::exp(1.0) * t * out.growth.c2) * 0.5;
  return out;
}

}  // namespace

Model add_gaussian_reference(const Model& m, double t) {
  require(t > 0.0, Errc::InvalidArgument, "add_gaussian_reference: t must be positive");
  return std::visit(
      overloaded{
          [&](const PairwiseGibbs& p) -> Model { return PairwiseGibbs{with_gaussian(p.V, t), p.K, p.J}; },
          [&](const QuadraticModel& q) -> Model {
            QuadraticModel out = q;
            for (std::size_t i = 0; i < q.n(); ++i) out.A(i, i) += 1.0 / t;
            out.concave_only = false;
            return out;
          },
          [&](const BayesLinReg& b) -> Model {
            return make_bayes(b.X, b.y, b.sigma2, with_gaussian(b.prior, t));
          },
          [&](const BlackBox& bb) -> Model {
            BlackBox out = bb;
            out.name = bb.name + "+gauss";
            out.f = [f = bb.f, t](std::span<const double> x) {
              double s = f(x);
              for (double v : x) s -= 0.5 * v * v / t;
              return s;
            };
            out.grad = [g = bb.grad, t](std::span<const double> x, std::size_t i) {
              return g(x, i) - x[i] / t;
            };
            if (bb.hess_diag)
              out.hess_diag = [h = bb.hess_diag, t](std::span<const double> x, std::size_t i) {
                return h(x, i) - 1.0 / t;
              };
            out.kappa = bb.kappa + 1.0 / t;
            return out;
          },
      },
      m);
}

void validate_potential(const ScalarPotential& v, double center, double halfwidth,
                        const ValidationOptions& opts) {
  const std::size_t np = std::max<std::size_t>(opts.probe_points, 2);
  if (!opts.allow_growth_override)
    require(v.growth.c2 < 0.5 * v.kappa, Errc::InvalidModel,
            "potential " + v.name + ": growth exponent c2 must be below kappa/2");
  for (std::size_t k = 0; k < np; ++k) {
    const double x = center - halfwidth + 2.0 * halfwidth * static_cast<double>(k) / (np - 1);
    const double d2 = v.d2(x);
    require(std::isfinite(d2) && d2 <= -v.kappa + 1e-9, Errc::InvalidModel,
            "potential " + v.name + " is not kappa-concave at x = " + std::to_string(x));
    if (!opts.allow_growth_override) {
      const double bound = v.growth.c1 * std::exp(v.growth.c2 * x * x);
      require(std::abs(v.eval(x)) <= bound * (1.0 + 1e-12), Errc::InvalidModel,
              "potential " + v.name + " violates its declared growth bound at x = " +
                  std::to_string(x));
    }
  }
}

void validate_kernel(const InteractionKernel& k, double range, const ValidationOptions& opts) {
  const std::size_t np = std::max<std::size_t>(opts.probe_points, 2);
  for (std::size_t s = 0; s < np; ++s) {
    const double u = -range + 2.0 * range * static_cast<double>(s) / (np - 1);
    const double ku = k.eval(u), kmu = k.eval(-u);
    require(std::abs(ku - kmu) <= 1e-12 * std::max(1.0, std::abs(ku)), Errc::InvalidModel,
            "kernel " + k.name + " is not even");
    const double d2 = k.d2(u);
    require(std::isfinite(d2) && d2 <= 1e-12, Errc::InvalidModel, "kernel " + k.name + " is not concave");
    require(d2 * d2 <= k.growth.a * std::exp(k.growth.b * std::abs(u)) * (1.0 + 1e-9) + 1e-300,
            Errc::InvalidModel, "kernel " + k.name + " violates its declared growth bound");
  }
}

void validate(const Model& m, const ValidationOptions& opts) {
  std::visit(
      overloaded{
          [&](const PairwiseGibbs& p) {
            require(p.V.kappa > 0.0, Errc::NotStronglyConcave, "pairwise: V must be strongly concave");
            const double hw = opts.window_sd / std::sqrt(p.V.kappa);
            validate_potential(p.V, p.V.mode, hw, opts);
            validate_kernel(p.K, 2.0 * hw, opts);
          },
          [&](const QuadraticModel& q) {
            require(q.A.square() && is_symmetric(q.A, 1e-12), Errc::InvalidModel,
                    "quadratic: A must be square and symmetric");
            require(q.b.empty() || q.b.size() == q.n(), Errc::InvalidModel, "quadratic: b length");
            const double l = lambda_min(q.A);
            if (q.concave_only)
              require(l >= -1e-10, Errc::InvalidModel, "quadratic: A must be positive semidefinite");
            else
              require(l > 0.0, Errc::NotStronglyConcave, "quadratic: A must be positive definite");
          },
          [&](const BayesLinReg& b) {
            const double k = b.prior.kappa + b.kappa2 / b.sigma2;
            require(k > 0.0, Errc::NotStronglyConcave, "bayes: kappa1 + kappa2/sigma2 must be positive");
            ValidationOptions po = opts;
            if (b.prior.kappa <= 0.0) po.allow_growth_override = true;
            validate_potential(b.prior, b.prior.mode, opts.window_sd / std::sqrt(k), po);
          },
          [&](const BlackBox& bb) {
            require(bb.kappa > 0.0, Errc::NotStronglyConcave, "black box: declared kappa must be positive");
            require(bb.f && bb.grad && bb.cross, Errc::InvalidModel, "black box: missing handles");
            const std::size_t n = bb.dim;
            RngStream rng(opts.seed, 0xb1acb0);
            const double scale = 1.0 / std::sqrt(bb.kappa);
            std::vector<double> x(n);
            for (std::size_t probe = 0; probe < opts.random_probes; ++probe) {
              for (double& v : x) v = scale * rng.normal();
              for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                  const double a = bb.cross(x, i, j), c = bb.cross(x, j, i);
                  require(std::abs(a - c) <= 1e-8, Errc::InvalidModel, "black box: cross partials not symmetric");
                }
                const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
                auto xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                const double fd = (bb.f(xp) - bb.f(xm)) / (2.0 * h);
                const double g = bb.grad(x, i);
                require(std::abs(fd - g) <= 1e-5 * std::max(1.0, std::abs(g)), Errc::InvalidModel,
                        "black box: gradient disagrees with finite differences");
              }
            }
          },
      },
      m);
}

}  // namespace mfcert
