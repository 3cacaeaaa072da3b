#include "mfcert/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <numbers>

#include "mfcert/error.hpp"
#include "mfcert/parallel.hpp"
#include "mfcert/simd.hpp"

namespace mfcert {

GaussianTruth gaussian_truth(const Matrix& a) {
  require(a.square() && is_symmetric(a, 1e-12), Errc::NotSPD, "gaussian_truth: A must be symmetric");
  const std::size_t n = a.rows();
  GaussianTruth t;
  t.A = a;
  t.log_det = log_det_spd(a);
  t.logZ = 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) - 0.5 * t.log_det;
  const Matrix inv = inverse_spd(a);
  double log_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    log_diag += std::log(a(i, i));
    t.qstar_vars.push_back(1.0 / a(i, i));
    t.marginal_vars.push_back(inv(i, i));
  }
  t.pstar_vars = t.marginal_vars;
  t.rf_exact = 0.5 * (log_diag - t.log_det);
  return t;
}

namespace {

constexpr std::size_t kMaxBruteDim = 4;

// log e^f split into one-coordinate and two-coordinate tables on the
// windows, for the families whose f is a sum of such terms.
struct PairTables {
  std::vector<std::vector<double>> unary;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> pair;  // row-major m_i x m_j
  double constant = 0.0;
};

std::optional<PairTables> decompose(const Model& model, const std::vector<Grid>& g) {
  const std::size_t n = g.size();
  PairTables t;
  t.unary.resize(n);
  auto fill_pair = [&](std::size_t i, std::size_t j, auto fn) {
    std::vector<double> tab(g[i].size() * g[j].size());
    for (std::size_t a = 0; a < g[i].size(); ++a)
      for (std::size_t b = 0; b < g[j].size(); ++b) tab[a * g[j].size() + b] = fn(g[i].point(a), g[j].point(b));
    t.pair.emplace(std::make_pair(i, j), std::move(tab));
  };
  if (const auto* p = std::get_if<PairwiseGibbs>(&model)) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < g[i].size(); ++a) t.unary[i].push_back(p->V.eval(g[i].point(a)));
    for (auto [i, j] : p->J.edges()) {
      const double w = p->J(i, j);
      fill_pair(i, j, [&](double x, double y) { return w * p->K.eval(x - y); });
    }
    return t;
  }
  if (const auto* q = std::get_if<QuadraticModel>(&model)) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < g[i].size(); ++a) {
        const double x = g[i].point(a);
        t.unary[i].push_back(-0.5 * q->A(i, i) * x * x + (q->b.empty() ? 0.0 : q->b[i] * x));
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (q->A(i, j) != 0.0) {
          const double c = q->A(i, j);
          fill_pair(i, j, [c](double x, double y) { return -c * x * y; });
        }
    return t;
  }
  if (const auto* b = std::get_if<BayesLinReg>(&model)) {
    const double s2 = b->sigma2;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < g[i].size(); ++a) {
        const double x = g[i].point(a);
        t.unary[i].push_back(b->prior.eval(x) - b->gram(i, i) * x * x / (2.0 * s2) + b->xty[i] * x / s2);
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (b->gram(i, j) != 0.0) {
          const double c = b->gram(i, j) / s2;
          fill_pair(i, j, [c](double x, double y) { return -c * x * y; });
        }
    t.constant = -b->yty / (2.0 * s2);
    return t;
  }
  return std::nullopt;
}

std::size_t nearest(const Grid& g, double x) {
  const double pos = std::round((x - g.lo()) / g.spacing());
  return static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(g.size() - 1)));
}

// Σ over the tensor grid of Π_i eu_i[a_i] Π_{i<j} E_ij[a_i, a_j], with the
// axes visited in `order`. Returns one partial sum per node of the first axis.
std::vector<double> tensor_sums(const std::vector<std::vector<double>>& eu,
                                const std::map<std::pair<std::size_t, std::size_t>, std::vector<double>>& ex,
                                const std::vector<std::size_t>& order, const std::vector<Grid>& g) {
  const std::size_t n = order.size();
  // Pair factor between axis u (fixed at a) and axis v, as a row over v.
  auto row = [&](std::size_t u, std::size_t a, std::size_t v, std::vector<double>& r) {
    if (auto it = ex.find({u, v}); it != ex.end()) {
      const double* p = it->second.data() + a * g[v].size();
      for (std::size_t c = 0; c < r.size(); ++c) r[c] *= p[c];
    } else if (auto jt = ex.find({v, u}); jt != ex.end()) {
      const std::size_t mu = g[u].size();
      for (std::size_t c = 0; c < r.size(); ++c) r[c] *= jt->second[c * mu + a];
    }
  };
  std::function<double(std::size_t, std::vector<std::vector<double>>&)> rec =
      [&](std::size_t d, std::vector<std::vector<double>>& r) -> double {
    const std::size_t ax = order[d];
    if (d + 1 == n) return simd::sum(r[ax]);
    double total = 0.0;
    for (std::size_t a = 0; a < g[ax].size(); ++a) {
      const double w = r[ax][a];
      if (w == 0.0) continue;
      std::vector<std::vector<double>> next = r;
      for (std::size_t e = d + 1; e < n; ++e) row(ax, a, order[e], next[order[e]]);
      total += w * rec(d + 1, next);
    }
    return total;
  };

  const std::size_t first = order[0];
  std::vector<double> out(g[first].size(), 0.0);
  parallel_for(g[first].size(), [&](std::size_t a) {
    if (eu[first][a] == 0.0) return;
    std::vector<std::vector<double>> r = eu;
    if (n == 1) {
      out[a] = eu[first][a];
      return;
    }
    for (std::size_t e = 1; e < n; ++e) row(first, a, order[e], r[order[e]]);
    out[a] = eu[first][a] * rec(1, r);
  });
  return out;
}

// Calls fn(x, weight) at every node of the tensor grid; parallel over the
// first axis with one accumulator per node so the sum order is fixed.
double tensor_reduce(const std::vector<Grid>& g, const std::function<double(std::span<const double>)>& fn) {
  const std::size_t n = g.size();
  std::vector<double> partial(g[0].size(), 0.0);
  parallel_for(g[0].size(), [&](std::size_t a0) {
    std::vector<std::size_t> idx(n, 0);
    idx[0] = a0;
    std::vector<double> x(n);
    double acc = 0.0;
    while (true) {
      double w = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = g[i].point(idx[i]);
        w *= g[i].weight(idx[i]);
      }
      acc += w * fn(x);
      std::size_t d = n - 1;
      while (d > 0 && ++idx[d] == g[d].size()) idx[d--] = 0;
      if (d == 0) break;
    }
    partial[a0] = acc;
  });
  double s = 0.0;
  for (double v : partial) s += v;
  return s;
}

double log_sum_tables(const Model& model, const std::vector<Grid>& g, const PairTables& t,
                      std::vector<double>* first_axis, std::size_t first) {
  const std::size_t n = g.size();
  const auto mode = find_mode(model);
  std::vector<std::size_t> star(n);
  for (std::size_t i = 0; i < n; ++i) star[i] = nearest(g[i], mode[i]);
  double shift = t.constant;
  std::vector<std::vector<double>> eu(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = t.unary[i][star[i]];
    shift += s;
    for (std::size_t a = 0; a < g[i].size(); ++a)
      eu[i].push_back((first_axis && i == first ? 1.0 : g[i].weight(a)) * std::exp(t.unary[i][a] - s));
  }
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> ex;
  for (const auto& [key, tab] : t.pair) {
    const double s = tab[star[key.first] * g[key.second].size() + star[key.second]];
    shift += s;
    std::vector<double> e(tab.size());
    for (std::size_t k = 0; k < tab.size(); ++k) e[k] = std::exp(tab[k] - s);
    ex.emplace(key, std::move(e));
  }
  std::vector<std::size_t> order{first};
  for (std::size_t i = 0; i < n; ++i)
    if (i != first) order.push_back(i);
  const auto sums = tensor_sums(eu, ex, order, g);
  if (first_axis) {
    first_axis->resize(sums.size());
    for (std::size_t a = 0; a < sums.size(); ++a) (*first_axis)[a] = std::log(sums[a]) + shift;
  }
  double total = 0.0;
  for (std::size_t a = 0; a < sums.size(); ++a) total += sums[a];
  return shift + std::log(total);
}

}  // namespace

std::vector<Grid> brute_windows(const Model& model, std::size_t m, double window_sd) {
  const double hw = window_sd / std::sqrt(kappa_of(model));
  std::vector<Grid> g;
  for (double c : find_mode(model)) g.push_back(Grid::centered(c, hw, m));
  return g;
}

double brute_logZ_on(const Model& model, const std::vector<Grid>& windows) {
  const std::size_t n = dimension(model);
  require(n <= kMaxBruteDim, Errc::DimensionTooLarge,
          "brute force supports n <= 4 (got n = " + std::to_string(n) + ")");
  require(windows.size() == n, Errc::LengthMismatch, "brute_logZ: one window per coordinate");
  if (auto t = decompose(model, windows)) return log_sum_tables(model, windows, *t, nullptr, 0);
  const auto mode = find_mode(model);
  const double shift = eval_f(model, mode);
  const double s = tensor_reduce(windows, [&](std::span<const double> x) { return std::exp(eval_f(model, x) - shift); });
  return shift + std::log(s);
}

BruteResult brute_logZ(const Model& model, const BruteOptions& opts) {
  require(dimension(model) <= kMaxBruteDim, Errc::DimensionTooLarge,
          "brute force supports n <= 4 (got n = " + std::to_string(dimension(model)) + ")");
  BruteResult r;
  std::size_t m = opts.m_start;
  double prev = brute_logZ_on(model, brute_windows(model, m, opts.window_sd));
  while (true) {
    const std::size_t next_m = 2 * m - 1;
    if (next_m > opts.m_max) break;
    const double cur = brute_logZ_on(model, brute_windows(model, next_m, opts.window_sd));
    r.refinement_change = std::abs(cur - prev);
    prev = cur;
    m = next_m;
    if (r.refinement_change < opts.tol) {
      r.converged = true;
      break;
    }
  }
  r.logZ = prev;
  r.m_used = m;
  return r;
}

GridDensity brute_marginal(const Model& model, std::size_t i, std::size_t m_axis, std::size_t m_other,
                           double window_sd) {
  const std::size_t n = dimension(model);
  require(n <= 3, Errc::DimensionTooLarge, "brute_marginal supports n <= 3");
  require(i < n, Errc::OutOfRange, "brute_marginal: coordinate out of range");
  auto g = brute_windows(model, m_other, window_sd);
  g[i] = Grid::centered(g[i].center(), g[i].halfwidth(), m_axis);
  std::vector<double> logw;
  if (auto t = decompose(model, g)) {
    log_sum_tables(model, g, *t, &logw, i);
  } else {
    const auto mode = find_mode(model);
    const double shift = eval_f(model, mode);
    std::vector<Grid> rest;
    for (std::size_t k = 0; k < n; ++k)
      if (k != i) rest.push_back(g[k]);
    logw.resize(g[i].size());
    for (std::size_t a = 0; a < g[i].size(); ++a) {
      std::vector<double> x(n);
      double s = 1.0;
      if (!rest.empty()) {
        s = tensor_reduce(rest, [&](std::span<const double> y) {
          for (std::size_t k = 0, r = 0; k < n; ++k) x[k] = k == i ? g[i].point(a) : y[r++];
          return std::exp(eval_f(model, x) - shift);
        });
      } else {
        x[0] = g[i].point(a);
        s = std::exp(eval_f(model, x) - shift);
      }
      logw[a] = std::log(s);
    }
  }
  return normalize(std::move(logw), g[i]);
}

namespace {

std::vector<Grid> decimated(const ProductMeasure& q, std::size_t stride) {
  std::vector<Grid> g;
  for (const auto& d : q) {
    require((d.size() - 1) % stride == 0, Errc::InvalidArgument, "grid size incompatible with the stride");
    g.emplace_back(d.grid().lo(), d.grid().hi(), (d.size() - 1) / stride + 1);
  }
  return g;
}

double log_q_at(const ProductMeasure& q, const std::vector<Grid>& g, std::size_t stride, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto k = static_cast<std::size_t>(std::llround((x[i] - g[i].lo()) / g[i].spacing()));
    s += q[i].log_pdf(k * stride);
  }
  return s;
}

}  // namespace

double relative_entropy_qp(const Model& model, const ProductMeasure& q, double logZ, std::size_t stride) {
  require(q.size() == dimension(model) && q.size() <= kMaxBruteDim, Errc::DimensionTooLarge,
          "relative_entropy_qp: n must match the model and be at most 4");
  const auto g = decimated(q, stride);
  return tensor_reduce(g, [&](std::span<const double> x) {
    const double lq = log_q_at(q, g, stride, x);
    if (lq < -700.0) return 0.0;
    return std::exp(lq) * (lq - eval_f(model, x) + logZ);
  });
}

double relative_entropy_pq(const Model& model, const ProductMeasure& q, double logZ, std::size_t stride) {
  require(q.size() == dimension(model) && q.size() <= kMaxBruteDim, Errc::DimensionTooLarge,
          "relative_entropy_pq: n must match the model and be at most 4");
  const auto g = decimated(q, stride);
  return tensor_reduce(g, [&](std::span<const double> x) {
    const double lp = eval_f(model, x) - logZ;
    if (lp < -700.0) return 0.0;
    return std::exp(lp) * (lp - log_q_at(q, g, stride, x));
  });
}

}  // namespace mfcert
