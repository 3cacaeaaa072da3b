#include "mfcert/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "mfcert/certify.hpp"
#include "mfcert/error.hpp"
#include "mfcert/parallel.hpp"
#include "mfcert/rng.hpp"

namespace mfcert {

std::string source_name(SampleSource s) {
  switch (s) {
    case SampleSource::Mala: return "mala";
    case SampleSource::Ula: return "ula";
    case SampleSource::GaussianExact: return "gaussian_exact";
    case SampleSource::ProductExact: return "product_exact";
  }
  return "unknown";
}

std::vector<double> SampleSet::column(std::size_t i) const {
  std::vector<double> c(n_draws());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = draws[k * n + i];
  return c;
}

namespace {

// Gershgorin bound on the largest eigenvalue of -∇²f at x.
double curvature_bound(const Model& model, std::span<const double> x) {
  const std::size_t n = x.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double diag;
    const auto* bb = std::get_if<BlackBox>(&model);
    if (bb && !bb->hess_diag) {
      const double h = 1e-4 * std::max(1.0, std::abs(x[i]));
      std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
      xp[i] += h;
      xm[i] -= h;
      diag = (partial_i(model, xp, i) - partial_i(model, xm, i)) / (2.0 * h);
    } else {
      diag = hess_ii(model, x, i);
    }
    double row = std::abs(diag);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row += std::abs(cross_ij(model, x, i, j));
    worst = std::max(worst, row);
  }
  return worst;
}

struct ChainOutput {
  std::vector<double> draws;
  std::size_t accepted = 0;
  std::size_t proposals = 0;
  double step = 0.0;
};

}  // namespace

SampleSet sample_p(const Model& model, const ChainOptions& opts) {
  require(opts.steps > opts.burnin, Errc::InvalidArgument, "chain: steps must exceed burnin");
  require(opts.n_chains >= 1 && opts.thin >= 1, Errc::InvalidArgument, "chain: need at least one chain");
  const double kappa = kappa_of(model);
  const std::size_t n = dimension(model);
  const auto mode = find_mode(model);
  const double limit = 4.0 * 12.0 / std::sqrt(kappa);
  const double h_cap = 1.9 / std::max(curvature_bound(model, mode), kappa);
  if (opts.step_size) require(*opts.step_size > 0.0, Errc::InvalidArgument, "chain: step size must be positive");
  const double h0 = opts.step_size ? *opts.step_size : std::min(0.5 / kappa, h_cap);
  const CounterRng rng(opts.seed);

  std::vector<ChainOutput> out(opts.n_chains);
  parallel_for(opts.n_chains, [&](std::size_t c) {
    ChainOutput& co = out[c];
    std::vector<double> x = mode, y(n), gx = gradient(model, x), gy(n);
    double fx = eval_f(model, x);
    double log_h = std::log(h0);
    for (std::size_t step = 0; step < opts.steps; ++step) {
      const double h = std::exp(log_h);
      const double sh = std::sqrt(h);
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + 0.5 * h * gx[i] + sh * rng.normal(c, step, i);
      double accept_prob = 1.0;
      double fy = 0.0;
      bool ok = true;
      for (std::size_t i = 0; i < n; ++i) ok = ok && std::abs(y[i] - mode[i]) <= limit;
      if (!ok) fail(Errc::DivergentChain, "chain left the window at step " + std::to_string(step));
      fy = eval_f(model, y);
      gy = gradient(model, y);
      if (opts.mala) {
        // log q(x|y) - log q(y|x) for the Langevin proposal.
        double fwd = 0.0, bwd = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double a = y[i] - x[i] - 0.5 * h * gx[i];
          const double b = x[i] - y[i] - 0.5 * h * gy[i];
          fwd += a * a;
          bwd += b * b;
        }
        const double log_ratio = fy - fx + (fwd - bwd) / (2.0 * h);
        accept_prob = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
      }
      const bool accept = !opts.mala || rng.uniform(c, step, n + 1) < accept_prob;
      if (accept) {
        std::swap(x, y);
        std::swap(gx, gy);
        fx = fy;
      }
      if (step < opts.burnin) {
        if (!opts.step_size && opts.mala) {
          const double gamma = 1.0 / std::pow(static_cast<double>(step) + 10.0, 0.6);
          log_h = std::min(log_h + gamma * (accept_prob - 0.574), std::log(h_cap));
        }
      } else {
        ++co.proposals;
        co.accepted += accept ? 1 : 0;
        if ((step - opts.burnin) % opts.thin == 0) co.draws.insert(co.draws.end(), x.begin(), x.end());
      }
    }
    co.step = std::exp(log_h);
  });

  SampleSet s;
  s.n = n;
  s.source = opts.mala ? SampleSource::Mala : SampleSource::Ula;
  std::size_t acc = 0, prop = 0;
  for (const auto& co : out) {
    s.draws.insert(s.draws.end(), co.draws.begin(), co.draws.end());
    acc += co.accepted;
    prop += co.proposals;
  }
  s.acceptance = prop ? static_cast<double>(acc) / static_cast<double>(prop) : 0.0;
  s.step_size = out.front().step;
  for (std::size_t i = 0; i < n; ++i) {
    // ESS per chain, summed, so batches never straddle two chains.
    const std::size_t per = out.front().draws.size() / n;
    double ess = 0.0;
    for (const auto& co : out) {
      std::vector<double> col(per);
      for (std::size_t k = 0; k < per; ++k) col[k] = co.draws[k * n + i];
      ess += batch_means_ess(col);
    }
    s.ess.push_back(ess);
  }
  return s;
}

std::vector<double> product_draws(const ProductMeasure& q, std::size_t count, std::uint64_t seed,
                                  std::uint64_t stream) {
  const std::size_t n = q.size();
  const CounterRng rng(seed);
  std::vector<double> out(count * n);
  parallel_for(n, [&](std::size_t j) {
    std::vector<double> u(count);
    for (std::size_t s = 0; s < count; ++s) u[s] = rng.uniform(stream, s, j);
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });
    std::vector<double> sorted(count);
    for (std::size_t k = 0; k < count; ++k) sorted[k] = u[order[k]];
    const auto x = quantiles(q[j], sorted);
    for (std::size_t k = 0; k < count; ++k) out[order[k] * n + j] = x[k];
  });
  return out;
}

SampleSet sample_q(const ProductMeasure& q, std::size_t n_draws, std::uint64_t seed) {
  SampleSet s;
  s.n = q.size();
  s.source = SampleSource::ProductExact;
  s.draws = product_draws(q, n_draws, seed, 0);
  s.ess.assign(s.n, static_cast<double>(n_draws));
  return s;
}

SampleSet sample_gaussian(const Matrix& precision, std::span<const double> mean, std::size_t n_draws,
                          std::uint64_t seed) {
  const std::size_t n = precision.rows();
  require(mean.empty() || mean.size() == n, Errc::LengthMismatch, "sample_gaussian: mean length");
  const auto l = cholesky(precision);
  require(l.has_value(), Errc::NotSPD, "sample_gaussian: precision is not positive definite");
  const CounterRng rng(seed);
  SampleSet s;
  s.n = n;
  s.source = SampleSource::GaussianExact;
  s.draws.resize(n_draws * n);
  // A = L L^T, so x = L^{-T} z has covariance A^{-1}.
  parallel_for(n_draws, [&](std::size_t r) {
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal(0x6a55, r, i);
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t k = ii + 1; k < n; ++k) z[ii] -= (*l)(k, ii) * z[k];
      z[ii] /= (*l)(ii, ii);
    }
    for (std::size_t i = 0; i < n; ++i) s.draws[r * n + i] = z[i] + (mean.empty() ? 0.0 : mean[i]);
  });
  s.ess.assign(n, static_cast<double>(n_draws));
  return s;
}

double empirical_w2(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && a.size() >= 2, Errc::LengthMismatch,
          "empirical_w2: samples must have equal length of at least two");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return std::sqrt(s / static_cast<double>(x.size()));
}

namespace {

std::pair<double, double> batch_stats(std::span<const double> x, std::size_t batches, double& total_var) {
  const std::size_t len = x.size() / batches;
  require(len >= 2, Errc::InvalidArgument, "batch means: series too short");
  const std::size_t used = len * batches;
  double mean = 0.0;
  for (std::size_t k = 0; k < used; ++k) mean += x[k];
  mean /= static_cast<double>(used);
  double var = 0.0;
  for (std::size_t k = 0; k < used; ++k) var += (x[k] - mean) * (x[k] - mean);
  total_var = var / static_cast<double>(used - 1);
  double bvar = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    double m = 0.0;
    for (std::size_t k = b * len; k < (b + 1) * len; ++k) m += x[k];
    m /= static_cast<double>(len);
    bvar += (m - mean) * (m - mean);
  }
  bvar /= static_cast<double>(batches - 1);
  return {bvar, static_cast<double>(len)};
}

}  // namespace

double batch_means_ess(std::span<const double> x, std::size_t batches) {
  double total_var = 0.0;
  const auto [bvar, len] = batch_stats(x, batches, total_var);
  if (bvar <= 0.0) return static_cast<double>(x.size());
  return static_cast<double>(batches) * len * total_var / (len * bvar);
}

double batch_means_stderr(std::span<const double> x, std::size_t batches) {
  double total_var = 0.0;
  const auto [bvar, len] = batch_stats(x, batches, total_var);
  (void)len;
  return std::sqrt(bvar / static_cast<double>(batches));
}

double ks_statistic(std::span<const double> x, const GridDensity& q) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const auto F = q.cdf();
  const Grid& g = q.grid();
  auto cdf_at = [&](double v) {
    if (v <= g.lo()) return 0.0;
    if (v >= g.hi()) return 1.0;
    const double pos = (v - g.lo()) / g.spacing();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(pos), g.size() - 2);
    const double t = pos - static_cast<double>(k);
    return (1.0 - t) * F[k] + t * F[k + 1];
  };
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double c = cdf_at(s[k]);
    d = std::max({d, std::abs(c - static_cast<double>(k) / n), std::abs(static_cast<double>(k + 1) / n - c)});
  }
  return d;
}

Phi parse_phi(const std::string& name) {
  if (name == "identity") return Phi::Identity;
  if (name == "abs") return Phi::Abs;
  if (name == "tanh") return Phi::Tanh;
  fail(Errc::InvalidArgument, "unknown test function '" + name + "' (expected identity, abs or tanh)");
}

double apply_phi(Phi phi, double x) {
  switch (phi) {
    case Phi::Identity: return x;
    case Phi::Abs: return std::abs(x);
    case Phi::Tanh: return std::tanh(x);
  }
  return x;
}

LlnCheck lln_check(const Model& model, const ProductMeasure& q, const Certificate& cert, Phi phi,
                   const ChainOptions& opts) {
  const std::size_t n = dimension(model);
  require(q.size() == n, Errc::LengthMismatch, "lln_check: dimension");
  double centre = 0.0;
  for (const auto& d : q) centre += expect(d, [phi](double x) { return apply_phi(phi, x); });
  centre /= static_cast<double>(n);

  const SampleSet s = sample_p(model, opts);
  const std::size_t per_chain = s.n_draws() / opts.n_chains;
  std::vector<double> chain_means;
  LlnCheck r;
  std::vector<double> all(s.n_draws());
  for (std::size_t k = 0; k < s.n_draws(); ++k) {
    double avg = 0.0;
    for (double v : s.row(k)) avg += apply_phi(phi, v);
    const double d = avg / static_cast<double>(n) - centre;
    all[k] = d * d;
  }
  // Batch means within each chain, then combine the chains as independent.
  double sum = 0.0, var = 0.0;
  for (std::size_t c = 0; c < opts.n_chains; ++c) {
    std::span<const double> part(all.data() + c * per_chain, per_chain);
    double m = std::accumulate(part.begin(), part.end(), 0.0) / static_cast<double>(per_chain);
    const double se = batch_means_stderr(part);
    sum += m;
    var += se * se;
  }
  const double chains = static_cast<double>(opts.n_chains);
  r.lhs_estimate = sum / chains;
  r.lhs_stderr = std::sqrt(var) / chains;
  r.rbar = cert.rbar;
  const double root = 1.0 + std::sqrt(2.0 * cert.rbar);
  r.rhs = root * root / (cert.kappa * static_cast<double>(n));
  return r;
}

namespace {

constexpr char kMagic[8] = {'M', 'F', 'C', 'S', 'A', 'M', 'P', '1'};

template <class T>
void put_le(std::ofstream& out, T v) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  out.write(reinterpret_cast<const char*>(&bits), 8);
}

template <class T>
T get_le(std::ifstream& in) {
  std::uint64_t bits = 0;
  in.read(reinterpret_cast<char*>(&bits), 8);
  require(static_cast<bool>(in), Errc::Io, "samples file is truncated");
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  T v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void write_samples(const std::string& path, const SampleSet& s) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::Io, "cannot open " + path + " for writing");
  out.write(kMagic, 8);
  put_le<std::uint64_t>(out, s.n_draws());
  put_le<std::uint64_t>(out, s.n);
  for (double v : s.draws) put_le<double>(out, v);
  require(static_cast<bool>(out), Errc::Io, "failed writing " + path);
}

SampleSet read_samples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::Io, "cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  require(in && std::equal(magic, magic + 8, kMagic), Errc::Io, path + " is not a samples file");
  const auto rows = get_le<std::uint64_t>(in);
  SampleSet s;
  s.n = get_le<std::uint64_t>(in);
  s.draws.resize(rows * s.n);
  for (double& v : s.draws) v = get_le<double>(in);
  return s;
}

}  // namespace mfcert
