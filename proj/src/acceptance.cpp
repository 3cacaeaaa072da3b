#include "mfcert/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

#include "mfcert/error.hpp"
#include "mfcert/rng.hpp"

namespace mfcert::acceptance {
namespace {

constexpr double kPi = std::numbers::pi;

class Recorder {
 public:
  explicit Recorder(Criterion& c) : c_(c) {}

  void near(const std::string& name, double measured, double target, double tol) {
    c_.checks.push_back({name, measured, target, tol, "near", std::abs(measured - target) <= tol});
  }
  void le(const std::string& name, double lhs, double rhs, double slack = 0.0) {
    c_.checks.push_back({name, lhs, rhs, slack, "le", lhs <= rhs + slack});
  }
  void truth(const std::string& name, bool ok) {
    c_.checks.push_back({name, ok ? 1.0 : 0.0, 1.0, 0.0, "true", ok});
  }

 private:
  Criterion& c_;
};

// ---- fixtures -------------------------------------------------------------

Matrix sym2(double d, double o) { return Matrix::from_rows({{d, o}, {o, d}}); }

Matrix path_graph(std::size_t n) {
  Matrix a(n, n);
  for (std::size_t i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
  return a;
}

Model pairwise(ScalarPotential v, InteractionKernel k, Matrix j) {
  return PairwiseGibbs{std::move(v), std::move(k), CouplingMatrix(std::move(j))};
}

struct Named {
  std::string name;
  Model model;
};

/// Quartic-well sandwich models: two kernels on the chain and the triangle.
std::vector<Named> brute_fixtures() {
  std::vector<Named> out;
  const ScalarPotential v = quartic_well(1.0, 1.0);
  for (const auto& [kname, k] : {std::pair{"quad", neg_quadratic_kernel()}, std::pair{"sqrt", neg_sqrt_kernel()}}) {
    out.push_back({std::string("chain3/") + kname, pairwise(v, k, path_graph(3))});
    out.push_back({std::string("triangle/") + kname, pairwise(v, k, complete_graph(3))});
  }
  return out;
}

BayesLinReg bayes_fixture(std::vector<double> y) {
  const Matrix x = Matrix::from_rows({{1.0, 0.5}, {0.0, std::sqrt(0.75)}});
  return make_bayes(x, std::move(y), 1.0, quartic_well(1.0, 0.25));
}

/// Every non-Gaussian and Gaussian fixture used by the structural criteria.
std::vector<Named> structural_fixtures() {
  std::vector<Named> out;
  out.push_back({"gauss-pair", QuadraticModel{sym2(1.5, -0.5), {}, false}});
  for (auto& f : brute_fixtures()) out.push_back(std::move(f));
  out.push_back({"cycle5/logcosh", pairwise(quartic_well(1.0, 0.5, 0.3), neg_logcosh_kernel(), cycle_graph(5))});
  out.push_back({"bayes", bayes_fixture({0.7, -1.2})});
  return out;
}

/// Seeded SPD precision with off-diagonals shrunk until lambda_min >= 0.2.
Matrix random_spd(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0xacce);
  Matrix d(n, n), o(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    d(i, i) = 1.0 + rng.uniform();
    for (std::size_t j = i + 1; j < n; ++j) o(i, j) = o(j, i) = 2.0 * rng.uniform() - 1.0;
  }
  auto combine = [&](double s) {
    Matrix a = o;
    a *= s;
    a += d;
    return a;
  };
  if (symmetric_eigen(combine(1.0)).values.front() >= 0.2) return combine(1.0);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (symmetric_eigen(combine(mid)).values.front() >= 0.2 ? lo : hi) = mid;
  }
  return combine(lo);
}

// ---- independent closed forms ----------------------------------------------

/// log ∫ exp(-x^T A x / 2) from the eigenvalues.
double gaussian_logz(const Matrix& a) {
  double s = 0.0;
  for (double l : symmetric_eigen(a).values) s += std::log(l);
  return 0.5 * static_cast<double>(a.rows()) * std::log(2.0 * kPi) - 0.5 * s;
}

double gaussian_rf(const Matrix& a) {
  double diag = 0.0, eig = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) diag += std::log(a(i, i));
  for (double l : symmetric_eigen(a).values) eig += std::log(l);
  return 0.5 * (diag - eig);
}

/// Thomas algorithm for a constant tridiagonal system.
std::vector<double> tridiag_solve(std::size_t n, double diag, double off, std::vector<double> rhs) {
  std::vector<double> c(n);
  double denom = diag;
  c[0] = off / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag - off * c[i - 1];
    c[i] = off / denom;
    rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
  return rhs;
}

double max_marginal_w2(const ProductMeasure& a, const ProductMeasure& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, w2(a[i], b[i]));
  return worst;
}

double sup_log_gap(const GridDensity& a, const GridDensity& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a.log_pdf(k) - b.log_pdf(k)));
  return worst;
}

double min_increment(const std::vector<double>& trace) {
  double worst = 0.0;
  for (std::size_t k = 1; k < trace.size(); ++k) worst = std::min(worst, trace[k] - trace[k - 1]);
  return worst;
}

// ---- criteria -------------------------------------------------------------

void gaussian_oracle(Recorder& r) {
  {
    const Matrix a = sym2(1.5, -0.5);
    const Model m = QuadraticModel{a, {}, false};
    const SolveResult s = cavi_solve(m);
    const Certificate c = certify(m, s.qstar);
    const double logz = std::log(2.0 * kPi) - 0.5 * std::log(2.0);
    r.near("fixture logZ", gaussian_logz(a), 1.4913035, 1e-5);
    r.near("fixture R_f", logz - c.elbo, 0.0588915, 1e-5);
    r.near("fixture var_bound", c.var_bound, 1.0 / 6.0, 1e-5);
    r.near("fixture cross_bound", c.cross_bound, 0.25, 1e-5);
  }
  double worst_var = 0.0, worst_elbo = 0.0, worst_bound = -1e300;
  bool contains = true;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::size_t n = 2 + seed % 3;
    const Matrix a = random_spd(n, seed);
    const Model m = QuadraticModel{a, {}, false};
    const SolveResult s = cavi_solve(m);
    const Certificate c = certify(m, s.qstar);
    for (std::size_t i = 0; i < n; ++i)
      worst_var = std::max(worst_var, std::abs(variance(s.qstar[i]) * a(i, i) - 1.0));
    const double logz = gaussian_logz(a);
    worst_elbo = std::max(worst_elbo, std::abs(c.elbo - (logz - gaussian_rf(a))));
    contains = contains && c.logZ_lo <= logz && logz <= c.logZ_hi;
    worst_bound = std::max(worst_bound, c.var_bound - c.cross_bound);
  }
  r.near("25 SPD: max relative error of marginal variances vs 1/A_ii", worst_var, 0.0, 1e-4);
  r.near("25 SPD: max |elbo - (logZ - R_f)|", worst_elbo, 0.0, 1e-5);
  r.truth("25 SPD: certificate interval contains logZ", contains);
  r.le("25 SPD: max (var_bound - cross_bound)", worst_bound, 0.0, 1e-6);
}

void brute_sandwich(Recorder& r, const Fixtures& fx) {
  std::vector<Named> models;
  if (fx.brute_model) {
    const std::size_t n = dimension(fx.brute_model->model);
    require(n <= 4, Errc::DimensionTooLarge,
            "brute suite: fixture has n = " + std::to_string(n) + "; brute force is limited to n <= 4");
    models.push_back({"fixture", fx.brute_model->model});
  } else {
    models = brute_fixtures();
  }
  for (const auto& [name, m] : models) {
    const SolveResult s = cavi_solve(m);
    const Certificate c = certify(m, s.qstar);
    const BruteResult b = brute_logZ(m);
    r.truth(name + ": brute refinement converged", b.converged);
    r.le(name + ": elbo <= brute logZ", c.elbo, b.logZ, 1e-5);
    r.le(name + ": brute logZ <= elbo + min(var, cross)", b.logZ, c.elbo + std::min(c.var_bound, c.cross_bound), 1e-5);
    r.near(name + ": brute logZ - elbo vs H(Q*|P)", b.logZ - c.elbo, relative_entropy_qp(m, s.qstar, b.logZ), 1e-5);
  }
}

void monotone_unique(Recorder& r) {
  for (const auto& [name, m] : structural_fixtures()) {
    SolveOptions opts;
    const SolveResult s = cavi_solve(m, std::nullopt, opts);
    r.le(name + ": -min ELBO increment", -min_increment(s.elbo_trace), 0.0, 1e-9);
    const auto grids = default_grids(m, opts);
    const double kappa = kappa_of(m);
    const SolveResult a = cavi_solve(m, random_init(grids, kappa, 11), opts);
    const SolveResult b = cavi_solve(m, random_init(grids, kappa, 23), opts);
    r.le(name + ": -min ELBO increment (random start)", -std::min(min_increment(a.elbo_trace), min_increment(b.elbo_trace)),
         0.0, 1e-9);
    r.le(name + ": max marginal W2 between random starts", max_marginal_w2(a.qstar, b.qstar), 1e-4);
  }
}

void log_concave(Recorder& r) {
  for (const auto& [name, m] : structural_fixtures()) {
    const SolveResult s = cavi_solve(m);
    const double kappa = kappa_of(m);
    double worst = -1e300;
    for (const auto& q : s.qstar) {
      const double h = q.grid().spacing();
      for (std::size_t k = 1; k + 1 < q.size(); ++k) {
        if (q.pdf(k) <= 1e-12) continue;
        const double d2 = (q.log_pdf(k + 1) - 2.0 * q.log_pdf(k) + q.log_pdf(k - 1)) / (h * h);
        worst = std::max(worst, d2 + kappa);
      }
    }
    r.le(name + ": max (second difference of log q* + kappa)", worst, 0.0, 1e-3);
  }
}

void symmetry(Recorder& r) {
  std::vector<Named> even = brute_fixtures();
  even.push_back({"cycle6/sqrt", pairwise(quartic_well(1.0, 1.0), neg_sqrt_kernel(), cycle_graph(6))});
  for (const auto& [name, m] : even) {
    const SolveResult s = cavi_solve(m);
    double worst = 0.0;
    for (const auto& q : s.qstar) worst = std::max(worst, std::abs(mean(q)));
    r.le(name + ": max |mean(q*_i)| (even f)", worst, 1e-6);
  }
  const std::vector<Named> cycles = {
      {"cycle5/logcosh/shifted", pairwise(quartic_well(1.0, 0.5, 0.3), neg_logcosh_kernel(), cycle_graph(5))},
      {"cycle6/sqrt/shifted", pairwise(quartic_well(1.0, 1.0, -0.4), scaled(neg_sqrt_kernel(), 0.7), cycle_graph(6))},
      {"cycle7/quad", pairwise(gaussian_well(1.0, 0.2), scaled(neg_quadratic_kernel(), 0.3), cycle_graph(7))}};
  for (const auto& [name, m] : cycles) {
    const SolveResult s = cavi_solve(m);
    double worst = 0.0;
    for (std::size_t i = 0; i < s.qstar.size(); ++i)
      for (std::size_t j = i + 1; j < s.qstar.size(); ++j) worst = std::max(worst, w2(s.qstar[i], s.qstar[j]));
    r.le(name + ": max pairwise marginal W2", worst, 1e-5);
  }
}

void doubly_stochastic(Recorder& r) {
  {
    const ScalarLimit g = scalar_limit(gaussian_well(1.0), neg_quadratic_kernel());
    r.near("Gaussian scalar limit value", g.value, -0.5 + 0.5 * std::log(kPi * std::numbers::e), 1e-5);
    r.near("Gaussian scalar limit value (stated)", g.value, 0.5723649, 1e-5);
  }
  struct Case {
    std::string name;
    ScalarPotential v;
    InteractionKernel k;
    Matrix j;
  };
  const std::vector<Case> cases = {
      {"complete6/gauss", gaussian_well(1.0), neg_quadratic_kernel(), row_normalized(complete_graph(6))},
      {"complete6/quartic-sqrt", quartic_well(1.0, 1.0), neg_sqrt_kernel(), row_normalized(complete_graph(6))},
      {"cycle6/quartic-sqrt", quartic_well(1.0, 1.0), neg_sqrt_kernel(), row_normalized(cycle_graph(6))},
      {"cycle5/logcosh", quartic_well(1.0, 0.5, 0.3), neg_logcosh_kernel(), row_normalized(cycle_graph(5))}};
  for (const auto& c : cases) {
    const ScalarLimit lim = scalar_limit(c.v, c.k);
    const PairwiseGibbs m{c.v, c.k, CouplingMatrix(c.j)};
    const FiniteVsLimit f = finite_vs_limit(m, lim);
    r.near(c.name + ": elbo/n vs scalar limit", f.elbo_per_site, lim.value, 1e-6);
  }
  std::vector<double> budget;
  for (std::size_t d : {2, 4, 8, 16}) {
    const ScalarPotential v = quartic_well(1.0, 1.0);
    const InteractionKernel k = neg_sqrt_kernel();
    const ScalarLimit lim = scalar_limit(v, k);
    const PairwiseGibbs m{v, k, CouplingMatrix(row_normalized(dregular_graph(32, d, 7)))};
    budget.push_back(finite_vs_limit(m, lim).rf_budget_per_site);
  }
  for (std::size_t k = 1; k < budget.size(); ++k)
    r.le("d-regular n=32: rf_budget_per_site(d=" + std::to_string(2 << k) + ") < previous", budget[k],
         budget[k - 1] * (1.0 - 1e-12));
}

void block_graphon(Recorder& r) {
  const ScalarPotential v = quartic_well(1.0, 1.0);
  const InteractionKernel k = neg_sqrt_kernel();
  LimitOptions opts;
  opts.tol = 1e-11;
  {
    const ScalarLimit s = scalar_limit(v, k, opts);
    const BlockLimit b = block_limit(v, k, Matrix::from_rows({{1.0}}), opts);
    r.near("m=1: block value (unshifted) vs scalar", b.value - b.v_shift, s.value, 1e-10);
    r.le("m=1: sup |log q_block - log q_scalar|", sup_log_gap(b.blocks[0], s.q), 1e-10);
  }
  {
    const std::vector<double> w = {1.0, 2.0};
    const BlockLimit b = block_limit(v, k, Matrix::from_rows({{w[0], 0.0}, {0.0, w[1]}}), opts);
    double value = 0.0, gap = 0.0;
    for (std::size_t a = 0; a < 2; ++a) {
      const ScalarLimit s = scalar_limit(v, scaled(k, w[a] / 2.0), opts);
      value += 0.5 * s.value;
      gap = std::max(gap, sup_log_gap(b.blocks[a], s.q));
    }
    r.near("block-diagonal: value vs decoupled scalar limits", b.value - b.v_shift, value, 1e-8);
    r.le("block-diagonal: sup log-density gap per block", gap, 1e-8);
  }
  {
    const double w = 1.5;
    LimitOptions ropts = opts;
    ropts.random_init_seed = 5;
    const BlockLimit b = block_limit(v, k, Matrix::from_rows({{0.0, w}, {w, 0.0}}), ropts);
    const ScalarLimit s = scalar_limit(v, scaled(k, w / 2.0), opts);
    r.near("2-block cross: value vs symmetric reduction", b.value - b.v_shift, s.value, 1e-6);
    r.le("2-block cross: max W2(block, reduction)", std::max(w2(b.blocks[0], s.q), w2(b.blocks[1], s.q)), 1e-6);
  }
}

void bayes(Recorder& r) {
  RngStream rng(2024, 0xba);
  double worst_cross = 0.0;
  for (int k = 0; k < 5; ++k) {
    const std::vector<double> y = {2.0 * rng.normal(), 2.0 * rng.normal()};
    const BayesLinReg b = bayes_fixture(y);
    const Model m = b;
    const SolveResult s = cavi_solve(m);
    const Certificate c = certify(m, s.qstar);
    worst_cross = std::max(worst_cross, std::abs(c.cross_bound - 1.0 / 9.0));
    const BruteResult t = brute_logZ(m);
    r.le("y#" + std::to_string(k) + ": |brute logZ - mf| <= cross_bound", std::abs(t.logZ - c.elbo), c.cross_bound);
  }
  r.near("cross_bound (max deviation from 1/9 over y)", worst_cross, 0.0, 1e-9);
  const double top = 1.0 * 1.0 + 0.5 + std::sqrt(2.0 * 0.25);
  const double hand = 1.0 * top * top / (2.0 * 1.5 * 1.5 * 1.5);
  r.near("bayes_lln_rhs vs hand arithmetic", bayes_lln_rhs(bayes_fixture({0.0, 0.0})), hand, 1e-9);
}

void concentration_suite(Recorder& r) {
  const std::size_t n = 50;
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = 2.0;
    if (i + 1 < n) a(i, i + 1) = a(i + 1, i) = -0.5;
  }
  const Model m = QuadraticModel{a, {}, false};
  const SolveResult s = cavi_solve(m);
  const Certificate c = certify(m, s.qstar);
  const double kappa = kappa_of(m);
  const auto x = tridiag_solve(n, 2.0, -0.5, std::vector<double>(n, 1.0));
  double exact = 0.0;
  for (double v : x) exact += v;
  exact /= static_cast<double>(n * n);
  const double root = 1.0 + std::sqrt(2.0 * c.cross_bound);
  r.le("tridiagonal: exact lhs <= (1 + sqrt(2 Rbar))^2 / (kappa n)", exact, root * root / (kappa * static_cast<double>(n)));

  ChainOptions co;
  co.seed = 9;
  const LlnCheck lln = lln_check(m, s.qstar, c, Phi::Identity, co);
  r.near("tridiagonal: MALA lhs vs exact (3 sigma)", lln.lhs_estimate, exact, 3.0 * lln.lhs_stderr);

  std::vector<Matrix> gaussians = {sym2(1.5, -0.5), a};
  for (std::uint64_t seed = 0; seed < 25; ++seed) gaussians.push_back(random_spd(2 + seed % 3, seed));
  double worst = -1e300;
  for (const Matrix& g : gaussians) {
    const Matrix inv = inverse_spd(g);
    double lhs = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const double d = std::sqrt(inv(i, i)) - 1.0 / std::sqrt(g(i, i));
      lhs += d * d;
    }
    const double kap = symmetric_eigen(g).values.front();
    worst = std::max(worst, lhs - 2.0 * gaussian_rf(g) / kap);
  }
  r.le("W2 subadditivity k=1: max over Gaussian fixtures of lhs - 2 R_f / kappa", worst, 0.0);
}

void control_suite(Recorder& r) {
  const double log2 = std::log(2.0);
  {
    Matrix a(2, 2, 0.25);
    ControlProblem p{2, 1.0, QuadraticModel{a, {0.0, 0.0}, true}, {}};
    p.sde.dt = 1e-3;
    p.sde.paths = 20000;
    p.sde.seed = 31;
    const ControlReport rep = run_control(p);
    const double v_orig = -0.25 * log2;
    const double v_dstr = v_orig - 0.25 * std::log(2.25 / 2.0);
    r.near("v_orig", rep.v_orig.lo, v_orig, 1e-4);
    r.near("v_orig (stated)", rep.v_orig.lo, -0.1732868, 1e-4);
    r.near("v_dstr", rep.v_dstr, v_dstr, 1e-4);
    r.near("v_dstr (stated)", rep.v_dstr, -0.2027325, 1e-4);
    r.near("gap v_orig - v_dstr", rep.v_orig.lo - rep.v_dstr, 0.0294457, 1e-4);
    r.near("gap_bound", rep.bounds.gap_bound, 0.125, 1e-4);
    r.le("gap <= gap_bound", rep.v_orig.lo - rep.v_dstr, rep.bounds.gap_bound);
    r.le("0 <= v_orig - v_det", 0.0, rep.v_orig.lo - rep.v_det);
    r.le("v_orig - v_det <= det_gap_bound", rep.v_orig.lo - rep.v_det, rep.bounds.det_gap_bound);
    r.near("simulate vs v_dstr (3 sigma)", rep.sim->mean, rep.v_dstr, 3.0 * rep.sim->stderr_);
  }
  {
    Matrix zero(2, 2);
    ControlProblem p{2, 1.0, QuadraticModel{zero, {0.5, 0.5}, true}, {}};
    ControlOptions o;
    o.simulate = false;
    const ControlReport rep = run_control(p, o);
    r.near("affine: v_orig vs c^2 T / 2", rep.v_orig.lo, 0.5, 1e-6);
    r.near("affine: v_dstr vs v_orig", rep.v_dstr, rep.v_orig.lo, 1e-6);
    r.near("affine: v_det vs v_orig", rep.v_det, rep.v_orig.lo, 1e-6);
    r.near("affine: gap_bound", rep.bounds.gap_bound, 0.0, 0.0);
    r.near("affine: det_gap_bound", rep.bounds.det_gap_bound, 0.0, 0.0);
  }
  {
    const Model f = pairwise(gaussian_well(1.0, 1.0), zero_kernel(), Matrix(1, 1));
    const TiltResult t = tilt_solve(f, 1.0);
    r.near("tilt y*", t.ystar[0], 0.5, 1e-8);
    r.near("tilt value", t.value, -0.75, 1e-8);
    const double logint = brute_logZ(add_gaussian_reference(f, 1.0)).logZ - 0.5 * std::log(2.0 * kPi);
    r.near("log E_gamma e^f", logint, -0.5 * log2 - 0.25, 1e-6);
    const double bound = 0.5 * gaussian_hessian_sq(f, t.ystar, 1.0);
    r.near("tilt bound term", bound, 0.5, 1e-8);
    r.le("tilt value <= log E_gamma e^f", t.value, logint);
    r.le("log E_gamma e^f <= value + bound", logint, t.value + bound);
  }
}

struct Entry {
  int id;
  const char* title;
  const char* suite;
};

constexpr Entry kEntries[] = {
    {1, "Gaussian oracle", "gaussian"},
    {2, "brute-force sandwich", "brute"},
    {3, "ELBO monotonicity and uniqueness", "gibbs"},
    {4, "kappa-log-concavity of Q*", "gibbs"},
    {5, "symmetry lemmas", "gibbs"},
    {6, "doubly stochastic limit", "limits"},
    {7, "block graphon", "limits"},
    {8, "Bayesian linear regression", "bayes"},
    {9, "concentration", "sampler"},
    {10, "control", "control"},
};

}  // namespace

bool Criterion::pass() const {
  if (!error.empty() || checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string Criterion::line() const {
  char head[160];
  std::snprintf(head, sizeof head, "criterion %2d %s  %s  (%zu checks, %.1f s)", id, pass() ? "PASS" : "FAIL",
                title.c_str(), checks.size(), seconds);
  std::string out = head;
  if (!error.empty()) out += "  error: " + error;
  for (const auto& c : checks) {
    if (c.pass) continue;
    char buf[256];
    std::snprintf(buf, sizeof buf, "  [%s: measured %.9g, %s %.9g, tol %.3g]", c.name.c_str(), c.measured,
                  c.relation == "le" ? "rhs" : "target", c.target, c.tol);
    out += buf;
  }
  return out;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"gaussian", "brute", "gibbs", "limits",
                                                 "bayes",    "sampler", "control", "all"};
  return names;
}

std::vector<int> suite_criteria(const std::string& suite) {
  std::vector<int> ids;
  for (const auto& e : kEntries)
    if (suite == "all" || suite == e.suite) ids.push_back(e.id);
  require(!ids.empty(), Errc::InvalidArgument, "unknown acceptance suite \"" + suite + "\"");
  return ids;
}

Criterion run_criterion(int id, const Fixtures& fixtures) {
  const auto* entry = std::find_if(std::begin(kEntries), std::end(kEntries), [id](const Entry& e) { return e.id == id; });
  require(entry != std::end(kEntries), Errc::InvalidArgument, "no acceptance criterion " + std::to_string(id));
  Criterion c;
  c.id = id;
  c.title = entry->title;
  Recorder rec(c);
  const auto start = std::chrono::steady_clock::now();
  try {
    switch (id) {
      case 1: gaussian_oracle(rec); break;
      case 2: brute_sandwich(rec, fixtures); break;
      case 3: monotone_unique(rec); break;
      case 4: log_concave(rec); break;
      case 5: symmetry(rec); break;
      case 6: doubly_stochastic(rec); break;
      case 7: block_graphon(rec); break;
      case 8: bayes(rec); break;
      case 9: concentration_suite(rec); break;
      case 10: control_suite(rec); break;
    }
  } catch (const Error& e) {
    if (e.code() == Errc::DimensionTooLarge && fixtures.brute_model) throw;
    c.error = std::string(code_name(e.code())) + ": " + e.what();
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return c;
}

json to_json(const Criterion& c) {
  json checks = json::array();
  for (const auto& k : c.checks)
    checks.push_back({{"name", k.name},
                      {"relation", k.relation},
                      {"measured", k.measured},
                      {"target", k.target},
                      {"tolerance", k.tol},
                      {"pass", k.pass}});
  return {{"id", c.id},
          {"title", c.title},
          {"pass", c.pass()},
          {"error", c.error.empty() ? json(nullptr) : json(c.error)},
          {"checks", checks}};
}

}  // namespace mfcert::acceptance
