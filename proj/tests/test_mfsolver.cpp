#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfcert/certify.hpp"
#include "mfcert/error.hpp"
#include "mfcert/mfsolver.hpp"

using namespace mfcert;

namespace {

const Matrix kPair = Matrix::from_rows({{1.5, -0.5}, {-0.5, 1.5}});

}  // namespace

TEST_CASE("Gaussian target: marginals are N(m_i, 1/A_ii)") {
  const Matrix a = Matrix::from_rows({{2.0, 0.5, 0.0}, {0.5, 1.5, 0.3}, {0.0, 0.3, 1.0}});
  const std::vector<double> b = {0.5, -0.2, 0.1};
  const auto r = cavi_solve(QuadraticModel{a, b});
  const auto mu = solve_spd(a, b);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(mean(r.qstar[i]) == doctest::Approx(mu[i]).epsilon(1e-7));
    CHECK(variance(r.qstar[i]) == doctest::Approx(1.0 / a(i, i)).epsilon(1e-7));
  }
  CHECK(r.residual < 1e-8);
  CHECK(r.mode == SolveMode::Lebesgue);
}

TEST_CASE("ELBO trace never decreases under coordinate ascent") {
  const PairwiseGibbs m{quartic_well(1.0, 1.0), neg_sqrt_kernel(), CouplingMatrix(cycle_graph(5))};
  const auto grids = default_grids(m, {});
  const auto r = cavi_solve(m, random_init(grids, kappa_of(m), 11));
  REQUIRE(r.elbo_trace.size() > 2);
  for (std::size_t k = 1; k < r.elbo_trace.size(); ++k) CHECK(r.elbo_trace[k] >= r.elbo_trace[k - 1] - 1e-10);
}

TEST_CASE("different starting points reach the same fixed point") {
  const PairwiseGibbs m{quartic_well(1.0, 1.0, 0.3), neg_logcosh_kernel(), CouplingMatrix(cycle_graph(4))};
  const auto grids = default_grids(m, {});
  const auto a = cavi_solve(m);
  const auto b = cavi_solve(m, random_init(grids, kappa_of(m), 5));
  for (std::size_t i = 0; i < 4; ++i) CHECK(w2(a.qstar[i], b.qstar[i]) < 1e-6);
}

TEST_CASE("Jacobi and Gauss-Seidel agree at convergence") {
  SolveOptions jac;
  jac.schedule = Schedule::Jacobi;
  jac.damping = 0.3;
  const auto gs = cavi_solve(QuadraticModel{kPair, {}});
  const auto jr = cavi_solve(QuadraticModel{kPair, {}}, std::nullopt, jac);
  for (std::size_t i = 0; i < 2; ++i) CHECK(variance(jr.qstar[i]) == doctest::Approx(variance(gs.qstar[i])).epsilon(1e-7));
}

TEST_CASE("reference mode with a flat objective returns the reference") {
  const auto ref = gaussian_reference(2, 0.5);
  const QuadraticModel zero{Matrix(2, 2, 0.0), {}, true};
  const auto r = cavi_solve_ref(zero, ref);
  CHECK(r.mode == SolveMode::Reference);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(mean(r.qstar[i]) == doctest::Approx(0.0).scale(1.0));
    CHECK(variance(r.qstar[i]) == doctest::Approx(0.5).epsilon(1e-8));
  }
}

TEST_CASE("reference mode against N(0,t): variance 1/(1/t + A_ii)") {
  const double t = 2.0;
  const auto ref = gaussian_reference(2, t);
  const auto r = cavi_solve_ref(QuadraticModel{kPair, {}, true}, ref);
  for (std::size_t i = 0; i < 2; ++i) CHECK(variance(r.qstar[i]) == doctest::Approx(1.0 / (1.0 / t + 1.5)).epsilon(1e-7));
}

TEST_CASE("log concavity of a Gaussian grid density") {
  const Grid g = Grid::centered(0.0, 8.0, 801);
  CHECK(log_concavity(gaussian_density(g, 0.0, 0.25)) == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("conditional log density is linear-quadratic for a Gaussian") {
  const Model m = QuadraticModel{kPair, {}};
  const auto grids = default_grids(m, {});
  ProductMeasure q = {gaussian_density(grids[0], 0.0, 1.0), gaussian_density(grids[1], 0.8, 1.0)};
  const auto c = conditional_logdensity(m, q, 0);
  // E[f | x0 = x] = -0.75 x² + 0.5 x E[x1] + const
  const Grid& g = grids[0];
  for (std::size_t k : {100u, 400u, 700u}) {
    const double x = g.point(k), x0 = g.point(512);
    const double expect = -0.75 * (x * x - x0 * x0) + 0.4 * (x - x0);
    CHECK(c[k] - c[512] == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("tilt fixed point for a quadratic objective") {
  const Matrix a = Matrix::from_rows({{1.0, 0.5}, {0.5, 2.0}});
  const std::vector<double> b = {1.0, -0.5};
  const double t = 0.7;
  const auto r = tilt_solve(QuadraticModel{a, b, true}, t);
  // y = t(b - A y)  =>  (I + tA) y = t b
  Matrix lhs = a;
  lhs *= t;
  lhs += Matrix::identity(2);
  const auto y = solve_spd(lhs, std::vector<double>{t * b[0], t * b[1]});
  CHECK(r.ystar[0] == doctest::Approx(y[0]).epsilon(1e-8));
  CHECK(r.ystar[1] == doctest::Approx(y[1]).epsilon(1e-8));
  // E_{N(y,tI)} f = -½ yᵀAy - ½ t tr A + bᵀy
  const double yay = y[0] * (a(0, 0) * y[0] + a(0, 1) * y[1]) + y[1] * (a(1, 0) * y[0] + a(1, 1) * y[1]);
  const double value = -0.5 * yay - 0.5 * t * 3.0 + b[0] * y[0] + b[1] * y[1] - (y[0] * y[0] + y[1] * y[1]) / (2.0 * t);
  CHECK(r.value == doctest::Approx(value).epsilon(1e-8));
}

TEST_CASE("solver refuses non-concave targets") {
  CHECK_THROWS_AS(cavi_solve(QuadraticModel{Matrix::from_rows({{1.0, 2.0}, {2.0, 1.0}}), {}}), Error);
}

TEST_CASE("elbo equals the Gaussian closed form") {
  const auto r = cavi_solve(QuadraticModel{kPair, {}});
  // ½ Σ log(2π / A_ii)
  const double expect = std::log(2.0 * std::numbers::pi / 1.5);
  CHECK(elbo(QuadraticModel{kPair, {}}, r.qstar) == doctest::Approx(expect).epsilon(1e-8));
}
