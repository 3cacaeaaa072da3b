#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfcert/certify.hpp"
#include "mfcert/error.hpp"
#include "mfcert/oracle.hpp"

using namespace mfcert;

namespace {

const Matrix kPair = Matrix::from_rows({{1.5, -0.5}, {-0.5, 1.5}});

// Black-box solves average over Monte Carlo draws at every grid node.
SolveOptions light() {
  SolveOptions o;
  o.grid_points = 257;
  o.mc_samples = 4000;
  return o;
}

}  // namespace

TEST_CASE("Gaussian pair certificate by hand") {
  const Model m = QuadraticModel{kPair, {}};
  const auto q = cavi_solve(m).qstar;
  const auto c = certify(m, q);
  // Var(∂_i f | X_i) = A_ij² / A_jj = 1/6 per coordinate, κ = 1.
  CHECK(c.kappa == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(c.var_bound == doctest::Approx(1.0 / 6.0).epsilon(1e-7));
  // E|∂_12 f|² = 1/4
  CHECK(c.cross_bound == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(c.bound_source == "var_bound");
  CHECK(c.logZ_lo == doctest::Approx(1.432412).epsilon(1e-6));
  CHECK(c.logZ_hi == doctest::Approx(1.599078).epsilon(1e-6));
  CHECK(c.rbar == doctest::Approx(c.logZ_hi - c.elbo));
  CHECK_FALSE(c.monte_carlo);
  CHECK(c.trJ2_status == "not_applicable");
}

TEST_CASE("certified interval contains the exact Gaussian log Z") {
  const Matrix a = Matrix::from_rows({{2.0, 0.4, 0.1}, {0.4, 1.0, -0.3}, {0.1, -0.3, 1.5}});
  const auto c = certify(QuadraticModel{a, {}}, cavi_solve(QuadraticModel{a, {}}).qstar);
  // log Z = (n/2) log 2π - ½ log det A, det by cofactor expansion
  const double det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                     a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                     a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  const double logz = 1.5 * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det);
  CHECK(c.logZ_lo <= logz);
  CHECK(logz <= c.logZ_hi);
}

TEST_CASE("symmetric pairwise model gets the trace bound") {
  const PairwiseGibbs m{quartic_well(1.0, 1.0), neg_sqrt_kernel(), CouplingMatrix(cycle_graph(4))};
  const auto q = cavi_solve(m).qstar;
  const auto c = certify(m, q);
  REQUIRE(c.trJ2_bound.has_value());
  CHECK(c.trJ2_status == "certified");
  const double k = c.kappa;
  const double expect = 8.0 * m.K.growth.a / (k * k) * std::exp(m.K.growth.b * m.K.growth.b / k);
  CHECK(*c.trJ2_bound == doctest::Approx(expect));
  CHECK(c.logZ_hi == doctest::Approx(c.elbo + std::min({c.var_bound, c.cross_bound, *c.trJ2_bound})));
}

TEST_CASE("trace bound gate trips on asymmetric marginals") {
  const PairwiseGibbs m{quartic_well(1.0, 1.0), neg_sqrt_kernel(), CouplingMatrix(cycle_graph(3))};
  const auto grids = default_grids(m, {});
  ProductMeasure q;
  for (std::size_t i = 0; i < 3; ++i) q.push_back(gaussian_density(grids[i], 0.1 * static_cast<double>(i), 0.5));
  try {
    trJ2_bound(m, q);
    FAIL("gate should trip");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SymmetryGateFailed);
  }
  const auto c = certify(m, q);
  CHECK(c.trJ2_status == "gate_failed");
  CHECK_FALSE(c.trJ2_bound.has_value());
}

TEST_CASE("black-box certificates carry Monte Carlo error") {
  const Matrix a = Matrix::from_rows({{2.0, -0.5}, {-0.5, 2.0}});
  const Model m = quadratic_blackbox(a);
  const auto q = cavi_solve(m, std::nullopt, light()).qstar;
  const auto c = certify(m, q);
  CHECK(c.monte_carlo);
  CHECK(c.elbo_stderr > 0.0);
  // Closed form against the analytic family: cross = a12² / κ².
  const double k = 1.5;
  CHECK(std::abs(c.cross_bound - 0.25 / (k * k)) < 1e-9 + 4.0 * c.cross_stderr);
  const auto exact = gaussian_truth(a);
  CHECK(c.logZ_lo <= exact.logZ + 1e-9);
  CHECK(exact.logZ <= c.logZ_hi);
}

TEST_CASE("black-box Monte Carlo is reproducible for a fixed seed") {
  const Model m = quadratic_lse_blackbox(Matrix::from_rows({{2.0, -0.5}, {-0.5, 2.0}}), 0.5);
  const auto q = cavi_solve(m, std::nullopt, light()).qstar;
  CertifyOptions o;
  o.seed = 17;
  const auto c1 = certify(m, q, o), c2 = certify(m, q, o);
  CHECK(c1.elbo == c2.elbo);
  CHECK(c1.var_bound == c2.var_bound);
}

TEST_CASE("reference-mode kappa adds the reference log-concavity") {
  const auto ref = gaussian_reference(2, 0.5);
  const QuadraticModel g{kPair, {}, true};
  CHECK(certificate_kappa(g, &ref) == doctest::Approx(2.0 + 1.0).epsilon(1e-6));
}

TEST_CASE("concentration report") {
  const Model m = QuadraticModel{kPair, {}};
  const auto c = certify(m, cavi_solve(m).qstar);
  const auto r = concentration(m, c, 1);
  // (1 + √(2 R̄))² / (κ n)
  CHECK(r.lln_rhs == doctest::Approx(std::pow(1.0 + std::sqrt(2.0 * c.rbar), 2) / 2.0));
  CHECK_THROWS_AS(concentration(m, c, 0), Error);
  CHECK_THROWS_AS(concentration(m, c, 3), Error);
}

TEST_CASE("Bayes LLN right-hand side by hand") {
  // Orthonormal design columns: X^T X = I, no cross terms.
  const auto b = make_bayes(Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}}), {0.2, 0.3}, 0.5, gaussian_well(2.0));
  // σ²(κ1σ² + κ2)² / (p (κ1σ² + κ2)³) with κ1 = 2, κ2 = 1, σ² = 0.5
  CHECK(bayes_lln_rhs(b) == doctest::Approx(0.5 / (2.0 * 2.0)));
}
