#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfcert/error.hpp"
#include "mfcert/mfsolver.hpp"
#include "mfcert/oracle.hpp"

using namespace mfcert;

TEST_CASE("Gaussian truth for a 2x2 precision") {
  const Matrix a = Matrix::from_rows({{1.5, -0.5}, {-0.5, 1.5}});
  const auto t = gaussian_truth(a);
  CHECK(t.log_det == doctest::Approx(std::log(2.0)));
  CHECK(t.logZ == doctest::Approx(std::log(2.0 * std::numbers::pi) - 0.5 * std::log(2.0)));
  CHECK(t.rf_exact == doctest::Approx(0.5 * std::log(2.25 / 2.0)));
  CHECK(t.qstar_vars[0] == doctest::Approx(2.0 / 3.0));
  CHECK(t.marginal_vars[0] == doctest::Approx(0.75));
  CHECK_THROWS_AS(gaussian_truth(Matrix::from_rows({{1.0, 2.0}, {2.0, 1.0}})), Error);
}

TEST_CASE("brute force reproduces Gaussian log Z") {
  const Matrix a = Matrix::from_rows({{2.0, 0.3, 0.0}, {0.3, 1.0, 0.2}, {0.0, 0.2, 1.5}});
  const auto r = brute_logZ(QuadraticModel{a, {}});
  CHECK(r.converged);
  CHECK(r.logZ == doctest::Approx(gaussian_truth(a).logZ).epsilon(1e-7));
}

TEST_CASE("brute force on a product model is a sum of 1D integrals") {
  // No coupling: log Z = n log ∫ e^{V}.
  const PairwiseGibbs m{quartic_well(1.0, 1.0), neg_sqrt_kernel(), CouplingMatrix(Matrix(2, 2, 0.0))};
  const auto v = quartic_well(1.0, 1.0);
  // Simpson on a wide window, independent of the library's trapezoid.
  const int n = 4000;
  const double lo = -10.0, h = 20.0 / n;
  double s = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    s += w * std::exp(v.eval(lo + k * h));
  }
  const double one = std::log(s * h / 3.0);
  CHECK(brute_logZ(m).logZ == doctest::Approx(2.0 * one).epsilon(1e-7));
}

TEST_CASE("brute force refuses n > 4") {
  const PairwiseGibbs m{gaussian_well(1.0), neg_quadratic_kernel(), CouplingMatrix(cycle_graph(5))};
  try {
    brute_logZ(m);
    FAIL("expected DimensionTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DimensionTooLarge);
  }
}

TEST_CASE("brute marginal of a Gaussian has variance (A^-1)_ii") {
  const Matrix a = Matrix::from_rows({{1.5, -0.5}, {-0.5, 1.5}});
  const auto q = brute_marginal(QuadraticModel{a, {}}, 0);
  CHECK(variance(q) == doctest::Approx(0.75).epsilon(1e-5));
}

TEST_CASE("H(Q|P) equals log Z - elbo at the fixed point") {
  const Matrix a = Matrix::from_rows({{1.5, -0.5}, {-0.5, 1.5}});
  const Model m = QuadraticModel{a, {}};
  const auto q = cavi_solve(m).qstar;
  const auto t = gaussian_truth(a);
  CHECK(relative_entropy_qp(m, q, t.logZ) == doctest::Approx(t.rf_exact).epsilon(1e-5));
  CHECK(relative_entropy_pq(m, q, t.logZ) > 0.0);
}
