#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfcert/error.hpp"
#include "mfcert/limits.hpp"

using namespace mfcert;

TEST_CASE("Gaussian scalar limit in closed form") {
  // V = -x²/2, K = -u²/2: the optimiser is N(0, 1/2) and the value is
  // -¼ - ¼ + ½ log(πe) = ½ log π.
  const auto r = scalar_limit(gaussian_well(1.0), neg_quadratic_kernel());
  CHECK(variance(r.q) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.value == doctest::Approx(0.5 * std::log(std::numbers::pi)).epsilon(1e-8));
}

TEST_CASE("scalar objective by hand for a Gaussian trial") {
  const Grid g = Grid::centered(0.0, 12.0, 2049);
  const auto q = gaussian_density(g, 0.0, 1.0);
  // -½ - ½·½·2 + ½ log 2πe
  const double expect = -0.5 - 0.5 + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  CHECK(scalar_objective(gaussian_well(1.0), neg_quadratic_kernel(), q) == doctest::Approx(expect).epsilon(1e-8));
}

TEST_CASE("one-block limit reduces to the scalar limit") {
  const auto v = quartic_well(1.0, 1.0);
  const auto k = neg_sqrt_kernel();
  const auto s = scalar_limit(v, k);
  const auto b = block_limit(v, k, Matrix::from_rows({{1.0}}));
  CHECK(w2(b.blocks[0], s.q) < 1e-6);
}

TEST_CASE("block limit rejects a positive kernel") {
  try {
    InteractionKernel up = neg_quadratic_kernel();
    up.eval = [](double u) { return 0.5 * u * u; };
    block_limit(gaussian_well(1.0), up, Matrix::from_rows({{1.0}}));
    FAIL("expected a gate");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotNonpositiveKernel);
  }
  CHECK_THROWS_AS(block_limit(gaussian_well(1.0), neg_sqrt_kernel(), Matrix::from_rows({{0.0, 1.0}, {0.5, 0.0}})),
                  Error);
}

TEST_CASE("random initialisation reaches the same scalar limit") {
  LimitOptions o;
  o.random_init_seed = 21;
  const auto a = scalar_limit(quartic_well(1.0, 1.0), neg_sqrt_kernel());
  const auto b = scalar_limit(quartic_well(1.0, 1.0), neg_sqrt_kernel(), o);
  CHECK(b.value == doctest::Approx(a.value).epsilon(1e-8));
}

TEST_CASE("finite model on a row-normalised complete graph approaches the limit") {
  const auto v = quartic_well(1.0, 1.0);
  const auto k = neg_sqrt_kernel();
  const auto lim = scalar_limit(v, k);
  const PairwiseGibbs m{v, k, CouplingMatrix(row_normalized(complete_graph(6)))};
  const auto f = finite_vs_limit(m, lim);
  CHECK(std::abs(f.per_site_gap) < 0.05);
  CHECK(f.rf_budget_per_site >= 0.0);
  const PairwiseGibbs raw{v, k, CouplingMatrix(complete_graph(4))};
  CHECK_THROWS_AS(finite_vs_limit(raw, lim), Error);
}
