#include <doctest.h>

#include <cmath>

#include "mfcert/error.hpp"
#include "mfcert/linalg.hpp"

using namespace mfcert;

TEST_CASE("2x2 determinant, inverse and eigenvalues") {
  const Matrix a = Matrix::from_rows({{2.0, 0.6}, {0.6, 1.0}});
  const double det = 2.0 - 0.36;
  CHECK(log_det_spd(a) == doctest::Approx(std::log(det)));
  const Matrix inv = inverse_spd(a);
  CHECK(inv(0, 0) == doctest::Approx(1.0 / det));
  CHECK(inv(0, 1) == doctest::Approx(-0.6 / det));
  // λ = (3 ± √(1 + 1.44)) / 2
  const auto e = symmetric_eigen(a);
  CHECK(e.values[0] == doctest::Approx((3.0 - std::sqrt(2.44)) / 2.0));
  CHECK(e.values[1] == doctest::Approx((3.0 + std::sqrt(2.44)) / 2.0));
  CHECK(lambda_min(a) == doctest::Approx(e.values[0]).epsilon(1e-9));
  CHECK(lambda_max(a) == doctest::Approx(e.values[1]).epsilon(1e-9));
}

TEST_CASE("solve_spd and cholesky") {
  const Matrix a = Matrix::from_rows({{4.0, 1.0, 0.0}, {1.0, 3.0, 1.0}, {0.0, 1.0, 2.0}});
  const std::vector<double> b = {1.0, 2.0, 3.0};
  const auto x = solve_spd(a, b);
  const auto ax = a.apply(x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(ax[i] == doctest::Approx(b[i]));
  const auto l = cholesky(a);
  REQUIRE(l.has_value());
  const Matrix llt = *l * l->transpose();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(llt(i, j) == doctest::Approx(a(i, j)));
}

TEST_CASE("indefinite input is rejected") {
  const Matrix a = Matrix::from_rows({{1.0, 2.0}, {2.0, 1.0}});
  CHECK_FALSE(cholesky(a).has_value());
  CHECK_THROWS_AS(log_det_spd(a), Error);
  CHECK(lambda_min(a) == doctest::Approx(-1.0));
}

TEST_CASE("Gauss-Hermite integrates even moments of the normal") {
  const auto& rule = gauss_hermite(40);
  double m0 = 0.0, m2 = 0.0, m4 = 0.0, m6 = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double x = rule.nodes[k], w = rule.weights[k];
    m0 += w;
    m2 += w * x * x;
    m4 += w * x * x * x * x;
    m6 += w * std::pow(x, 6);
  }
  CHECK(m0 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m6 == doctest::Approx(15.0).epsilon(1e-11));
}
