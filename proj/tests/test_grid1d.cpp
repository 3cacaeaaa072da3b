#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "mfcert/error.hpp"
#include "mfcert/grid1d.hpp"

using namespace mfcert;

namespace {

constexpr double kPi = std::numbers::pi;

// Standard normal CDF, independent of the library.
double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("grid spacing and trapezoid weights") {
  const Grid g(-1.0, 3.0, 17);
  CHECK(g.spacing() == doctest::Approx(0.25));
  CHECK(g.point(16) == doctest::Approx(3.0));
  double total = 0.0;
  for (double w : g.weights()) total += w;
  CHECK(total == doctest::Approx(4.0));
  CHECK(g.weight(0) == doctest::Approx(0.125));
}

TEST_CASE("gaussian density moments and entropy match closed forms") {
  const Grid g = Grid::centered(0.7, 12.0 * 1.3, 1025);
  const GridDensity q = gaussian_density(g, 0.7, 1.69);
  CHECK(mean(q) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(variance(q) == doctest::Approx(1.69).epsilon(1e-10));
  // ∫ q log q = -½ log(2πe σ²)
  CHECK(entropy(q) == doctest::Approx(-0.5 * std::log(2.0 * kPi * std::numbers::e * 1.69)).epsilon(1e-10));
  CHECK_FALSE(q.truncated());
}

TEST_CASE("normalisation survives huge offsets") {
  const Grid g(-5.0, 5.0, 101);
  std::vector<double> logw(101);
  for (std::size_t k = 0; k < logw.size(); ++k) logw[k] = 1e6 - 0.5 * g.point(k) * g.point(k);
  const GridDensity q = normalize(logw, g);
  double mass = 0.0;
  for (double m : q.masses()) mass += m;
  // The offset itself is only representable to ~1e-10.
  CHECK(std::abs(mass - 1.0) < 1e-9);
}

TEST_CASE("normalize rejects degenerate input") {
  const Grid g(0.0, 1.0, 32);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(normalize(std::vector<double>(32, -inf), g), Error);
  std::vector<double> bad(32, 0.0);
  bad[3] = std::nan("");
  try {
    normalize(bad, g);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonFiniteInput);
  }
  try {
    normalize(std::vector<double>(31, 0.0), g);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::LengthMismatch);
  }
}

TEST_CASE("quantiles invert the normal CDF") {
  const Grid g = Grid::centered(0.0, 12.0, 2049);
  const GridDensity q = gaussian_density(g, 0.0, 1.0);
  for (double x : {-2.0, -0.5, 0.0, 1.3}) CHECK(quantile(q, phi_cdf(x)) == doctest::Approx(x).epsilon(1e-4));
  const std::vector<double> u = {0.1, 0.5, 0.9};
  const auto qs = quantiles(q, u);
  for (std::size_t k = 0; k < u.size(); ++k) CHECK(qs[k] == doctest::Approx(quantile(q, u[k])).epsilon(1e-12));
}

TEST_CASE("W2 between Gaussians") {
  const Grid g = Grid::centered(0.0, 15.0, 2049);
  const GridDensity a = gaussian_density(g, 0.0, 1.0);
  const GridDensity b = gaussian_density(g, 0.5, 4.0);
  // W2² = Δμ² + (σa - σb)²
  CHECK(w2(a, b) == doctest::Approx(std::sqrt(0.25 + 1.0)).epsilon(1e-3));
  CHECK(w2(a, a) == doctest::Approx(0.0));
}

TEST_CASE("kernel convolution equals the direct double sum") {
  const Grid src(-2.0, 2.0, 41);
  const Grid same(-2.0, 2.0, 41);
  const Grid shifted(-1.0, 3.0, 41);
  const Grid other(-1.0, 1.5, 17);
  const GridDensity q = gaussian_density(src, 0.2, 0.3);
  const auto mass = q.masses();
  auto kernel = [](double u) { return -std::sqrt(1.0 + u * u); };
  for (const Grid* target : {&same, &shifted, &other}) {
    const KernelConvolution conv(kernel, src, *target);
    const auto out = conv.apply(mass);
    for (std::size_t a = 0; a < target->size(); ++a) {
      double direct = 0.0;
      for (std::size_t b = 0; b < src.size(); ++b) direct += kernel(target->point(a) - src.point(b)) * mass[b];
      CHECK(out[a] == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("non-finite kernels are rejected") {
  const Grid g(-1.0, 1.0, 21);
  CHECK_THROWS_AS(KernelConvolution([](double u) { return std::log(std::abs(u)); }, g, g), Error);
}

TEST_CASE("log_pdf_at interpolates and is -inf off the grid") {
  const Grid g(-3.0, 3.0, 61);
  const GridDensity q = gaussian_density(g, 0.0, 1.0);
  CHECK(q.log_pdf_at(g.point(10)) == doctest::Approx(q.log_pdf(10)));
  CHECK(std::isinf(q.log_pdf_at(4.0)));
}
