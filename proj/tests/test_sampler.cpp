#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mfcert/error.hpp"
#include "mfcert/mfsolver.hpp"
#include "mfcert/sampler.hpp"

using namespace mfcert;

TEST_CASE("empirical W2 of sorted samples") {
  const std::vector<double> a = {0.0, 1.0, 2.0}, b = {2.5, 0.5, 1.5};
  CHECK(empirical_w2(a, b) == doctest::Approx(0.5));
  CHECK_THROWS_AS(empirical_w2(a, std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("MALA recovers Gaussian moments") {
  const Matrix a = Matrix::from_rows({{2.0, 0.6}, {0.6, 1.0}});
  ChainOptions o;
  o.steps = 20000;
  o.seed = 4;
  const auto s = sample_p(QuadraticModel{a, {}}, o);
  CHECK(s.source == SampleSource::Mala);
  CHECK(s.acceptance > 0.3);
  const auto inv = inverse_spd(a);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto c = s.column(i);
    double m = 0.0, v = 0.0;
    for (double x : c) m += x;
    m /= static_cast<double>(c.size());
    for (double x : c) v += (x - m) * (x - m);
    v /= static_cast<double>(c.size());
    const double se = std::sqrt(inv(i, i) / s.ess[i]);
    CHECK(std::abs(m) < 5.0 * se);
    CHECK(v == doctest::Approx(inv(i, i)).epsilon(0.1));
  }
}

TEST_CASE("chains with identical seeds are identical") {
  const Model m = PairwiseGibbs{quartic_well(1.0, 1.0), neg_sqrt_kernel(), CouplingMatrix(cycle_graph(3))};
  ChainOptions o;
  o.steps = 2000;
  o.burnin = 200;
  o.seed = 8;
  CHECK(sample_p(m, o).draws == sample_p(m, o).draws);
}

TEST_CASE("exact Gaussian sampler covariance") {
  const Matrix a = Matrix::from_rows({{1.5, -0.5}, {-0.5, 1.5}});
  const std::vector<double> mu = {1.0, -1.0};
  const auto s = sample_gaussian(a, mu, 40000, 12);
  const auto x = s.column(0), y = s.column(1);
  double mx = 0.0, my = 0.0, cxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= x.size();
  my /= y.size();
  for (std::size_t k = 0; k < x.size(); ++k) cxy += (x[k] - mx) * (y[k] - my);
  cxy /= x.size();
  CHECK(mx == doctest::Approx(1.0).epsilon(0.02));
  CHECK(my == doctest::Approx(-1.0).epsilon(0.02));
  // (A^{-1})_12 = 0.5 / 2
  CHECK(cxy == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("product draws follow the marginal CDF") {
  const Grid g = Grid::centered(0.0, 10.0, 1025);
  const ProductMeasure q = {gaussian_density(g, 0.0, 1.0), gaussian_density(g, 2.0, 0.5)};
  const auto s = sample_q(q, 20000, 3);
  // 1.63/√N is the 1% Kolmogorov critical value.
  CHECK(ks_statistic(s.column(0), q[0]) < 1.63 / std::sqrt(20000.0));
  CHECK(ks_statistic(s.column(1), q[1]) < 1.63 / std::sqrt(20000.0));
}

TEST_CASE("batch means on i.i.d. data") {
  const Grid g = Grid::centered(0.0, 10.0, 1025);
  const auto s = sample_q({gaussian_density(g, 0.0, 1.0)}, 32000, 5);
  const auto c = s.column(0);
  CHECK(batch_means_ess(c) == doctest::Approx(32000.0).epsilon(0.5));
  CHECK(batch_means_stderr(c) == doctest::Approx(1.0 / std::sqrt(32000.0)).epsilon(0.4));
}

TEST_CASE("phi functions") {
  CHECK(parse_phi("abs") == Phi::Abs);
  CHECK(apply_phi(Phi::Abs, -2.0) == 2.0);
  CHECK(apply_phi(Phi::Tanh, 0.5) == doctest::Approx(std::tanh(0.5)));
}

TEST_CASE("sample files round-trip") {
  const Grid g = Grid::centered(0.0, 10.0, 257);
  const auto s = sample_q({gaussian_density(g, 0.0, 1.0), gaussian_density(g, 1.0, 1.0)}, 100, 2);
  const auto path = (std::filesystem::temp_directory_path() / "mfcert_samples_test.bin").string();
  write_samples(path, s);
  const auto r = read_samples(path);
  CHECK(r.n == 2);
  CHECK(r.draws == s.draws);
  std::filesystem::remove(path);
}
