#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfcert/error.hpp"
#include "mfcert/models.hpp"

using namespace mfcert;

namespace {

// Central differences, kept independent of the analytic derivatives.
double fd_partial(const Model& m, std::vector<double> x, std::size_t i, double h = 1e-5) {
  x[i] += h;
  const double up = eval_f(m, x);
  x[i] -= 2.0 * h;
  const double dn = eval_f(m, x);
  return (up - dn) / (2.0 * h);
}

double fd_cross(const Model& m, std::vector<double> x, std::size_t i, std::size_t j, double h = 1e-4) {
  auto at = [&](double di, double dj) {
    auto y = x;
    y[i] += di;
    y[j] += dj;
    return eval_f(m, y);
  };
  return (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
}

std::vector<Model> zoo() {
  std::vector<Model> out;
  out.push_back(PairwiseGibbs{quartic_well(1.0, 1.0), neg_sqrt_kernel(), CouplingMatrix(cycle_graph(4))});
  out.push_back(PairwiseGibbs{gaussian_well(2.0, 0.3), neg_logcosh_kernel(), CouplingMatrix(complete_graph(3))});
  out.push_back(QuadraticModel{Matrix::from_rows({{2.0, 0.5, 0.0}, {0.5, 1.5, -0.2}, {0.0, -0.2, 1.0}}),
                               {0.1, -0.3, 0.2}});
  out.push_back(make_bayes(Matrix::from_rows({{1.0, 0.5}, {0.2, -0.8}, {0.3, 0.3}}), {0.7, -1.2, 0.4}, 0.5,
                           quartic_well(1.0, 0.25)));
  out.push_back(quadratic_lse_blackbox(Matrix::from_rows({{2.0, -0.5}, {-0.5, 2.0}}), 0.5));
  return out;
}

}  // namespace

TEST_CASE("analytic derivatives agree with finite differences") {
  for (const Model& m : zoo()) {
    CAPTURE(family_name(m));
    const std::size_t n = dimension(m);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = 0.3 * std::sin(1.0 + 2.0 * static_cast<double>(i));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(partial_i(m, x, i) == doctest::Approx(fd_partial(m, x, i)).epsilon(1e-6));
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) CHECK(cross_ij(m, x, i, j) == doctest::Approx(fd_cross(m, x, i, j)).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("quadratic kappa is the smallest eigenvalue") {
  const Matrix a = Matrix::from_rows({{2.0, 1.0}, {1.0, 2.0}});
  CHECK(kappa_of(QuadraticModel{a, {}}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(kappa_of(QuadraticModel{Matrix::from_rows({{1.0, 2.0}, {2.0, 1.0}}), {}}), Error);
}

TEST_CASE("pairwise kappa accounts for kernel curvature") {
  // -u²/2 on a 3-cycle: f = -Σx²/2 - ½ Σ_edges (x_i - x_j)², Hessian -(I + L),
  // so kappa = 1 + λ_min(L) = 1.
  const PairwiseGibbs m{gaussian_well(1.0), neg_quadratic_kernel(), CouplingMatrix(cycle_graph(3))};
  CHECK(kappa_of(m) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("coupling matrix validation") {
  CHECK_THROWS_AS(CouplingMatrix(Matrix::from_rows({{0.0, 1.0}, {0.5, 0.0}})), Error);
  CHECK_THROWS_AS(CouplingMatrix(Matrix::from_rows({{0.0, -1.0}, {-1.0, 0.0}})), Error);
  CHECK_THROWS_AS(CouplingMatrix(Matrix::from_rows({{1.0, 1.0}, {1.0, 0.0}})), Error);
  const CouplingMatrix c(cycle_graph(5));
  CHECK(c.edges().size() == 5);
  CHECK(c.trace_j2() == doctest::Approx(10.0));
}

TEST_CASE("random regular graphs are simple and regular") {
  const Matrix g = dregular_graph(20, 4, 7);
  for (std::size_t i = 0; i < 20; ++i) {
    double deg = 0.0;
    CHECK(g(i, i) == 0.0);
    for (std::size_t j = 0; j < 20; ++j) {
      CHECK(g(i, j) == g(j, i));
      deg += g(i, j);
    }
    CHECK(deg == 4.0);
  }
  const Matrix r = row_normalized(g);
  CHECK(CouplingMatrix(r).max_row_sum_deviation(1.0) < 1e-12);
}

TEST_CASE("block graph entries follow the block weights") {
  const Matrix w = Matrix::from_rows({{1.0, 0.5}, {0.5, 2.0}});
  const Matrix g = block_graph({2, 3}, w);
  CHECK(g(0, 1) == 1.0);
  CHECK(g(0, 3) == 0.5);
  CHECK(g(3, 4) == 2.0);
  CHECK(g(2, 2) == 0.0);
}

TEST_CASE("scaling and Gaussian reference transforms") {
  const Model m = QuadraticModel{Matrix::from_rows({{1.0, 0.2}, {0.2, 1.0}}), {0.5, 0.0}};
  const std::vector<double> x = {0.4, -0.7};
  CHECK(eval_f(scale_model(m, 3.0), x) == doctest::Approx(3.0 * eval_f(m, x)));
  CHECK(eval_f(add_gaussian_reference(m, 2.0), x) == doctest::Approx(eval_f(m, x) - (0.16 + 0.49) / 4.0));
}

TEST_CASE("find_mode solves the quadratic stationarity condition") {
  const Matrix a = Matrix::from_rows({{2.0, 0.5}, {0.5, 1.0}});
  const std::vector<double> b = {1.0, -1.0};
  const auto mode = find_mode(QuadraticModel{a, b});
  const auto expect = solve_spd(a, b);
  CHECK(mode[0] == doctest::Approx(expect[0]).epsilon(1e-6));
  CHECK(mode[1] == doctest::Approx(expect[1]).epsilon(1e-6));
}

TEST_CASE("validation rejects broken models") {
  const PairwiseGibbs good{quartic_well(1.0, 1.0), neg_sqrt_kernel(), CouplingMatrix(cycle_graph(3))};
  CHECK_NOTHROW(validate(good));
  // Positive quadratic kernel breaks concavity.
  const PairwiseGibbs bad{gaussian_well(1.0), scaled(neg_quadratic_kernel(), -1.0), CouplingMatrix(complete_graph(4))};
  CHECK_THROWS_AS(validate(bad), Error);
  CHECK_THROWS_AS(make_bayes(Matrix::from_rows({{1.0}}), {1.0, 2.0}, 1.0, gaussian_well(1.0)), Error);
}

TEST_CASE("potential constructors") {
  const auto v = quartic_well(2.0, 0.5, 1.0);
  CHECK(v.eval(1.0) == doctest::Approx(0.0));
  CHECK(v.eval(2.0) == doctest::Approx(-1.0 - 0.125));
  CHECK(v.d1(2.0) == doctest::Approx(-2.0 - 0.5));
  CHECK(v.d2(2.0) == doctest::Approx(-2.0 - 1.5));
  CHECK(v.kappa == doctest::Approx(2.0));
  CHECK(scaled(v, 3.0).kappa == doctest::Approx(6.0));
  const auto k = neg_logcosh_kernel();
  CHECK(k.eval(0.7) == doctest::Approx(-std::log(std::cosh(0.7))));
}
