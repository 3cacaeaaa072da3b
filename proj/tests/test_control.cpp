#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mfcert/control.hpp"
#include "mfcert/error.hpp"

using namespace mfcert;

namespace {

ControlProblem quadratic_problem(double a, std::size_t paths = 4000, double dt = 5e-3) {
  ControlProblem p;
  p.n = 2;
  p.T = 1.0;
  p.g = QuadraticModel{Matrix::from_rows({{a, a}, {a, a}}), {}, true};
  p.sde.dt = dt;
  p.sde.paths = paths;
  p.sde.seed = 31;
  return p;
}

}  // namespace

TEST_CASE("flat objective: every value is zero") {
  const auto p = quadratic_problem(0.0);
  ControlOptions o;
  o.simulate = false;
  const auto r = run_control(p, o);
  CHECK(r.v_orig.lo == doctest::Approx(0.0).scale(1.0));
  CHECK(r.v_dstr == doctest::Approx(0.0).scale(1.0));
  CHECK(r.v_det == doctest::Approx(0.0).scale(1.0));
  CHECK(r.bounds.gap_bound == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("rank-one quadratic values by hand") {
  // g = -(a/2)(x1 + x2)², n = 2, T = 1, a = 1/4.
  const auto p = quadratic_problem(0.25);
  // V_orig = (1/n) log E exp(n g) = -(1/4) log(1 + n·2aT)
  CHECK(value_orig(p).lo == doctest::Approx(-0.25 * std::log(2.0)).epsilon(1e-7));
  // V_dstr: product of N(0, 1/(1/T + n a)) marginals; value -(1/2) log(1 + n a T)
  CHECK(value_dstr(p).value == doctest::Approx(-0.5 * std::log(1.5)).epsilon(1e-7));
  // V_det: y* = 0, value E_{N(0,T)} g = -(a/2)·2T
  CHECK(value_det(p).value == doctest::Approx(-0.25).epsilon(1e-9));
}

TEST_CASE("problem validation") {
  auto p = quadratic_problem(0.25);
  p.T = 0.0;
  CHECK_THROWS_AS(validate_problem(p), Error);
  p = quadratic_problem(0.25);
  p.g = QuadraticModel{Matrix::from_rows({{-1.0, 0.0}, {0.0, 0.0}}), {}, true};
  CHECK_THROWS_AS(validate_problem(p), Error);
  p = quadratic_problem(0.25);
  p.n = 3;
  CHECK_THROWS_AS(validate_problem(p), Error);
}

TEST_CASE("Föllmer drift closed forms") {
  const double T = 1.0;
  const Grid g = Grid::centered(0.0, 12.0, 2049);
  SUBCASE("q = N(m, T): constant drift m/T") {
    const auto q = gaussian_density(g, 0.7, T);
    for (double t : {0.0, 0.5, 0.95})
      for (double x : {-1.0, 0.0, 2.0}) CHECK(follmer_drift(q, T, t, x) == doctest::Approx(0.7 / T).epsilon(1e-7));
  }
  SUBCASE("q = N(0, s²): -γx / (1 + γ(T - t))") {
    const double s2 = 0.5, gamma = 1.0 / s2 - 1.0 / T;
    const auto q = gaussian_density(g, 0.0, s2);
    for (double t : {0.0, 0.3, 0.9})
      for (double x : {-1.5, 0.4, 1.0})
        CHECK(follmer_drift(q, T, t, x) == doctest::Approx(-gamma * x / (1.0 + gamma * (T - t))).epsilon(1e-7));
  }
}

TEST_CASE("Föllmer drift argument checks") {
  const Grid g = Grid::centered(0.0, 6.0, 513);
  const auto q = gaussian_density(g, 0.0, 1.0);
  try {
    follmer_drift(q, 1.0, 1.0, 0.0);
    FAIL("t = T must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TimeOutOfRange);
  }
  CHECK_THROWS_AS(follmer_drift(q, 1.0, -0.1, 0.0), Error);
  CHECK_THROWS_AS(follmer_drift(q, 1.0, 0.2, 7.0), Error);
  CHECK_THROWS_AS(FollmerDrift(q, 0.0), Error);
}

TEST_CASE("flat objective: X_T is Brownian with variance T") {
  const auto p = quadratic_problem(0.0);
  const auto q = value_dstr(p).qstar;
  const auto s = simulate(p, q, p.sde);
  CHECK(s.mean == doctest::Approx(0.0).scale(1.0));
  for (std::size_t i = 0; i < 2; ++i) {
    // Var of a sample variance of 4000 normals: 2/N.
    CHECK(std::abs(s.terminal_var[i] - 1.0) < 4.0 * std::sqrt(2.0 / 4000.0));
    CHECK(std::abs(s.terminal_mean[i]) < 4.0 / std::sqrt(4000.0));
  }
}

TEST_CASE("simulated objective and terminal law match Q*") {
  const auto p = quadratic_problem(0.25, 4000, 5e-3);
  const auto d = value_dstr(p);
  const auto s = simulate(p, d.qstar, p.sde);
  CHECK(std::abs(s.mean - d.value) < 4.0 * s.stderr_ + 5e-3);
  CHECK(s.clip_events <= s.clip_limit);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(s.terminal_var[i] == doctest::Approx(variance(d.qstar[i])).epsilon(0.1));
    CHECK(s.terminal_w2[i] < 3.0 * s.w2_floor[i] + 0.02);
  }
}

TEST_CASE("simulation argument checks") {
  const auto p = quadratic_problem(0.25);
  const auto q = value_dstr(p).qstar;
  SdeOptions bad = p.sde;
  bad.dt = 0.05;
  CHECK_THROWS_AS(simulate(p, q, bad), Error);
  bad = p.sde;
  bad.paths = 10;
  CHECK_THROWS_AS(simulate(p, q, bad), Error);
}

TEST_CASE("affine objective: all three values coincide") {
  ControlProblem p;
  p.n = 2;
  p.T = 1.0;
  p.g = QuadraticModel{Matrix(2, 2, 0.0), {0.5, 0.5}, true};
  ControlOptions o;
  o.simulate = false;
  const auto r = run_control(p, o);
  // n|c|²T/2 with c = (½, ½)
  CHECK(r.v_orig.lo == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.v_dstr == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.v_det == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(r.dstr_le_orig);
  CHECK(r.det_gap_ok);
}

TEST_CASE("gap bounds for the rank-one quadratic") {
  const auto p = quadratic_problem(0.25);
  ControlOptions o;
  o.simulate = false;
  const auto r = run_control(p, o);
  // n T² a² and ½ n T² · 4a²
  CHECK(r.bounds.gap_bound == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(r.bounds.det_gap_bound == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(r.dstr_le_orig);
  CHECK(r.orig_gap_ok);
  CHECK(r.det_gap_ok);
}
