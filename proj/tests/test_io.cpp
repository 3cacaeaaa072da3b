#include <doctest.h>

#include <filesystem>

#include "mfcert/error.hpp"
#include "mfcert/io.hpp"

using namespace mfcert;

namespace {

std::string fixture(const char* name) { return std::string(MFCERT_FIXTURES) + "/" + name; }

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::Io;
}

}  // namespace

TEST_CASE("fixtures parse into the expected families") {
  CHECK(family_name(load_model(fixture("gaussian_pair.json")).model) == family_name(Model{QuadraticModel{}}));
  const auto chain = load_model(fixture("quartic_chain.json"));
  const auto& pw = std::get<PairwiseGibbs>(chain.model);
  CHECK(pw.n() == 3);
  CHECK(pw.J(0, 1) == 1.0);
  CHECK(pw.J(0, 2) == 0.0);
  const auto cyc = std::get<PairwiseGibbs>(load_model(fixture("cycle_normalized.json")).model);
  CHECK(cyc.J(0, 1) == doctest::Approx(0.5));
  const auto five = std::get<PairwiseGibbs>(load_model(fixture("five_sites.json")).model);
  CHECK(five.K.eval(2.0) == doctest::Approx(-1.0));
  const auto bayes = std::get<BayesLinReg>(load_model(fixture("bayes_p2.json")).model);
  CHECK(bayes.n() == 2);
  CHECK(bayes.gram(0, 1) == doctest::Approx(0.5));
  CHECK(std::holds_alternative<BlackBox>(load_model(fixture("lse_blackbox.json")).model));
}

TEST_CASE("coupling shorthands") {
  CHECK(parse_coupling(json{{"complete", 4}})(1, 3) == 1.0);
  const Matrix d = parse_coupling(json{{"dregular", {{"n", 10}, {"d", 3}, {"seed", 1}}}});
  double deg = 0.0;
  for (std::size_t j = 0; j < 10; ++j) deg += d(2, j);
  CHECK(deg == 3.0);
  const Matrix b = parse_coupling(json{{"block", {{"sizes", {1, 2}}, {"weights", {{0.0, 2.0}, {2.0, 1.0}}}}}});
  CHECK(b(0, 2) == 2.0);
  CHECK(b(1, 2) == 1.0);
}

TEST_CASE("malformed models are rejected as invalid") {
  CHECK(code_of([] { parse_model(json{{"type", "nonsense"}}); }) == Errc::InvalidModel);
  CHECK(code_of([] { parse_model(json{{"type", "quadratic"}}); }) == Errc::InvalidModel);
  CHECK(code_of([] { parse_potential(json{{"name", "gaussian_well"}}); }) == Errc::InvalidModel);
  CHECK(code_of([] { read_json(fixture("does_not_exist.json")); }) == Errc::Io);
}

TEST_CASE("reference key and control problems") {
  auto j = read_json(fixture("gaussian_pair.json"));
  j["reference"] = {{"gaussian_t", 0.5}};
  const auto spec = parse_model(j);
  REQUIRE(spec.reference_t.has_value());
  CHECK(*spec.reference_t == 0.5);
  const auto p = parse_control(read_json(fixture("control_quadratic.json")));
  CHECK(p.n == 2);
  CHECK(p.sde.seed == 31);
  CHECK(p.sde.paths == 20000);
}

TEST_CASE("options sections") {
  const auto j = read_json(fixture("opts_fast.json"));
  CHECK(parse_solve_options(j.at("solve")).grid_points == 513);
  CHECK(parse_chain_options(j.at("chain")).n_chains == 2);
  CHECK(parse_certify_options(j.at("certify")).mc_samples == 4000);
  CHECK(parse_solve_options(json{{"schedule", "jacobi"}}).schedule == Schedule::Jacobi);
  CHECK(parse_tilt_options(json::object()).gh_order == TiltOptions{}.gh_order);
}

TEST_CASE("densities round-trip through JSON exactly") {
  const Grid g = Grid::centered(0.3, 5.0, 257);
  const ProductMeasure q = {gaussian_density(g, 0.3, 0.7), gaussian_density(g, -0.1, 1.2)};
  const auto back = product_from_json(json::parse(to_json(q).dump()));
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].grid() == q[i].grid());
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(back[i].log_pdf(k) == doctest::Approx(q[i].log_pdf(k)).epsilon(1e-15));
  }
  const auto wrapped = qstar_from_json(json{{"marginals", to_json(q)}});
  CHECK(wrapped.size() == 2);
  CHECK_THROWS_AS(qstar_from_json(json{{"other", 1}}), Error);
}

TEST_CASE("write and read JSON files") {
  const auto path = (std::filesystem::temp_directory_path() / "mfcert_io_test.json").string();
  write_json(path, json{{"a", 1.5}});
  CHECK(read_json(path).at("a").get<double>() == 1.5);
  std::filesystem::remove(path);
}
