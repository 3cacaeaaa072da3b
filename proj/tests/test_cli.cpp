// In-process runs of the command-line front end.

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mfcert/cli.hpp"
#include "mfcert/io.hpp"

using namespace mfcert;
namespace fs = std::filesystem;

namespace {

std::string fixture(const char* name) { return std::string(MFCERT_FIXTURES) + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "mfcert_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "mfcert");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("certify the Gaussian pair") {
  const auto dir = scratch("certify");
  const auto out = (dir / "cert.json").string();
  CHECK(run({"certify", "--model", fixture("gaussian_pair.json"), "--out", out}) == 0);
  const auto c = read_json(out);
  CHECK(c.at("logZ_lo").get<double>() == doctest::Approx(1.432412).epsilon(1e-6));
  CHECK(c.at("logZ_hi").get<double>() == doctest::Approx(1.599078).epsilon(1e-6));
  const auto m = read_json((dir / "manifest.json").string());
  CHECK(m.at("exit_code") == 0);
  CHECK(m.at("inputs").at(0).at("fnv1a64") == cli::fnv1a64_file(fixture("gaussian_pair.json")));
  CHECK(fs::exists(dir / "summary.txt"));
}

TEST_CASE("outputs are byte-identical across runs") {
  const auto a = scratch("repeat_a"), b = scratch("repeat_b");
  for (const auto& d : {a, b})
    REQUIRE(run({"certify", "--model", fixture("lse_blackbox.json"), "--opts", fixture("opts_fast.json"), "--seed",
                 "5", "--out", (d / "cert.json").string()}) == 0);
  CHECK(slurp(a / "cert.json") == slurp(b / "cert.json"));
}

TEST_CASE("missing model file") {
  const auto dir = scratch("missing");
  CHECK(run({"solve", "--model", fixture("does_not_exist.json"), "--out", (dir / "qstar.json").string()}) == 1);
  const auto m = read_json((dir / "manifest.json").string());
  CHECK(m.at("error").at("code") == "E_IO_MODEL");
  CHECK(m.at("status") == "error");
}

TEST_CASE("solve writes Q* and the ELBO trace") {
  const auto dir = scratch("solve");
  CHECK(run({"solve", "--model", fixture("quartic_chain.json"), "--out", (dir / "qstar.json").string()}) == 0);
  const auto q = read_json((dir / "qstar.json").string());
  CHECK(q.at("n") == 3);
  CHECK(q.at("marginals").size() == 3);
  CHECK(slurp(dir / "elbo_trace.csv").rfind("update,elbo\n", 0) == 0);
}

TEST_CASE("symmetry gate trips on a perturbed Q*") {
  const auto dir = scratch("gate");
  const auto qpath = (dir / "qstar.json").string();
  REQUIRE(run({"solve", "--model", fixture("cycle_normalized.json"), "--out", qpath}) == 0);
  auto q = read_json(qpath);
  // Shift the first marginal by 20 grid cells.
  auto logw = q.at("marginals").at(0).at("logw").get<std::vector<double>>();
  std::rotate(logw.begin(), logw.begin() + 20, logw.end());
  q["marginals"][0]["logw"] = logw;
  write_json(qpath, q);
  const auto out = (dir / "cert.json").string();
  CHECK(run({"certify", "--model", fixture("cycle_normalized.json"), "--qstar", qpath, "--out", out}) == 2);
  const auto c = read_json(out);
  CHECK(c.at("trJ2_bound").is_null());
  CHECK(c.at("gates").at("trJ2_symmetry") == "gate_failed");
}

TEST_CASE("positive kernel in a block limit is a gate") {
  const auto dir = scratch("limit_gate");
  CHECK(run({"limit", "--model", fixture("limit_positive_kernel.json"), "--out", (dir / "limit.json").string()}) == 2);
  CHECK(read_json((dir / "manifest.json").string()).at("error").at("code") == "E_NOT_NONPOSITIVE_KERNEL");
}

TEST_CASE("limits, brute and tilt subcommands") {
  const auto dir = scratch("misc");
  CHECK(run({"limit", "--model", fixture("limit_gaussian.json"), "--out", (dir / "limit.json").string()}) == 0);
  CHECK(read_json((dir / "limit.json").string()).at("value").get<double>() == doctest::Approx(0.5723649).epsilon(1e-6));
  CHECK(run({"brute", "--model", fixture("gaussian_pair.json"), "--out", (dir / "brute.json").string()}) == 0);
  const auto b = read_json((dir / "brute.json").string());
  CHECK(b.at("logZ").get<double>() == doctest::Approx(b.at("gaussian").at("logZ").get<double>()).epsilon(1e-7));
  CHECK(run({"tilt", "--model", fixture("tilt_shifted.json"), "--t", "1", "--out", (dir / "tilt.json").string()}) == 0);
  // V = -(x-1)²/2 at t = 1: y = 1 - y, so y* = ½.
  CHECK(read_json((dir / "tilt.json").string()).at("ystar").at(0).get<double>() == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("brute acceptance rejects a five-site fixture") {
  const auto dir = scratch("accept_brute");
  CHECK(run({"accept", "brute", "--fixture", fixture("five_sites.json"), "--out", dir.string()}) == 1);
  CHECK(read_json((dir / "manifest.json").string()).at("error").at("code") == "E_DIMENSION_TOO_LARGE");
}

TEST_CASE("unknown options fail parsing") {
  CHECK(run({"solve", "--bogus"}) != 0);
}
