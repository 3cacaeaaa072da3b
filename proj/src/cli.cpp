#include "mfcert/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mfcert/acceptance.hpp"
#include "mfcert/error.hpp"
#include "mfcert/io.hpp"
#include "mfcert/parallel.hpp"
#include "mfcert/simd.hpp"

namespace mfcert::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";

enum class Level { Error, Info, Debug };

/// An error tagged with the CLI-level code, e.g. E_IO_MODEL.
struct Failure : std::runtime_error {
  Failure(std::string c, const std::string& what, int exit) : std::runtime_error(what), code(std::move(c)), exit_code(exit) {}
  std::string code;
  int exit_code;
};

struct Args {
  std::string model, qstar, opts, out, problem, target = "p", suite, fixture;
  double t = 1.0;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string log = "info";
};

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Run {
 public:
  Run(std::string command, const Args& args) : command_(std::move(command)), args_(args) {
    level_ = args.log == "error" ? Level::Error : args.log == "debug" ? Level::Debug : Level::Info;
  }

  const Args& args() const { return args_; }

  /// Output directory: --out itself for accept, its parent otherwise.
  void set_out(const std::string& out, bool is_dir) {
    out_path_ = out;
    out_dir_ = is_dir ? fs::path(out) : fs::path(out).parent_path();
    if (out_dir_.empty()) out_dir_ = ".";
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec) throw Failure("E_IO_OUTPUT", "cannot create output directory " + out_dir_.string(), 1);
  }
  fs::path out_dir() const { return out_dir_; }
  std::string out_path() const { return out_path_; }

  json load(const std::string& role, const std::string& path) {
    try {
      json j = read_json(path);
      inputs_.push_back({{"role", role}, {"path", path}, {"fnv1a64", fnv1a64_file(path)}});
      return j;
    } catch (const Error& e) {
      throw Failure("E_IO_" + upper(role), e.what(), 1);
    }
  }

  json options(const std::string& section) {
    if (args_.opts.empty()) return json::object();
    if (!opts_) opts_ = load("opts", args_.opts);
    if (opts_->is_object() && opts_->contains(section)) return opts_->at(section);
    return json::object();
  }

  ModelSpec model() {
    if (args_.model.empty()) throw Failure("E_IO_MODEL", "--model is required", 1);
    const json j = load("model", args_.model);
    return parse_model(j);
  }

  void emit_json(const std::string& path, const json& j) {
    write_json(path, j);
    outputs_.push_back(path);
  }
  void emit_text(const std::string& path, const std::string& text) {
    write_text(path, text);
    outputs_.push_back(path);
  }
  void note_output(const std::string& path) { outputs_.push_back(path); }

  void say(const std::string& line) {
    summary_ += line + "\n";
    if (level_ != Level::Error) std::cout << line << "\n";
  }
  void debug(const std::string& line) {
    if (level_ == Level::Debug) std::cerr << "[debug] " << line << "\n";
  }

  void finish(int exit_code, const std::string& code, const std::string& message, const std::string& started) {
    if (out_dir_.empty()) return;
    try {
      if (!summary_.empty()) write_text((out_dir_ / "summary.txt").string(), summary_);
      json m = {{"tool", "mfcert"},
                {"version", kVersion},
                {"command", command_},
                {"seed", args_.seed ? json(*args_.seed) : json(nullptr)},
                {"threads", threads()},
                {"simd", std::string(simd::isa_name(simd::active_isa()))},
                {"inputs", inputs_},
                {"outputs", outputs_},
                {"exit_code", exit_code},
                {"status", exit_code == 0 ? "ok" : exit_code == 2 ? "gate" : exit_code == 3 ? "acceptance_failed" : "error"},
                {"error", code.empty() ? json(nullptr) : json{{"code", code}, {"message", message}}},
                {"started_at", started},
                {"finished_at", utc_now()}};
      write_json((out_dir_ / "manifest.json").string(), m);
    } catch (const std::exception& e) {
      std::cerr << "mfcert: could not write manifest: " << e.what() << "\n";
    }
  }

 private:
  std::string command_;
  Args args_;
  Level level_;
  std::string out_path_;
  fs::path out_dir_;
  std::optional<json> opts_;
  json inputs_ = json::array();
  std::vector<std::string> outputs_;
  std::string summary_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.7f", v);
  return buf;
}

Reference reference_for(const ModelSpec& spec, const SolveOptions& o) {
  return gaussian_reference(dimension(spec.model), *spec.reference_t, o.grid_points, o.window_sd);
}

SolveOptions solve_options(Run& run) {
  SolveOptions o = parse_solve_options(run.options("solve"));
  if (run.args().seed) o.seed = *run.args().seed;
  return o;
}

void check_model(const ModelSpec& spec) {
  ValidationOptions vo;
  vo.allow_growth_override = spec.growth_override;
  validate(spec.model, vo);
}

SolveResult solve_spec(const ModelSpec& spec, const SolveOptions& o) {
  if (spec.reference_t) return cavi_solve_ref(spec.model, reference_for(spec, o), std::nullopt, o);
  return cavi_solve(spec.model, std::nullopt, o);
}

int cmd_solve(Run& run) {
  const ModelSpec spec = run.model();
  if (!spec.reference_t) check_model(spec);
  const SolveOptions o = solve_options(run);
  const SolveResult r = solve_spec(spec, o);
  run.emit_json(run.out_path(), to_json(r));
  std::string csv = "update,elbo\n";
  char buf[64];
  for (std::size_t k = 0; k < r.elbo_trace.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", k, r.elbo_trace[k]);
    csv += buf;
  }
  run.emit_text((run.out_dir() / "elbo_trace.csv").string(), csv);
  run.say("solved: n=" + std::to_string(r.qstar.size()) + " sweeps=" + std::to_string(r.sweeps_used) +
          " elbo=" + fmt(r.elbo_trace.back()) + " residual=" + std::to_string(r.residual));
  return 0;
}

int cmd_certify(Run& run) {
  const ModelSpec spec = run.model();
  if (!spec.reference_t) check_model(spec);
  const SolveOptions so = solve_options(run);
  ProductMeasure q;
  if (!run.args().qstar.empty()) {
    try {
      q = qstar_from_json(run.load("qstar", run.args().qstar));
    } catch (const Error& e) {
      throw Failure("E_IO_QSTAR", e.what(), 1);
    }
  } else {
    q = solve_spec(spec, so).qstar;
  }
  CertifyOptions co = parse_certify_options(run.options("certify"));
  if (run.args().seed) co.seed = *run.args().seed;
  std::optional<Reference> ref;
  if (spec.reference_t) ref = reference_for(spec, so);
  const Certificate c = certify(spec.model, q, co, ref ? &*ref : nullptr);
  json j = to_json(c);
  j["concentration"] = to_json(concentration(spec.model, c));
  j["gates"] = {{"trJ2_symmetry", c.trJ2_status}};
  run.emit_json(run.out_path(), j);
  run.say("certified: logZ ∈ [" + fmt(c.logZ_lo) + ", " + fmt(c.logZ_hi) + "]  (bound: " + c.bound_source + ")");
  run.say("  elbo " + fmt(c.elbo) + "  var_bound " + fmt(c.var_bound) + "  cross_bound " + fmt(c.cross_bound) +
          "  trJ2 " + c.trJ2_status);
  if (c.trJ2_status == "gate_failed") {
    run.say("gate failed: trJ2 symmetry gate (marginal means differ)");
    return 2;
  }
  return 0;
}

int cmd_brute(Run& run) {
  const ModelSpec spec = run.model();
  const BruteOptions bo = parse_brute_options(run.options("brute"));
  const std::size_t n = dimension(spec.model);
  json j;
  if (spec.reference_t) {
    const double t = *spec.reference_t;
    BruteResult b = brute_logZ(add_gaussian_reference(spec.model, t), bo);
    b.logZ -= 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * t);
    j = to_json(b);
  } else {
    check_model(spec);
    j = to_json(brute_logZ(spec.model, bo));
    if (const auto* q = std::get_if<QuadraticModel>(&spec.model); q && q->b.empty()) j["gaussian"] = to_json(gaussian_truth(q->A));
  }
  run.emit_json(run.out_path(), j);
  run.say("brute force: logZ = " + fmt(j["logZ"].get<double>()) + " (m=" + std::to_string(j["m_used"].get<std::size_t>()) +
          ", converged=" + (j["converged"].get<bool>() ? "yes" : "no") + ")");
  return 0;
}

int cmd_limit(Run& run) {
  if (run.args().model.empty()) throw Failure("E_IO_MODEL", "--model is required", 1);
  const LimitSpec s = parse_limit_spec(run.load("model", run.args().model));
  LimitOptions lo = parse_limit_options(run.options("limit"));
  if (s.weights) {
    const BlockLimit b = block_limit(s.V, s.K, *s.weights, lo);
    run.emit_json(run.out_path(), to_json(b));
    run.say("block limit: value " + fmt(b.value) + " (V shifted by " + fmt(b.v_shift) + "), " +
            std::to_string(b.blocks.size()) + " blocks, " + std::to_string(b.iterations) + " iterations");
  } else {
    const ScalarLimit l = scalar_limit(s.V, s.K, lo);
    run.emit_json(run.out_path(), to_json(l));
    run.say("scalar limit: value " + fmt(l.value) + ", " + std::to_string(l.iterations) + " iterations");
  }
  return 0;
}

int cmd_sample(Run& run) {
  const ModelSpec spec = run.model();
  ChainOptions co = parse_chain_options(run.options("chain"));
  if (run.args().seed) co.seed = *run.args().seed;
  SampleSet s;
  if (run.args().target == "p") {
    require(!spec.reference_t, Errc::InvalidArgument, "sample: target p needs a Lebesgue-form model");
    check_model(spec);
    s = sample_p(spec.model, co);
  } else if (run.args().target == "q") {
    ProductMeasure q;
    if (!run.args().qstar.empty()) {
      try {
        q = qstar_from_json(run.load("qstar", run.args().qstar));
      } catch (const Error& e) {
        throw Failure("E_IO_QSTAR", e.what(), 1);
      }
    } else {
      q = solve_spec(spec, solve_options(run)).qstar;
    }
    s = sample_q(q, co.steps, co.seed);
  } else {
    fail(Errc::InvalidArgument, "sample: --target must be p or q");
  }
  write_samples(run.out_path(), s);
  run.note_output(run.out_path());
  std::string ess;
  for (double e : s.ess) ess += " " + std::to_string(static_cast<long long>(e));
  run.say("sampled " + std::to_string(s.n_draws()) + " draws of dimension " + std::to_string(s.n) + " from " +
          source_name(s.source) + " (acceptance " + fmt(s.acceptance) + ")");
  if (!s.ess.empty()) run.debug("ess:" + ess);
  return 0;
}

int cmd_control(Run& run) {
  if (run.args().problem.empty()) throw Failure("E_IO_PROBLEM", "--problem is required", 1);
  ControlProblem p = parse_control(run.load("problem", run.args().problem));
  ControlOptions o;
  o.solve = solve_options(run);
  o.tilt = parse_tilt_options(run.options("tilt"));
  o.certify = parse_certify_options(run.options("certify"));
  if (run.args().seed) {
    p.sde.seed = *run.args().seed;
    o.tilt.seed = o.certify.seed = *run.args().seed;
  }
  const ControlReport r = run_control(p, o);
  run.emit_json(run.out_path(), to_json(r));
  const std::string orig =
      r.v_orig.exact ? fmt(r.v_orig.lo) : "[" + fmt(r.v_orig.lo) + ", " + fmt(r.v_orig.hi) + "]";
  run.say("v_orig " + orig + "  v_dstr " + fmt(r.v_dstr) + "  v_det " + fmt(r.v_det));
  run.say("gap_bound " + fmt(r.bounds.gap_bound) + "  det_gap_bound " + fmt(r.bounds.det_gap_bound));
  if (r.sim)
    run.say("simulated objective " + fmt(r.sim->mean) + " ± " + fmt(r.sim->stderr_) + "  (clip events " +
            std::to_string(r.sim->clip_events) + ")");
  if (!r.det_le_dstr) run.say("note: v_det > v_dstr on this problem (flagged, not enforced)");
  return 0;
}

int cmd_tilt(Run& run) {
  const ModelSpec spec = run.model();
  TiltOptions o = parse_tilt_options(run.options("tilt"));
  if (run.args().seed) o.seed = *run.args().seed;
  const TiltResult r = tilt_solve(spec.model, run.args().t, o);
  json j = to_json(r);
  j["t"] = run.args().t;
  j["bound"] = 0.5 * run.args().t * run.args().t * gaussian_hessian_sq(spec.model, r.ystar, run.args().t);
  run.emit_json(run.out_path(), j);
  run.say("tilt: value " + fmt(r.value) + " after " + std::to_string(r.iterations) + " iterations (lambda " +
          fmt(r.lambda_used) + ")");
  return 0;
}

int cmd_accept(Run& run) {
  acceptance::Fixtures fx;
  if (!run.args().fixture.empty()) fx.brute_model = parse_model(run.load("fixture", run.args().fixture));
  const auto ids = acceptance::suite_criteria(run.args().suite);
  json crit = json::array();
  bool all = true;
  for (int id : ids) {
    const auto c = acceptance::run_criterion(id, fx);
    run.say(c.line());
    crit.push_back(acceptance::to_json(c));
    all = all && c.pass();
  }
  run.emit_json((run.out_dir() / "acceptance-report.json").string(),
                {{"suite", run.args().suite}, {"pass", all}, {"criteria", crit}});
  return all ? 0 : 3;
}

}  // namespace

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::Io, "cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"mfcert: mean-field approximations and certified log Z intervals"};
  app.require_subcommand(1);
  app.fallthrough();
  Args a;
  app.add_option("--threads", a.threads, "worker threads (default: MFCERT_THREADS or 1)");
  app.add_option("--seed", a.seed, "override every seed in the options");
  app.add_option("--log", a.log, "log level")->check(CLI::IsMember({"error", "info", "debug"}));

  auto* solve = app.add_subcommand("solve", "run coordinate ascent and write Q*");
  solve->add_option("--model", a.model)->required();
  solve->add_option("--opts", a.opts);
  solve->add_option("--out", a.out)->default_val("qstar.json");

  auto* certify_cmd = app.add_subcommand("certify", "certified log Z interval");
  certify_cmd->add_option("--model", a.model)->required();
  certify_cmd->add_option("--qstar", a.qstar, "reuse a solved Q* instead of solving");
  certify_cmd->add_option("--opts", a.opts);
  certify_cmd->add_option("--out", a.out)->default_val("cert.json");

  auto* brute = app.add_subcommand("brute", "tensor-grid log Z for n <= 4");
  brute->add_option("--model", a.model)->required();
  brute->add_option("--opts", a.opts);
  brute->add_option("--out", a.out)->default_val("truth.json");

  auto* limit = app.add_subcommand("limit", "scalar or block large-n limit");
  limit->add_option("--model", a.model)->required();
  limit->add_option("--opts", a.opts);
  limit->add_option("--out", a.out)->default_val("limit.json");

  auto* sample = app.add_subcommand("sample", "draw from P (MALA) or from Q*");
  sample->add_option("--model", a.model)->required();
  sample->add_option("--target", a.target)->check(CLI::IsMember({"p", "q"}));
  sample->add_option("--qstar", a.qstar);
  sample->add_option("--opts", a.opts);
  sample->add_option("--out", a.out)->default_val("samples.bin");

  auto* control = app.add_subcommand("control", "distributed stochastic control report");
  control->add_option("--problem", a.problem)->required();
  control->add_option("--opts", a.opts);
  control->add_option("--out", a.out)->default_val("report.json");

  auto* tilt = app.add_subcommand("tilt", "Gaussian tilt fixed point");
  tilt->add_option("--model", a.model)->required();
  tilt->add_option("--t", a.t, "variance of the Gaussian")->check(CLI::PositiveNumber);
  tilt->add_option("--opts", a.opts);
  tilt->add_option("--out", a.out)->default_val("tilt.json");

  auto* accept = app.add_subcommand("accept", "run an acceptance suite");
  accept->add_option("suite", a.suite)->required()->check(CLI::IsMember(acceptance::suite_names()));
  accept->add_option("--fixture", a.fixture, "replacement model for the brute suite");
  accept->add_option("--out", a.out, "directory for acceptance-report.json")->default_val(".");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  if (a.threads > 0) set_threads(a.threads);

  const std::string started = utc_now();
  const std::string name = app.get_subcommands().front()->get_name();
  Run run(name, a);
  int exit_code = 0;
  std::string code, message;
  try {
    run.set_out(a.out, name == "accept");
    if (name == "solve") exit_code = cmd_solve(run);
    else if (name == "certify") exit_code = cmd_certify(run);
    else if (name == "brute") exit_code = cmd_brute(run);
    else if (name == "limit") exit_code = cmd_limit(run);
    else if (name == "sample") exit_code = cmd_sample(run);
    else if (name == "control") exit_code = cmd_control(run);
    else if (name == "tilt") exit_code = cmd_tilt(run);
    else exit_code = cmd_accept(run);
  } catch (const Failure& f) {
    exit_code = f.exit_code;
    code = f.code;
    message = f.what();
  } catch (const Error& e) {
    exit_code = is_gate(e.code()) ? 2 : 1;
    code = std::string(code_name(e.code()));
    message = e.what();
  } catch (const std::exception& e) {
    exit_code = 1;
    code = "E_INTERNAL";
    message = e.what();
  }
  if (!code.empty()) std::cerr << "mfcert: " << code << ": " << message << "\n";
  run.finish(exit_code, code, message, started);
  return exit_code;
}

}  // namespace mfcert::cli
