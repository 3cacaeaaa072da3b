#include "mfcert/io.hpp"

#include <fstream>
#include <sstream>

#include "mfcert/error.hpp"

namespace mfcert {
namespace {

const json& at(const json& j, const char* key, const char* what) {
  require(j.is_object() && j.contains(key), Errc::InvalidModel, std::string(what) + ": missing \"" + key + "\"");
  return j.at(key);
}

double number(const json& j, const char* key, const char* what) {
  const json& v = at(j, key, what);
  require(v.is_number(), Errc::InvalidModel, std::string(what) + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

std::vector<double> vec(const json& j, const char* what) {
  require(j.is_array(), Errc::InvalidModel, std::string(what) + " must be an array");
  std::vector<double> v;
  for (const auto& x : j) {
    require(x.is_number(), Errc::InvalidModel, std::string(what) + " must hold numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

json matrix_json(const Matrix& m) { return m.to_rows(); }

/// Type-checked read of an optional option field.
template <class T>
void opt(const json& j, const char* key, T& out) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, std::string("option \"") + key + "\": " + e.what());
  }
}

}  // namespace

json read_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(Errc::Io, "cannot parse " + path + ": " + e.what());
  }
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::Io, "cannot write " + path);
  out << text;
  require(out.good(), Errc::Io, "write failed: " + path);
}

ScalarPotential parse_potential(const json& j) {
  const std::string name = at(j, "name", "potential").get<std::string>();
  const double mu = j.value("mu", 0.0);
  ScalarPotential v;
  if (name == "gaussian_well") {
    v = gaussian_well(number(j, "kappa", "gaussian_well"), mu);
  } else if (name == "quartic_well") {
    v = quartic_well(number(j, "kappa", "quartic_well"), number(j, "lambda", "quartic_well"), mu);
  } else {
    fail(Errc::InvalidModel, "unknown potential \"" + name + "\"");
  }
  if (j.contains("scale")) v = scaled(v, number(j, "scale", "potential"));
  return v;
}

InteractionKernel parse_kernel(const json& j) {
  const std::string name = j.is_string() ? j.get<std::string>() : at(j, "name", "kernel").get<std::string>();
  InteractionKernel k;
  if (name == "neg_quadratic_kernel" || name == "neg_quadratic") {
    k = neg_quadratic_kernel();
  } else if (name == "neg_sqrt_kernel" || name == "neg_sqrt") {
    k = neg_sqrt_kernel();
  } else if (name == "neg_logcosh" || name == "neg_logcosh_kernel") {
    k = neg_logcosh_kernel();
  } else if (name == "zero" || name == "zero_kernel") {
    k = zero_kernel();
  } else {
    fail(Errc::InvalidModel, "unknown kernel \"" + name + "\"");
  }
  if (j.is_object() && j.contains("scale")) k = scaled(k, number(j, "scale", "kernel"));
  return k;
}

Matrix parse_matrix(const json& j) {
  require(j.is_array() && !j.empty(), Errc::InvalidModel, "matrix must be a nonempty array of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& r : j) rows.push_back(vec(r, "matrix row"));
  for (const auto& r : rows)
    require(r.size() == rows.front().size(), Errc::InvalidModel, "matrix rows differ in length");
  return Matrix::from_rows(rows);
}

Matrix parse_coupling(const json& j) {
  if (j.is_array()) return parse_matrix(j);
  require(j.is_object() && j.size() == 1, Errc::InvalidModel, "J must be an array or a single generator");
  const auto& [key, val] = *j.items().begin();
  if (key == "cycle") return cycle_graph(val.get<std::size_t>());
  if (key == "complete") return complete_graph(val.get<std::size_t>());
  if (key == "dregular")
    return dregular_graph(at(val, "n", "dregular").get<std::size_t>(), at(val, "d", "dregular").get<std::size_t>(),
                          val.value("seed", std::uint64_t{0}));
  if (key == "block") {
    std::vector<std::size_t> sizes;
    for (const auto& s : at(val, "sizes", "block")) sizes.push_back(s.get<std::size_t>());
    return block_graph(sizes, parse_matrix(at(val, "weights", "block")));
  }
  fail(Errc::InvalidModel, "unknown graph generator \"" + key + "\"");
}

ModelSpec parse_model(const json& j) {
  require(j.is_object(), Errc::InvalidModel, "model spec must be an object");
  const std::string type = at(j, "type", "model").get<std::string>();
  ModelSpec spec{QuadraticModel{}, std::nullopt, j.value("growth_override", false)};
  try {
    if (type == "pairwise") {
      Matrix jm = parse_coupling(at(j, "J", "pairwise"));
      const std::string norm = j.value("normalize", std::string("none"));
      if (norm == "rows") {
        jm = row_normalized(jm);
      } else {
        require(norm == "none", Errc::InvalidModel, "normalize must be \"rows\" or \"none\"");
      }
      if (j.contains("J_scale")) jm *= number(j, "J_scale", "pairwise");
      spec.model = PairwiseGibbs{parse_potential(at(j, "V", "pairwise")), parse_kernel(at(j, "K", "pairwise")),
                                 CouplingMatrix(std::move(jm))};
    } else if (type == "quadratic") {
      QuadraticModel q;
      q.A = parse_matrix(at(j, "A", "quadratic"));
      if (j.contains("b")) q.b = vec(j.at("b"), "b");
      q.concave_only = j.value("concave_only", false);
      require(q.A.square() && (q.b.empty() || q.b.size() == q.A.rows()), Errc::InvalidModel,
              "quadratic: A must be square and b must match");
      spec.model = std::move(q);
    } else if (type == "bayes") {
      spec.model = make_bayes(parse_matrix(at(j, "X", "bayes")), vec(at(j, "y", "bayes"), "y"), j.value("sigma2", 1.0),
                              parse_potential(at(j, "prior", "bayes")));
    } else if (type == "blackbox-builtin") {
      const std::string name = at(j, "name", "blackbox-builtin").get<std::string>();
      const Matrix a = parse_matrix(at(j, "A", "blackbox-builtin"));
      if (name == "quadratic_lse") {
        spec.model = quadratic_lse_blackbox(a, number(j, "s", "quadratic_lse"));
      } else if (name == "quadratic") {
        spec.model = quadratic_blackbox(a, j.contains("b") ? vec(j.at("b"), "b") : std::vector<double>{});
      } else {
        fail(Errc::InvalidModel, "unknown black-box builtin \"" + name + "\"");
      }
    } else {
      fail(Errc::InvalidModel, "unknown model type \"" + type + "\"");
    }
  } catch (const json::exception& e) {
    fail(Errc::InvalidModel, std::string("model spec: ") + e.what());
  }
  if (j.contains("reference")) {
    spec.reference_t = number(j.at("reference"), "gaussian_t", "reference");
    require(*spec.reference_t > 0.0, Errc::InvalidModel, "reference: gaussian_t must be positive");
  }
  return spec;
}

ModelSpec load_model(const std::string& path) { return parse_model(read_json(path)); }

LimitSpec parse_limit_spec(const json& j) {
  LimitSpec s{parse_potential(at(j, "V", "limit")), parse_kernel(at(j, "K", "limit")), std::nullopt};
  if (j.contains("weights")) {
    s.weights = parse_matrix(j.at("weights"));
  } else {
    require(j.value("scalar", true), Errc::InvalidModel, "limit spec needs \"scalar\": true or \"weights\"");
  }
  return s;
}

ControlProblem parse_control(const json& j) {
  ControlProblem p;
  p.n = at(j, "n", "control").get<std::size_t>();
  p.T = number(j, "T", "control");
  p.g = parse_model(at(j, "g", "control")).model;
  if (j.contains("sde")) {
    const json& s = j.at("sde");
    opt(s, "dt", p.sde.dt);
    opt(s, "paths", p.sde.paths);
    opt(s, "seed", p.sde.seed);
    opt(s, "clip_budget", p.sde.clip_budget);
  }
  return p;
}

SolveOptions parse_solve_options(const json& j) {
  SolveOptions o;
  opt(j, "max_sweeps", o.max_sweeps);
  opt(j, "tol_logdensity", o.tol_logdensity);
  opt(j, "tol_elbo", o.tol_elbo);
  opt(j, "damping", o.damping);
  opt(j, "mc_samples", o.mc_samples);
  opt(j, "seed", o.seed);
  opt(j, "grid_points", o.grid_points);
  opt(j, "window_sd", o.window_sd);
  opt(j, "max_expansions", o.max_expansions);
  std::string sched = "gauss_seidel";
  opt(j, "schedule", sched);
  require(sched == "gauss_seidel" || sched == "jacobi", Errc::InvalidArgument,
          "schedule must be \"gauss_seidel\" or \"jacobi\"");
  o.schedule = sched == "jacobi" ? Schedule::Jacobi : Schedule::GaussSeidel;
  return o;
}

CertifyOptions parse_certify_options(const json& j) {
  CertifyOptions o;
  opt(j, "mc_samples", o.mc_samples);
  opt(j, "seed", o.seed);
  opt(j, "mc_sigmas", o.mc_sigmas);
  return o;
}

ChainOptions parse_chain_options(const json& j) {
  ChainOptions o;
  opt(j, "steps", o.steps);
  opt(j, "burnin", o.burnin);
  opt(j, "n_chains", o.n_chains);
  opt(j, "thin", o.thin);
  opt(j, "seed", o.seed);
  opt(j, "mala", o.mala);
  if (j.is_object() && j.contains("step_size") && !j.at("step_size").is_null()) o.step_size = j.at("step_size").get<double>();
  return o;
}

TiltOptions parse_tilt_options(const json& j) {
  TiltOptions o;
  opt(j, "lambda", o.lambda);
  opt(j, "tol", o.tol);
  opt(j, "max_iter", o.max_iter);
  opt(j, "gh_order", o.gh_order);
  opt(j, "mc_samples", o.mc_samples);
  opt(j, "seed", o.seed);
  return o;
}

LimitOptions parse_limit_options(const json& j) {
  LimitOptions o;
  opt(j, "damping", o.damping);
  opt(j, "tol", o.tol);
  opt(j, "max_iter", o.max_iter);
  opt(j, "grid_points", o.grid_points);
  opt(j, "window_sd", o.window_sd);
  if (j.is_object() && j.contains("random_init_seed") && !j.at("random_init_seed").is_null())
    o.random_init_seed = j.at("random_init_seed").get<std::uint64_t>();
  return o;
}

BruteOptions parse_brute_options(const json& j) {
  BruteOptions o;
  opt(j, "m_start", o.m_start);
  opt(j, "m_max", o.m_max);
  opt(j, "tol", o.tol);
  opt(j, "window_sd", o.window_sd);
  return o;
}

json to_json(const GridDensity& q) {
  return {{"lo", q.grid().lo()}, {"hi", q.grid().hi()}, {"m", q.size()},
          {"logw", std::vector<double>(q.logw().begin(), q.logw().end())}, {"logZ1", q.logZ1()}};
}

GridDensity density_from_json(const json& j) {
  try {
    const Grid g(j.at("lo").get<double>(), j.at("hi").get<double>(), j.at("m").get<std::size_t>());
    return normalize(j.at("logw").get<std::vector<double>>(), g);
  } catch (const json::exception& e) {
    fail(Errc::InvalidArgument, std::string("grid density: ") + e.what());
  }
}

json to_json(const ProductMeasure& q) {
  json a = json::array();
  for (const auto& d : q) a.push_back(to_json(d));
  return a;
}

ProductMeasure product_from_json(const json& j) {
  require(j.is_array(), Errc::InvalidArgument, "marginals must be an array");
  ProductMeasure q;
  for (const auto& d : j) q.push_back(density_from_json(d));
  return q;
}

std::string mode_name(SolveMode m) { return m == SolveMode::Reference ? "reference" : "lebesgue"; }

json to_json(const SolveResult& r) {
  std::vector<double> means, vars;
  for (const auto& d : r.qstar) {
    means.push_back(mean(d));
    vars.push_back(variance(d));
  }
  return {{"n", r.qstar.size()},
          {"mode", mode_name(r.mode)},
          {"sweeps_used", r.sweeps_used},
          {"residual", r.residual},
          {"window_expansions", r.window_expansions},
          {"elbo", r.elbo_trace.empty() ? json(nullptr) : json(r.elbo_trace.back())},
          {"elbo_trace", r.elbo_trace},
          {"means", means},
          {"variances", vars},
          {"marginals", to_json(r.qstar)}};
}

ProductMeasure qstar_from_json(const json& j) {
  if (j.is_array()) return product_from_json(j);
  require(j.is_object() && j.contains("marginals"), Errc::InvalidArgument, "qstar file has no \"marginals\"");
  return product_from_json(j.at("marginals"));
}

json to_json(const Certificate& c) {
  return {{"n", c.n},
          {"mode", mode_name(c.mode)},
          {"kappa", c.kappa},
          {"monte_carlo", c.monte_carlo},
          {"elbo", c.elbo},
          {"elbo_stderr", c.elbo_stderr},
          {"var_bound", c.var_bound},
          {"var_stderr", c.var_stderr},
          {"cross_bound", c.cross_bound},
          {"cross_stderr", c.cross_stderr},
          {"trJ2_bound", c.trJ2_bound ? json(*c.trJ2_bound) : json(nullptr)},
          {"trJ2_status", c.trJ2_status},
          {"rbar", c.rbar},
          {"bound_source", c.bound_source},
          {"logZ_lo", c.logZ_lo},
          {"logZ_hi", c.logZ_hi}};
}

json to_json(const ConcentrationReport& c) {
  return {{"rbar", c.rbar},
          {"lln_rhs", c.lln_rhs},
          {"k", c.k},
          {"w2_budget", c.w2_budget},
          {"bayes_lln_rhs", c.bayes_lln_rhs ? json(*c.bayes_lln_rhs) : json(nullptr)}};
}

json to_json(const BruteResult& r) {
  return {{"logZ", r.logZ}, {"m_used", r.m_used}, {"refinement_change", r.refinement_change}, {"converged", r.converged}};
}

json to_json(const GaussianTruth& t) {
  return {{"logZ", t.logZ},           {"log_det", t.log_det},           {"rf_exact", t.rf_exact},
          {"qstar_vars", t.qstar_vars}, {"marginal_vars", t.marginal_vars}, {"pstar_vars", t.pstar_vars},
          {"A", matrix_json(t.A)}};
}

json to_json(const TiltResult& r) {
  return {{"ystar", r.ystar}, {"value", r.value}, {"iterations", r.iterations}, {"lambda_used", r.lambda_used}};
}

json to_json(const ScalarLimit& r) {
  return {{"kind", "scalar"},
          {"value", r.value},
          {"iterations", r.iterations},
          {"residual", r.residual},
          {"mean", mean(r.q)},
          {"variance", variance(r.q)},
          {"q", to_json(r.q)}};
}

json to_json(const BlockLimit& r) {
  json blocks = json::array();
  for (const auto& q : r.blocks)
    blocks.push_back({{"mean", mean(q)}, {"variance", variance(q)}, {"q", to_json(q)}});
  return {{"kind", "block"},
          {"value", r.value},
          {"v_shift", r.v_shift},
          {"iterations", r.iterations},
          {"residual", r.residual},
          {"weights", matrix_json(r.weights)},
          {"blocks", blocks},
          {"mixture", to_json(r.mixture)}};
}

json to_json(const SimResult& r) {
  return {{"mean", r.mean},
          {"stderr", r.stderr_},
          {"drift_evals", r.drift_evals},
          {"clip_events", r.clip_events},
          {"clip_limit", r.clip_limit},
          {"terminal_mean", r.terminal_mean},
          {"terminal_var", r.terminal_var},
          {"terminal_w2", r.terminal_w2},
          {"w2_floor", r.w2_floor}};
}

json to_json(const ControlReport& r) {
  json orig = r.v_orig.exact ? json(r.v_orig.lo) : json{{"lo", r.v_orig.lo}, {"hi", r.v_orig.hi}};
  return {{"v_orig", orig},
          {"v_orig_exact", r.v_orig.exact},
          {"v_dstr", r.v_dstr},
          {"v_det", r.v_det},
          {"ystar", r.ystar},
          {"gap_bound", r.bounds.gap_bound},
          {"det_gap_bound", r.bounds.det_gap_bound},
          {"sim_objective", r.sim ? to_json(*r.sim) : json(nullptr)},
          {"checks",
           {{"dstr_le_orig", r.dstr_le_orig},
            {"orig_gap_ok", r.orig_gap_ok},
            {"det_gap_ok", r.det_gap_ok},
            {"det_le_dstr", r.det_le_dstr}}},
          {"qstar", to_json(r.qstar)}};
}

}  // namespace mfcert
