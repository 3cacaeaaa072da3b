#pragma once

// JSON model specifications, option files and report serialisation.

#include <optional>
#include <string>

#include <json.hpp>

#include "mfcert/certify.hpp"
#include "mfcert/control.hpp"
#include "mfcert/grid1d.hpp"
#include "mfcert/limits.hpp"
#include "mfcert/mfsolver.hpp"
#include "mfcert/models.hpp"
#include "mfcert/oracle.hpp"
#include "mfcert/sampler.hpp"

namespace mfcert {

using json = nlohmann::json;

/// Errors: Io (missing or unparsable file).
json read_json(const std::string& path);
void write_json(const std::string& path, const json& j);
void write_text(const std::string& path, const std::string& text);

/// A parsed model file. `reference_t` selects the reference-measure form
/// f = g + Σ log γ_t(x_i).
struct ModelSpec {
  Model model;
  std::optional<double> reference_t;
  bool growth_override = false;
};

/// {"name": "gaussian_well" | "quartic_well", "kappa", "lambda", "mu", "scale"}.
ScalarPotential parse_potential(const json& j);
/// {"name": "neg_quadratic_kernel" | "neg_sqrt_kernel" | "neg_logcosh" | "zero", "scale"}.
InteractionKernel parse_kernel(const json& j);
Matrix parse_matrix(const json& j);
/// Dense array or one of {"cycle": n}, {"complete": n}, {"dregular": {n, d, seed}},
/// {"block": {sizes, weights}}.
Matrix parse_coupling(const json& j);

/// Errors: InvalidModel.
ModelSpec parse_model(const json& j);
ModelSpec load_model(const std::string& path);

struct LimitSpec {
  ScalarPotential V;
  InteractionKernel K;
  std::optional<Matrix> weights;  // absent: scalar limit
};
LimitSpec parse_limit_spec(const json& j);

/// {n, T, g: model-spec, sde: {dt, paths, seed, clip_budget}}.
ControlProblem parse_control(const json& j);

SolveOptions parse_solve_options(const json& j);
CertifyOptions parse_certify_options(const json& j);
ChainOptions parse_chain_options(const json& j);
TiltOptions parse_tilt_options(const json& j);
LimitOptions parse_limit_options(const json& j);
BruteOptions parse_brute_options(const json& j);

json to_json(const GridDensity& q);
GridDensity density_from_json(const json& j);
json to_json(const ProductMeasure& q);
ProductMeasure product_from_json(const json& j);

json to_json(const SolveResult& r);
/// Accepts a SolveResult document or a bare array of marginals.
ProductMeasure qstar_from_json(const json& j);
json to_json(const Certificate& c);
json to_json(const ConcentrationReport& c);
json to_json(const BruteResult& r);
json to_json(const GaussianTruth& t);
json to_json(const TiltResult& r);
json to_json(const ScalarLimit& r);
json to_json(const BlockLimit& r);
json to_json(const SimResult& r);
json to_json(const ControlReport& r);

std::string mode_name(SolveMode m);

}  // namespace mfcert
