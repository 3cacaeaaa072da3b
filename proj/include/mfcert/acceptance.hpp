#pragma once

// The acceptance suite: ten numbered criteria with pinned seeds and
// tolerances. Shared by `mfcert accept` and the acceptance test binary.

#include <optional>
#include <string>
#include <vector>

#include "mfcert/io.hpp"

namespace mfcert::acceptance {

struct Check {
  std::string name;
  double measured = 0.0;
  /// For "near": the target; for "le": the right-hand side.
  double target = 0.0;
  double tol = 0.0;
  std::string relation;  // "near", "le" or "true"
  bool pass = false;
};

struct Criterion {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  double seconds = 0.0;
  /// Set when the criterion aborted with an error.
  std::string error;

  bool pass() const;
  /// "criterion  1 PASS  gaussian oracle  (112 checks, 2.1 s)".
  std::string line() const;
};

struct Fixtures {
  /// Replaces the brute-force sandwich models (criterion 2).
  std::optional<ModelSpec> brute_model;
};

/// gaussian, brute, gibbs, limits, bayes, sampler, control, all.
const std::vector<std::string>& suite_names();
/// Errors: InvalidArgument for an unknown suite.
std::vector<int> suite_criteria(const std::string& suite);

/// Errors propagate only for fixture problems (e.g. DimensionTooLarge);
/// numerical failures are recorded in Criterion::error.
Criterion run_criterion(int id, const Fixtures& fixtures = {});

json to_json(const Criterion& c);

}  // namespace mfcert::acceptance
