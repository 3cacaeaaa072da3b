#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfcert {

enum class Errc {
  AllNegInfinite,
  NonFiniteInput,
  OutOfRange,
  NonFiniteKernel,
  NonFinite,
  NotStronglyConcave,
  InvalidModel,
  NoConvergence,
  GridOverflow,
  SymmetryGateFailed,
  DimensionTooLarge,
  NotSPD,
  LengthMismatch,
  DivergentChain,
  NotDoublyStochastic,
  NotNonpositiveKernel,
  TimeOutOfRange,
  ClipBudgetExceeded,
  InvalidArgument,
  Io,
};

/// Stable machine-readable name, e.g. "E_NO_CONVERGENCE".
std::string_view code_name(Errc code) noexcept;

/// True for errors that represent a failed certification gate rather than a
/// malfunction; the CLI maps these to exit code 2.
bool is_gate(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace mfcert
