#include "mfcert/error.hpp"

namespace mfcert {

std::string_view code_name(Errc code) noexcept {
  switch (code) {
    case Errc::AllNegInfinite: return "E_ALL_NEG_INFINITE";
    case Errc::NonFiniteInput: return "E_NON_FINITE_INPUT";
    case Errc::OutOfRange: return "E_OUT_OF_RANGE";
    case Errc::NonFiniteKernel: return "E_NON_FINITE_KERNEL";
    case Errc::NonFinite: return "E_NON_FINITE";
    case Errc::NotStronglyConcave: return "E_NOT_STRONGLY_CONCAVE";
    case Errc::InvalidModel: return "E_INVALID_MODEL";
    case Errc::NoConvergence: return "E_NO_CONVERGENCE";
    case Errc::GridOverflow: return "E_GRID_OVERFLOW";
    case Errc::SymmetryGateFailed: return "E_SYMMETRY_GATE_FAILED";
    case Errc::DimensionTooLarge: return "E_DIMENSION_TOO_LARGE";
    case Errc::NotSPD: return "E_NOT_SPD";
    case Errc::LengthMismatch: return "E_LENGTH_MISMATCH";
    case Errc::DivergentChain: return "E_DIVERGENT_CHAIN";
    case Errc::NotDoublyStochastic: return "E_NOT_DOUBLY_STOCHASTIC";
    case Errc::NotNonpositiveKernel: return "E_NOT_NONPOSITIVE_KERNEL";
    case Errc::TimeOutOfRange: return "E_TIME_OUT_OF_RANGE";
    case Errc::ClipBudgetExceeded: return "E_CLIP_BUDGET_EXCEEDED";
    case Errc::InvalidArgument: return "E_INVALID_ARGUMENT";
    case Errc::Io: return "E_IO";
  }
  return "E_UNKNOWN";
}

bool is_gate(Errc code) noexcept {
  return code == Errc::SymmetryGateFailed || code == Errc::NotDoublyStochastic ||
         code == Errc::NotNonpositiveKernel;
}

}  // namespace mfcert
