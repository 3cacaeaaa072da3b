#pragma once

// Data-parallel reductions used by the quadrature inner loops. Each kernel has
// a scalar reference implementation plus vectorised variants (AVX2+FMA on
// x86-64, NEON on AArch64). The variant is picked once at startup from the
// CPU's capabilities; MFCERT_SIMD=scalar|avx2|neon overrides it.
//
// Variants may differ from the scalar reference in summation order, so
// results agree to rounding, not bitwise. For a fixed ISA every kernel is a
// deterministic function of its inputs.

#include <cstddef>
#include <span>
#include <string_view>

namespace mfcert::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*max)(const double* a, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[k] = sum_j table[k + j] * v[j] for k < n_out, j < n_v.
  void (*correlate)(const double* table, const double* v, std::size_t n_v, double* out,
                    std::size_t n_out);
};

std::string_view isa_name(Isa isa) noexcept;

/// Compiled in and supported by the running CPU.
bool isa_available(Isa isa) noexcept;

/// Kernels for a specific ISA. Falls back to scalar when unavailable.
const KernelTable& kernels(Isa isa) noexcept;

Isa active_isa() noexcept;

/// Select the ISA used by the free functions below. Returns false (and leaves
/// the selection unchanged) when `isa` is not available.
bool force_isa(Isa isa) noexcept;

double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);
double max(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void correlate(std::span<const double> table, std::span<const double> v, std::span<double> out);

namespace scalar {
extern const KernelTable table;
}
#if defined(MFCERT_HAVE_AVX2)
namespace avx2 {
extern const KernelTable table;
}
#endif
#if defined(MFCERT_HAVE_NEON)
namespace neon {
extern const KernelTable table;
}
#endif

}  // namespace mfcert::simd
