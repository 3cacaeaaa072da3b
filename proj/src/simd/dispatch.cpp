#include <atomic>
#include <cstdlib>
#include <string_view>

#include "mfcert/error.hpp"
#include "mfcert/simd.hpp"

namespace mfcert::simd {
namespace {

bool cpu_has(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(MFCERT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(MFCERT_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detect() noexcept {
  if (const char* env = std::getenv("MFCERT_SIMD")) {
    const std::string_view want(env);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon})
      if (want == isa_name(isa) && cpu_has(isa)) return isa;
  }
  if (cpu_has(Isa::Avx2)) return Isa::Avx2;
  if (cpu_has(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

std::atomic<Isa>& selected() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

const KernelTable& active() noexcept { return kernels(selected().load(std::memory_order_relaxed)); }

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept { return cpu_has(isa); }

const KernelTable& kernels(Isa isa) noexcept {
  if (!cpu_has(isa)) return scalar::table;
  switch (isa) {
#if defined(MFCERT_HAVE_AVX2)
    case Isa::Avx2: return avx2::table;
#endif
#if defined(MFCERT_HAVE_NEON)
    case Isa::Neon: return neon::table;
#endif
    default: return scalar::table;
  }
}

Isa active_isa() noexcept { return selected().load(std::memory_order_relaxed); }

bool force_isa(Isa isa) noexcept {
  if (!cpu_has(isa)) return false;
  selected().store(isa, std::memory_order_relaxed);
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), Errc::LengthMismatch, "simd::dot: length mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }

double max(std::span<const double> a) { return active().max(a.data(), a.size()); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), Errc::LengthMismatch, "simd::axpy: length mismatch");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void correlate(std::span<const double> table, std::span<const double> v, std::span<double> out) {
  require(v.size() > 0 && table.size() + 1 >= out.size() + v.size(), Errc::LengthMismatch,
          "simd::correlate: table too short");
  active().correlate(table.data(), v.data(), v.size(), out.data(), out.size());
}

}  // namespace mfcert::simd
