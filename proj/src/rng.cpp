#include "mfcert/rng.hpp"

#include <cmath>
#include <numbers>

namespace mfcert {
namespace {

constexpr std::uint64_t mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t CounterRng::bits(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                               std::uint64_t d) const noexcept {
  std::uint64_t h = mix(seed_ + 0x9e3779b97f4a7c15ULL);
  h = mix(h ^ (a + 0x632be59bd9b4e019ULL));
  h = mix(h ^ (b + 0x85157af5ULL * 0x9e3779b97f4a7c15ULL));
  h = mix(h ^ (c + 0xd6e8feb86659fd93ULL));
  h = mix(h ^ (d + 0xa0761d6478bd642fULL));
  return h;
}

double CounterRng::uniform(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                           std::uint64_t d) const noexcept {
  // 53 random bits, offset by half an ulp so 0 and 1 are excluded.
  return (static_cast<double>(bits(a, b, c, d) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                          std::uint64_t d) const noexcept {
  const double u1 = uniform(a, b, c, 2 * d);
  const double u2 = uniform(a, b, c, 2 * d + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace mfcert
