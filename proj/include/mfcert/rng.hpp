#pragma once

#include <cstdint>

namespace mfcert {

/// Counter-based generator: every draw is a pure function of the seed and a
/// tuple of up to four counters (e.g. chain, step, coordinate, stream), so
/// results do not depend on evaluation order or thread schedule.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t bits(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                     std::uint64_t d = 0) const noexcept;

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                 std::uint64_t d = 0) const noexcept;

  /// Standard normal (Box-Muller on two derived uniforms).
  double normal(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                std::uint64_t d = 0) const noexcept;

 private:
  std::uint64_t seed_;
};

/// Sequential view over a CounterRng with a fixed key prefix.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t key) noexcept : rng_(seed), key_(key) {}
  double uniform() noexcept { return rng_.uniform(key_, counter_++); }
  double normal() noexcept { return rng_.normal(key_, counter_++); }
  std::uint64_t below(std::uint64_t n) noexcept { return rng_.bits(key_, counter_++) % n; }

 private:
  CounterRng rng_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mfcert
