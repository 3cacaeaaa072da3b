// Every vectorised kernel must agree with the scalar reference.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfcert/rng.hpp"
#include "mfcert/simd.hpp"

using namespace mfcert;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t key) {
  CounterRng rng(99);
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = rng.normal(key, k);
  return v;
}

std::vector<simd::Isa> vector_isas() {
  std::vector<simd::Isa> out;
  for (auto isa : {simd::Isa::Avx2, simd::Isa::Neon})
    if (simd::isa_available(isa)) out.push_back(isa);
  return out;
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  const auto& t = simd::kernels(simd::Isa::Scalar);
  const auto a = noise(37, 1), b = noise(37, 2);
  double dot = 0.0, sum = 0.0, mx = a[0];
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    sum += a[k];
    mx = std::max(mx, a[k]);
  }
  CHECK(t.dot(a.data(), b.data(), a.size()) == doctest::Approx(dot).epsilon(1e-14));
  CHECK(t.sum(a.data(), a.size()) == doctest::Approx(sum).epsilon(1e-14));
  CHECK(t.max(a.data(), a.size()) == mx);
}

TEST_CASE("vector kernels agree with scalar on every length") {
  const auto& ref = simd::kernels(simd::Isa::Scalar);
  for (auto isa : vector_isas()) {
    CAPTURE(simd::isa_name(isa));
    const auto& t = simd::kernels(isa);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 1025u}) {
      CAPTURE(n);
      const auto a = noise(n, 3), b = noise(n, 4);
      const double scale = std::sqrt(static_cast<double>(n) + 1.0);
      CHECK(std::abs(t.dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= 1e-13 * scale);
      CHECK(std::abs(t.sum(a.data(), n) - ref.sum(a.data(), n)) <= 1e-13 * scale);
      if (n > 0) CHECK(t.max(a.data(), n) == ref.max(a.data(), n));
      auto y1 = b, y2 = b;
      t.axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t k = 0; k < n; ++k) CHECK(y1[k] == doctest::Approx(y2[k]).epsilon(1e-15));
    }
  }
}

TEST_CASE("vector correlate agrees with scalar") {
  const auto& ref = simd::kernels(simd::Isa::Scalar);
  for (auto isa : vector_isas()) {
    const auto& t = simd::kernels(isa);
    for (std::size_t n_v : {1u, 5u, 33u, 129u}) {
      for (std::size_t n_out : {1u, 6u, 33u}) {
        const auto table = noise(n_v + n_out - 1, 5), v = noise(n_v, 6);
        std::vector<double> o1(n_out), o2(n_out);
        t.correlate(table.data(), v.data(), n_v, o1.data(), n_out);
        ref.correlate(table.data(), v.data(), n_v, o2.data(), n_out);
        for (std::size_t k = 0; k < n_out; ++k) CHECK(std::abs(o1[k] - o2[k]) <= 1e-12 * std::sqrt(n_v + 1.0));
      }
    }
  }
}

TEST_CASE("forcing the ISA switches the free functions") {
  const simd::Isa before = simd::active_isa();
  REQUIRE(simd::force_isa(simd::Isa::Scalar));
  CHECK(simd::active_isa() == simd::Isa::Scalar);
  const auto a = noise(100, 7), b = noise(100, 8);
  const double s = simd::dot(a, b);
  for (auto isa : vector_isas()) {
    REQUIRE(simd::force_isa(isa));
    CHECK(simd::dot(a, b) == doctest::Approx(s).epsilon(1e-13));
  }
  simd::force_isa(before);
}
