// Built with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "mfcert/simd.hpp"

namespace mfcert::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(a + i + 4));
  }
  if (i + 4 <= n) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(a + i));
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i];
  return acc;
}

double max(const double* a, std::size_t n) {
  const double ninf = -std::numeric_limits<double>::infinity();
  __m256d m = _mm256_set1_pd(ninf);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_loadu_pd(a + i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double r = ninf;
  for (double l : lanes)
    if (l > r) r = l;
  for (; i < n; ++i)
    if (a[i] > r) r = a[i];
  return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four outputs per pass so each load of v is reused four times.
void correlate(const double* table, const double* v, std::size_t n_v, double* out,
               std::size_t n_out) {
  std::size_t k = 0;
  for (; k + 4 <= n_out; k += 4) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n_v; j += 4) {
      const __m256d vv = _mm256_loadu_pd(v + j);
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(table + k + j), vv, a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(table + k + 1 + j), vv, a1);
      a2 = _mm256_fmadd_pd(_mm256_loadu_pd(table + k + 2 + j), vv, a2);
      a3 = _mm256_fmadd_pd(_mm256_loadu_pd(table + k + 3 + j), vv, a3);
    }
    double r0 = hsum(a0), r1 = hsum(a1), r2 = hsum(a2), r3 = hsum(a3);
    for (; j < n_v; ++j) {
      r0 += table[k + j] * v[j];
      r1 += table[k + 1 + j] * v[j];
      r2 += table[k + 2 + j] * v[j];
      r3 += table[k + 3 + j] * v[j];
    }
    out[k] = r0;
    out[k + 1] = r1;
    out[k + 2] = r2;
    out[k + 3] = r3;
  }
  for (; k < n_out; ++k) out[k] = dot(table + k, v, n_v);
}

}  // namespace

const KernelTable table{dot, sum, max, axpy, correlate};

}  // namespace mfcert::simd::avx2
