#include <arm_neon.h>

#include <cmath>
#include <limits>

#include "mfcert/simd.hpp"

namespace mfcert::simd::neon {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vld1q_f64(a + i));
    acc1 = vaddq_f64(acc1, vld1q_f64(a + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i];
  return acc;
}

double max(const double* a, std::size_t n) {
  double r = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  if (n >= 2) {
    float64x2_t m = vld1q_f64(a);
    for (i = 2; i + 2 <= n; i += 2) m = vmaxq_f64(m, vld1q_f64(a + i));
    r = vmaxvq_f64(m);
  }
  for (; i < n; ++i)
    if (a[i] > r) r = a[i];
  return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void correlate(const double* table, const double* v, std::size_t n_v, double* out,
               std::size_t n_out) {
  for (std::size_t k = 0; k < n_out; ++k) out[k] = dot(table + k, v, n_v);
}

}  // namespace

const KernelTable table{dot, sum, max, axpy, correlate};

}  // namespace mfcert::simd::neon
