#include <cmath>
#include <limits>

#include "mfcert/simd.hpp"

namespace mfcert::simd::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double max(const double* a, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (a[i] > m) m = a[i];
  return m;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void correlate(const double* table, const double* v, std::size_t n_v, double* out,
               std::size_t n_out) {
  for (std::size_t k = 0; k < n_out; ++k) out[k] = dot(table + k, v, n_v);
}

}  // namespace

const KernelTable table{dot, sum, max, axpy, correlate};

}  // namespace mfcert::simd::scalar
