// Compiled with -mavx2 -mfma. Only reached through the dispatch table after
// a CPUID check, so nothing here may run on hosts without AVX2.

#include <immintrin.h>

#include "scsampler/kernels.hpp"

namespace scsampler::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_f64_f32(const double* w, const float* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d x0 = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    const __m256d x1 = _mm256_cvtps_pd(_mm_loadu_ps(x + i + 4));
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), x0, acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(w + i + 4), x1, acc1);
  }
  if (i + 4 <= n) {
    const __m256d x0 = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), x0, acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += w[i] * static_cast<double>(x[i]);
  return s;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_f64_f32(double alpha, const float* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, xv, _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * static_cast<double>(x[i]);
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_f64_f32(const double* w, std::size_t rows, std::size_t cols,
                  const float* x, const double* bias, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = bias[r] + dot_f64_f32(w + r * cols, x, cols);
  }
}

constexpr KernelTable kAvx2{dot_f64_f32, dot_f64, axpy_f64_f32, axpy_f64,
                            gemv_f64_f32};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2; }

}  // namespace scsampler::kernels
