#include "scsampler/kernels.hpp"

namespace scsampler::kernels {
namespace {

double dot_f64_f32(const double* w, const float* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * static_cast<double>(x[i]);
  return s;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_f64_f32(double alpha, const float* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * static_cast<double>(x[i]);
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_f64_f32(const double* w, std::size_t rows, std::size_t cols,
                  const float* x, const double* bias, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = bias[r] + dot_f64_f32(w + r * cols, x, cols);
  }
}

constexpr KernelTable kScalar{dot_f64_f32, dot_f64, axpy_f64_f32, axpy_f64,
                              gemv_f64_f32};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace scsampler::kernels
