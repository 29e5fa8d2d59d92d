#pragma once

// Dense arithmetic kernels used by every model in the library. Each kernel
// has a scalar reference implementation and, on x86-64, an AVX2+FMA variant.
// The active variant is chosen once at startup from CPUID and can be pinned
// with SCSAMPLER_ISA=scalar|avx2 or set_active_isa().
//
// Model parameters are double; clip features stay float32 as stored on disk,
// so the mixed kernels widen features on load.

#include <cassert>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace scsampler::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  double (*dot_f64_f32)(const double* w, const float* x, std::size_t n);
  double (*dot_f64)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy_f64_f32)(double alpha, const float* x, double* y, std::size_t n);
  void (*axpy_f64)(double alpha, const double* x, double* y, std::size_t n);
  // out[r] = bias[r] + W[r, :] . x, W row-major rows x cols
  void (*gemv_f64_f32)(const double* w, std::size_t rows, std::size_t cols,
                       const float* x, const double* bias, double* out);
};

const KernelTable& scalar_table();
// nullptr when the build has no AVX2 variant.
const KernelTable* avx2_table();

bool isa_supported(Isa isa);
Isa detect_isa();
Isa active_isa();
// Throws std::invalid_argument when the ISA is not supported on this host.
void set_active_isa(Isa isa);
const KernelTable& active();

std::string_view isa_name(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

inline double dot(std::span<const double> w, std::span<const float> x) {
  assert(w.size() == x.size());
  return active().dot_f64_f32(w.data(), x.data(), x.size());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().dot_f64(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const float> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().axpy_f64_f32(alpha, x.data(), y.data(), x.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().axpy_f64(alpha, x.data(), y.data(), x.size());
}

inline void gemv(std::span<const double> w, std::span<const float> x,
                 std::span<const double> bias, std::span<double> out) {
  assert(w.size() == out.size() * x.size());
  assert(bias.size() == out.size());
  active().gemv_f64_f32(w.data(), out.size(), x.size(), x.data(), bias.data(),
                        out.data());
}

}  // namespace scsampler::kernels
