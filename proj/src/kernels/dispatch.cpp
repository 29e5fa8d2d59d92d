#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "scsampler/kernels.hpp"

namespace scsampler::kernels {

#if !SCSAMPLER_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if SCSAMPLER_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  if (const char* env = std::getenv("SCSAMPLER_ISA")) {
    if (auto isa = parse_isa(env); isa && isa_supported(*isa)) return *isa;
  }
  return detect_isa();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{
      initial_isa() == Isa::avx2 ? avx2_table() : &scalar_table()};
  return table;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return avx2_table() != nullptr && cpu_has_avx2();
  }
  return false;
}

Isa detect_isa() { return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

Isa active_isa() {
  return current().load(std::memory_order_relaxed) == &scalar_table() ? Isa::scalar
                                                                      : Isa::avx2;
}

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel ISA not supported on this host: " +
                                std::string(isa_name(isa)));
  }
  current().store(isa == Isa::avx2 ? avx2_table() : &scalar_table(),
                  std::memory_order_relaxed);
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  return std::nullopt;
}

}  // namespace scsampler::kernels
