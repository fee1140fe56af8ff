#include <atomic>
#include <cstdlib>
#include <string>

#include "mrsq/error.hpp"
#include "mrsq/simd/kernels.hpp"

namespace mrsq::simd {
namespace {

bool cpu_has_avx2() {
#if defined(MRSQ_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  if (const char* env = std::getenv("MRSQ_ISA")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && cpu_has_avx2()) return Isa::avx2;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

bool supported(Isa isa) { return isa == Isa::scalar || cpu_has_avx2(); }

const KernelTable& table(Isa isa) {
  return isa == Isa::avx2 ? detail::kAvx2Table : detail::kScalarTable;
}

const KernelTable& active() { return table(current().load(std::memory_order_relaxed)); }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void select(Isa isa) {
  if (!supported(isa)) throw ConfigError("ISA not supported on this CPU: " + std::string(name(isa)));
  current().store(isa, std::memory_order_relaxed);
}

std::string_view name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace mrsq::simd
