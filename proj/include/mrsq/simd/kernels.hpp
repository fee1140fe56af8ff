#pragma once

// Data-parallel inner loops used by the signal model and the network.
//
// Every kernel has a scalar reference implementation and an AVX2/FMA variant.
// The variant is picked once at startup from CPUID; MRSQ_ISA=scalar|avx2 in the
// environment overrides the choice. Variants agree to rounding (the AVX2 dot
// product reassociates the sum), and tests/unit/test_simd.cpp pins that.

#include <cstddef>
#include <span>
#include <string_view>

namespace mrsq::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// sum_i x[i]^2
  double (*sum_sq)(const double* x, std::size_t n);
  /// Elementwise complex product on interleaved (re, im) pairs; n counts complex values.
  void (*cmul)(const double* a, const double* b, double* out, std::size_t n);
};

const KernelTable& table(Isa isa);
bool supported(Isa isa);

/// Kernels selected for this process.
const KernelTable& active();
Isa active_isa();

/// Switch the process-wide selection. Throws ConfigError when the CPU lacks the ISA.
void select(Isa isa);

std::string_view name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double sum_sq(std::span<const double> x) { return active().sum_sq(x.data(), x.size()); }

namespace detail {
extern const KernelTable kScalarTable;
extern const KernelTable kAvx2Table;
}  // namespace detail

}  // namespace mrsq::simd
