// Compiled with -mavx2 -mfma. Only reached through the dispatcher after a CPUID check.

#include "mrsq/simd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

namespace mrsq::simd {

#if defined(__AVX2__) && defined(__FMA__)
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
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

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_avx2(const double* x, std::size_t n) { return dot_avx2(x, x, n); }

void cmul_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t k = 0;
  // Two complex values per register: [re0 im0 re1 im1].
  for (; k + 2 <= n; k += 2) {
    const __m256d va = _mm256_loadu_pd(a + 2 * k);
    const __m256d vb = _mm256_loadu_pd(b + 2 * k);
    const __m256d b_re = _mm256_movedup_pd(vb);        // [br0 br0 br1 br1]
    const __m256d b_im = _mm256_permute_pd(vb, 0xF);   // [bi0 bi0 bi1 bi1]
    const __m256d a_sw = _mm256_permute_pd(va, 0x5);   // [ai0 ar0 ai1 ar1]
    // [ar*br - ai*bi, ai*br + ar*bi]
    _mm256_storeu_pd(out + 2 * k, _mm256_fmaddsub_pd(va, b_re, _mm256_mul_pd(a_sw, b_im)));
  }
  for (; k < n; ++k) {
    const double ar = a[2 * k], ai = a[2 * k + 1];
    const double br = b[2 * k], bi = b[2 * k + 1];
    out[2 * k] = ar * br - ai * bi;
    out[2 * k + 1] = ar * bi + ai * br;
  }
}

}  // namespace

namespace detail {
const KernelTable kAvx2Table{dot_avx2, axpy_avx2, sum_sq_avx2, cmul_avx2};
}

#else

namespace detail {
// Built without AVX2 support; the dispatcher never selects this table.
const KernelTable kAvx2Table = kScalarTable;
}

#endif

}  // namespace mrsq::simd
