#pragma once

#include <complex>
#include <cstddef>

namespace mrsq::fft {

/// Unnormalized forward DFT, X[k] = sum_t x[t] exp(-2 pi i k t / n). Out-of-place,
/// thread-safe; plans are cached per length.
void forward(const std::complex<double>* in, std::complex<double>* out, std::size_t n);

}  // namespace mrsq::fft
