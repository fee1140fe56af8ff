#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mrsq/model/params.hpp"
#include "mrsq/spectral/basis.hpp"

namespace mrsq {

using Rng = std::mt19937_64;

struct NoiseSpec {
  double sigma = 0.0;  ///< standard deviation of each of the real and imaginary parts
};

struct RandomWalkSpec {
  double step_size = 0.0;
  double smoothing = 1.0;  ///< window scale in [1, 1e5]; window = max(1, round(L * smoothing / 1e5))
  double min_bound = 0.0;
  double max_bound = 0.0;

  void validate() const;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> grad;  ///< d loss / d theta, ParamLayout order
};

/// Linear-combination forward model over a fixed basis and axis:
///
///   X(f) = exp(i (phi0 + f phi1)) sum_m a_m S_m(f) + B(f)
///   S_m(f) = DFT{ s_m(t) exp(-(gamma + sigma_g^2 t + i epsilon) t) }
///   B(f) = sum_k (b_k + i b_{K+1+k}) u(f)^k,  u = crop window mapped to [-1, 1]
///
/// evaluated on the crop window, f in Hz relative to the carrier. The baseline
/// sits outside the phase factor. With the DFT sign convention used here a
/// positive epsilon moves lines by -epsilon / (2 pi) Hz.
///
/// Immutable after construction; all methods are safe to call concurrently.
class SignalModel {
 public:
  SignalModel(BasisSet basis, std::size_t baseline_order = 2);

  const BasisSet& basis() const noexcept { return basis_; }
  const SpectralAxis& axis() const noexcept { return basis_.axis(); }
  const ParamLayout& layout() const noexcept { return layout_; }
  std::size_t crop_size() const noexcept { return axis().crop_size(); }

  /// Cropped model spectrum. Throws ValidationError on dimension mismatch or negative broadening.
  CVec forward(const ModelParams& theta) const;
  CVec forward(std::span<const double> theta) const;

  /// Phased, broadened metabolite sum without baseline; the MM entry is skipped when
  /// `include_mm` is false (the SNR definition).
  CVec metabolite_signal(const ModelParams& theta, bool include_mm) const;

  /// Phased, broadened contribution of basis entry m at unit amplitude.
  CVec component(const ModelParams& theta, std::size_t m) const;

  /// Baseline term B(f) alone.
  CVec baseline(std::span<const double> coefficients) const;

  /// loss = sum_f |y(f) - x(f|theta)|^2 over the crop window and its exact gradient.
  /// Throws NumericError (with the offending index) on non-finite intermediates.
  LossAndGradient residual_gradient(std::span<const double> theta, std::span<const cplx> y) const;
  double residual(std::span<const double> theta, std::span<const cplx> y) const;

 private:
  struct Work;
  void check_theta(std::span<const double> theta) const;
  /// Fills w.damp, w.combined (time domain) and w.spectrum (raw DFT bins).
  void synthesize(std::span<const double> theta, Work& w, bool include_mm = true) const;

  BasisSet basis_;
  ParamLayout layout_;
  std::vector<std::vector<double>> basis_interleaved_;  // (re, im) per sample
  std::vector<std::size_t> crop_bins_;
  std::vector<double> crop_hz_;
  std::vector<std::vector<double>> unit_powers_;        // u^k, k = 0..K
};

/// Y = X + N with independent N(0, sigma^2) draws on the real and imaginary parts of every point.
CVec add_noise(std::span<const cplx> clean, const NoiseSpec& noise, Rng& rng);

/// Bounded, smoothed complex random walk R(f) added to the spectrum. Real and imaginary
/// parts are independent cumulative sums of N(0, step^2) increments, clamped to the bounds
/// after every step, then smoothed with a centered moving average.
CVec apply_random_walk(std::span<const cplx> spectrum, const RandomWalkSpec& spec, Rng& rng);

/// 10 log10(mean |x|^2 / (2 sigma^2)); -infinity for an all-zero signal.
double compute_snr(std::span<const cplx> metabolite_only, double noise_sigma);

}  // namespace mrsq
