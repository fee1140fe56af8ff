#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mrsq {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

struct PpmInterval {
  double lo = 0.5;
  double hi = 4.0;
};

struct AxisParams {
  std::size_t n_points = 1024;
  double bandwidth_hz = 3000.0;
  double field_mhz = 298.03;
  double center_ppm = 4.65;
  /// nullopt keeps the full ppm range.
  std::optional<PpmInterval> crop = PpmInterval{};
};

/// Sampling geometry and the ppm grid of a spectrum.
///
/// Frequencies run from -bandwidth/2 to +bandwidth/2 in n_points equal steps
/// (grid ends included), ppm = center_ppm + f_hz / field_mhz, increasing with the
/// array index. The crop window is the half-open index range
/// [nearest(lo), nearest(hi)) on that grid, which gives 355 points for the
/// 1024-point, 3000 Hz, 298.03 MHz acquisition and 0.5-4.0 ppm.
class SpectralAxis {
 public:
  /// Throws ConfigError on degenerate geometry or a crop window outside the grid.
  static SpectralAxis build(const AxisParams& params);
  static SpectralAxis build(std::size_t n_points, double bandwidth_hz, double field_mhz,
                            double center_ppm, std::optional<PpmInterval> crop);

  const AxisParams& params() const noexcept { return params_; }
  std::size_t n_points() const noexcept { return params_.n_points; }
  double bandwidth_hz() const noexcept { return params_.bandwidth_hz; }
  double field_mhz() const noexcept { return params_.field_mhz; }
  double center_ppm() const noexcept { return params_.center_ppm; }
  double dwell_s() const noexcept { return 1.0 / params_.bandwidth_hz; }
  double hz_step() const noexcept;
  double ppm_step() const noexcept { return hz_step() / params_.field_mhz; }

  /// Full grids in display order (increasing ppm).
  std::span<const double> hz() const noexcept { return hz_; }
  std::span<const double> ppm() const noexcept { return ppm_; }

  std::size_t crop_begin() const noexcept { return crop_begin_; }
  std::size_t crop_end() const noexcept { return crop_end_; }
  std::size_t crop_size() const noexcept { return crop_end_ - crop_begin_; }
  std::span<const double> crop_hz() const noexcept {
    return std::span<const double>(hz_).subspan(crop_begin_, crop_size());
  }
  std::span<const double> crop_ppm() const noexcept {
    return std::span<const double>(ppm_).subspan(crop_begin_, crop_size());
  }
  /// Crop window mapped affinely onto [-1, 1] (the baseline polynomial argument).
  std::span<const double> crop_unit() const noexcept { return unit_; }

  /// Raw DFT bin holding display index j (fftshift order).
  std::size_t dft_bin(std::size_t display_index) const noexcept {
    const std::size_t n = params_.n_points;
    return (display_index + n - n / 2) % n;
  }

  /// Sample times k * dwell, k = 0..n-1.
  std::span<const double> time_s() const noexcept { return time_; }

  /// Stable hash of the geometry, used to pair datasets with the axis they came from.
  std::uint64_t fingerprint() const noexcept;

  bool operator==(const SpectralAxis& other) const noexcept;

 private:
  SpectralAxis() = default;

  AxisParams params_;
  std::vector<double> hz_;
  std::vector<double> ppm_;
  std::vector<double> time_;
  std::vector<double> unit_;
  std::size_t crop_begin_ = 0;
  std::size_t crop_end_ = 0;
};

struct TimeSignal {
  CVec samples;
  double dwell_s = 0.0;
};

struct ComplexSpectrum {
  CVec values;
  bool cropped = true;
};

/// DFT with bins reordered to increasing ppm; restricted to the crop window when `crop`.
/// Throws ValidationError if the signal length does not match the axis.
ComplexSpectrum to_frequency_domain(const TimeSignal& sig, const SpectralAxis& axis, bool crop);

/// Restrict a full-length spectrum to the crop window. Cropped input is returned unchanged.
ComplexSpectrum crop_spectrum(const ComplexSpectrum& spec, const SpectralAxis& axis);

}  // namespace mrsq
