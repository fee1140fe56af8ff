#include "mrsq/spectral/axis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mrsq/error.hpp"
#include "mrsq/hash.hpp"
#include "mrsq/spectral/fft.hpp"

namespace mrsq {
namespace {

std::size_t nearest_index(std::span<const double> grid, double value) {
  std::size_t best = 0;
  double best_dist = std::abs(grid[0] - value);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double d = std::abs(grid[i] - value);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

}  // namespace

double SpectralAxis::hz_step() const noexcept {
  return params_.bandwidth_hz / static_cast<double>(params_.n_points - 1);
}

SpectralAxis SpectralAxis::build(std::size_t n_points, double bandwidth_hz, double field_mhz,
                                 double center_ppm, std::optional<PpmInterval> crop) {
  return build(AxisParams{n_points, bandwidth_hz, field_mhz, center_ppm, crop});
}

SpectralAxis SpectralAxis::build(const AxisParams& params) {
  if (params.n_points < 2) throw ConfigError("axis needs at least 2 points");
  if (!(params.bandwidth_hz > 0.0) || !std::isfinite(params.bandwidth_hz))
    throw ConfigError("bandwidth must be positive");
  if (!(params.field_mhz > 0.0) || !std::isfinite(params.field_mhz))
    throw ConfigError("field strength must be positive");
  if (!std::isfinite(params.center_ppm)) throw ConfigError("center ppm must be finite");

  SpectralAxis axis;
  axis.params_ = params;
  const std::size_t n = params.n_points;
  const double step = axis.hz_step();
  axis.hz_.resize(n);
  axis.ppm_.resize(n);
  axis.time_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    axis.hz_[j] = -0.5 * params.bandwidth_hz + static_cast<double>(j) * step;
    axis.ppm_[j] = params.center_ppm + axis.hz_[j] / params.field_mhz;
    axis.time_[j] = static_cast<double>(j) / params.bandwidth_hz;
  }

  if (params.crop) {
    const auto [lo, hi] = *params.crop;
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
      throw ConfigError("crop window must satisfy lo < hi");
    if (lo < axis.ppm_.front() || hi > axis.ppm_.back())
      throw ConfigError("crop window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                        "] ppm lies outside the representable range [" +
                        std::to_string(axis.ppm_.front()) + ", " +
                        std::to_string(axis.ppm_.back()) + "]");
    axis.crop_begin_ = nearest_index(axis.ppm_, lo);
    axis.crop_end_ = nearest_index(axis.ppm_, hi);
    if (axis.crop_end_ <= axis.crop_begin_)
      throw ConfigError("crop window contains no grid points");
  } else {
    axis.crop_begin_ = 0;
    axis.crop_end_ = n;
  }

  const std::size_t len = axis.crop_size();
  axis.unit_.resize(len);
  for (std::size_t j = 0; j < len; ++j)
    axis.unit_[j] = len == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(len - 1);
  return axis;
}

std::uint64_t SpectralAxis::fingerprint() const noexcept {
  Fnv1a h;
  h.str("mrsq-axis-v1");
  h.u64(params_.n_points);
  h.f64(params_.bandwidth_hz);
  h.f64(params_.field_mhz);
  h.f64(params_.center_ppm);
  h.u64(crop_begin_);
  h.u64(crop_end_);
  return h.value();
}

bool SpectralAxis::operator==(const SpectralAxis& other) const noexcept {
  return params_.n_points == other.params_.n_points &&
         params_.bandwidth_hz == other.params_.bandwidth_hz &&
         params_.field_mhz == other.params_.field_mhz &&
         params_.center_ppm == other.params_.center_ppm && crop_begin_ == other.crop_begin_ &&
         crop_end_ == other.crop_end_;
}

ComplexSpectrum to_frequency_domain(const TimeSignal& sig, const SpectralAxis& axis, bool crop) {
  const std::size_t n = axis.n_points();
  if (sig.samples.size() != n)
    throw ValidationError("time signal has " + std::to_string(sig.samples.size()) +
                          " samples, axis expects " + std::to_string(n));
  CVec raw(n);
  fft::forward(sig.samples.data(), raw.data(), n);
  const std::size_t begin = crop ? axis.crop_begin() : 0;
  const std::size_t end = crop ? axis.crop_end() : n;
  ComplexSpectrum out{CVec(end - begin), crop};
  for (std::size_t j = begin; j < end; ++j) out.values[j - begin] = raw[axis.dft_bin(j)];
  return out;
}

ComplexSpectrum crop_spectrum(const ComplexSpectrum& spec, const SpectralAxis& axis) {
  if (spec.cropped) {
    if (spec.values.size() != axis.crop_size())
      throw ValidationError("cropped spectrum length does not match the crop window");
    return spec;
  }
  if (spec.values.size() != axis.n_points())
    throw ValidationError("spectrum length does not match the axis");
  return ComplexSpectrum{CVec(spec.values.begin() + static_cast<std::ptrdiff_t>(axis.crop_begin()),
                              spec.values.begin() + static_cast<std::ptrdiff_t>(axis.crop_end())),
                         true};
}

}  // namespace mrsq
