#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrsq/spectral/axis.hpp"

namespace mrsq {

struct BasisPeak {
  double ppm = 0.0;
  double amplitude = 1.0;
  /// g in exp(-(g t)^2); zero for sharp metabolite lines.
  double intrinsic_gauss_per_s = 0.0;
};

struct MetaboliteSpec {
  std::string name;
  bool is_mm = false;
  std::vector<BasisPeak> peaks;
};

/// Peak-table description of a basis set plus the acquisition it was made for.
/// The crop window is not part of a basis; it comes from the experiment config.
struct BasisDescription {
  std::size_t n_points = 1024;
  double bandwidth_hz = 3000.0;
  double field_mhz = 298.03;
  double center_ppm = 4.65;
  std::vector<MetaboliteSpec> metabolites;

  /// Axis for this acquisition with the given crop window.
  AxisParams axis_params(std::optional<PpmInterval> crop = PpmInterval{}) const;
};

struct BasisEntry {
  std::string name;
  bool is_mm = false;
  CVec time;  ///< s_m(t), length n_points
};

class BasisSet {
 public:
  BasisSet(std::vector<BasisEntry> entries, const SpectralAxis& axis);

  std::size_t size() const noexcept { return entries_.size(); }
  const BasisEntry& operator[](std::size_t m) const { return entries_.at(m); }
  const std::vector<BasisEntry>& entries() const noexcept { return entries_; }
  const SpectralAxis& axis() const noexcept { return axis_; }

  /// Index of the macromolecule entry, if any.
  std::optional<std::size_t> mm_index() const noexcept { return mm_index_; }
  std::vector<std::string> names() const;

  std::uint64_t fingerprint() const noexcept;

 private:
  std::vector<BasisEntry> entries_;
  SpectralAxis axis_;
  std::optional<std::size_t> mm_index_;
};

/// s_m(t) = sum_p A_p exp(i 2 pi delta_p t) exp(-(g_p t)^2), delta_p = (ppm_p - center) * field.
/// Throws ValidationError for empty/duplicate names, peakless metabolites, peaks outside the
/// representable range, or an axis that does not match the description's acquisition.
BasisSet synthesize_basis(const BasisDescription& desc, const SpectralAxis& axis);

/// JSON interchange: {axis: {...}, metabolites: [{name, is_mm, peaks: [...]}]}.
BasisDescription load_basis_description(const std::filesystem::path& path);
void save_basis_description(const BasisDescription& desc, const std::filesystem::path& path);
BasisDescription parse_basis_description(const std::string& json_text);
std::string dump_basis_description(const BasisDescription& desc);

/// JSON text of the shipped toy basis (data/toy_basis_v1.json, compiled in).
std::string_view default_basis_json() noexcept;

}  // namespace mrsq
