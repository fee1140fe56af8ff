#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mrsq {

/// Component order of the flat parameter vector:
/// [a_1..a_M, gamma, sigma_g, epsilon, phi0, phi1, b_1..b_{2(K+1)}].
/// Baseline coefficients list the K+1 real parts first, then the K+1 imaginary
/// parts, each in ascending power.
struct ParamLayout {
  std::size_t n_metabolites = 21;
  std::size_t baseline_order = 2;

  std::size_t n_baseline() const noexcept { return 2 * (baseline_order + 1); }
  std::size_t size() const noexcept { return n_metabolites + 5 + n_baseline(); }
  std::size_t gamma() const noexcept { return n_metabolites; }
  std::size_t sigma_g() const noexcept { return n_metabolites + 1; }
  std::size_t epsilon() const noexcept { return n_metabolites + 2; }
  std::size_t phi0() const noexcept { return n_metabolites + 3; }
  std::size_t phi1() const noexcept { return n_metabolites + 4; }
  std::size_t baseline(std::size_t k) const noexcept { return n_metabolites + 5 + k; }
  bool is_amplitude(std::size_t i) const noexcept { return i < n_metabolites; }
  bool is_baseline(std::size_t i) const noexcept { return i >= n_metabolites + 5 && i < size(); }
  /// Components that carry the signal intensity (amplitudes and baseline).
  bool scales_with_intensity(std::size_t i) const noexcept { return is_amplitude(i) || is_baseline(i); }

  /// Names for the non-amplitude components: gamma, sigma_g, epsilon, phi0, phi1, b1..bN.
  std::vector<std::string> component_names(std::span<const std::string> metabolite_names) const;

  bool operator==(const ParamLayout&) const = default;
};

struct ModelParams {
  std::vector<double> amplitudes;  ///< mM; last entry is the macromolecule amplitude by convention
  double gamma = 0.0;              ///< Lorentzian broadening, 1/s
  double sigma_g = 0.0;            ///< Gaussian broadening, 1/s (enters as sigma_g^2 t^2)
  double epsilon = 0.0;            ///< frequency shift, rad/s
  double phi0 = 0.0;               ///< zeroth-order phase, rad
  double phi1 = 0.0;               ///< first-order phase, rad/Hz
  std::vector<double> baseline;    ///< 2(K+1) coefficients, see ParamLayout

  static ModelParams zeros(const ParamLayout& layout);
  static ModelParams from_vector(std::span<const double> v, const ParamLayout& layout);
  std::vector<double> to_vector() const;
  ParamLayout layout() const;

  /// Throws ValidationError on negative amplitudes/broadenings or non-finite values.
  void validate() const;
  bool operator==(const ModelParams&) const = default;
};

}  // namespace mrsq
