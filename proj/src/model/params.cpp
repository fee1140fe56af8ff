#include "mrsq/model/params.hpp"

#include <cmath>

#include "mrsq/error.hpp"

namespace mrsq {

std::vector<std::string> ParamLayout::component_names(
    std::span<const std::string> metabolite_names) const {
  std::vector<std::string> out;
  out.reserve(size());
  for (std::size_t m = 0; m < n_metabolites; ++m)
    out.push_back(m < metabolite_names.size() ? metabolite_names[m] : "a" + std::to_string(m + 1));
  for (const char* s : {"gamma", "sigma_g", "epsilon", "phi0", "phi1"}) out.emplace_back(s);
  for (std::size_t k = 0; k < n_baseline(); ++k) out.push_back("b" + std::to_string(k + 1));
  return out;
}

ModelParams ModelParams::zeros(const ParamLayout& layout) {
  ModelParams p;
  p.amplitudes.assign(layout.n_metabolites, 0.0);
  p.baseline.assign(layout.n_baseline(), 0.0);
  return p;
}

ModelParams ModelParams::from_vector(std::span<const double> v, const ParamLayout& layout) {
  if (v.size() != layout.size())
    throw ValidationError("parameter vector has " + std::to_string(v.size()) + " entries, expected " +
                          std::to_string(layout.size()));
  ModelParams p;
  p.amplitudes.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(layout.n_metabolites));
  p.gamma = v[layout.gamma()];
  p.sigma_g = v[layout.sigma_g()];
  p.epsilon = v[layout.epsilon()];
  p.phi0 = v[layout.phi0()];
  p.phi1 = v[layout.phi1()];
  p.baseline.assign(v.begin() + static_cast<std::ptrdiff_t>(layout.baseline(0)), v.end());
  return p;
}

std::vector<double> ModelParams::to_vector() const {
  std::vector<double> v(amplitudes);
  v.insert(v.end(), {gamma, sigma_g, epsilon, phi0, phi1});
  v.insert(v.end(), baseline.begin(), baseline.end());
  return v;
}

ParamLayout ModelParams::layout() const {
  if (baseline.size() < 2 || baseline.size() % 2 != 0)
    throw ValidationError("baseline must hold 2(K+1) coefficients");
  return ParamLayout{amplitudes.size(), baseline.size() / 2 - 1};
}

void ModelParams::validate() const {
  const auto v = to_vector();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) throw ValidationError("parameter " + std::to_string(i) + " is not finite");
  for (std::size_t m = 0; m < amplitudes.size(); ++m)
    if (amplitudes[m] < 0.0) throw ValidationError("amplitude " + std::to_string(m) + " is negative");
  if (gamma < 0.0) throw ValidationError("Lorentzian broadening is negative");
  if (sigma_g < 0.0) throw ValidationError("Gaussian broadening is negative");
  (void)layout();
}

}  // namespace mrsq
