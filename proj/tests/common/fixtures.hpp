#pragma once

// Shared builders for unit and acceptance tests.

#include <cmath>
#include <random>
#include <vector>

#include "mrsq/harness/experiment.hpp"

namespace mrsq::testing {

/// Toy basis, default axis and Table 1 priors, built once.
inline const harness::Workbench& toy() {
  static const harness::Workbench wb =
      harness::Workbench::from_config(harness::ExperimentConfig::defaults(harness::Preset::desk));
  return wb;
}

/// Three singlets far apart inside the crop window, no macromolecule.
inline BasisDescription three_peak_description() {
  BasisDescription d;
  d.metabolites = {
      {"P1", false, {{1.3, 1.0, 0.0}}},
      {"P2", false, {{2.2, 1.0, 0.0}}},
      {"P3", false, {{3.4, 1.0, 0.0}}},
  };
  return d;
}

inline SignalModel three_peak_model() {
  const auto d = three_peak_description();
  const auto axis = SpectralAxis::build(d.axis_params());
  return SignalModel(synthesize_basis(d, axis), 2);
}

/// Priors for the three-peak model with Table 1 style shape rows.
inline PriorTable three_peak_priors() {
  PriorTable p;
  p.layout = ParamLayout{3, 2};
  p.names = {"P1", "P2", "P3", "gamma", "sigma_g", "epsilon", "phi0", "phi1", "b1", "b2", "b3", "b4", "b5", "b6"};
  p.theta = {{1, 10},       {1, 10},   {1, 10},        {0, 20},        {0, 20},        {-10, 10},      {-0.5, 0.5},
             {-1e-5, 1e-5}, {-1, 1},   {-1, 1},        {-1, 1},        {-1, 1},        {-1, 1},        {-1, 1}};
  return p;
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline CVec random_spectrum(std::size_t n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  CVec y(n);
  for (auto& v : y) v = {g(rng), g(rng)};
  return y;
}

/// Theta drawn uniformly from `priors` (full ranges).
inline std::vector<double> random_theta(const PriorTable& priors, Rng& rng) {
  std::vector<double> th(priors.theta.size());
  for (std::size_t i = 0; i < th.size(); ++i) th[i] = uniform(rng, priors.theta[i].lo, priors.theta[i].hi);
  return th;
}

inline double l2(std::span<const cplx> a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return std::sqrt(s);
}

inline double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace mrsq::testing
