#include "mrsq/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mrsq/error.hpp"
#include "mrsq/hash.hpp"
#include "mrsq/parallel.hpp"

namespace mrsq {
namespace {

// Amplitude priors in mM for the shipped basis order.
struct NamedRange {
  const char* name;
  double lo, hi;
};
constexpr NamedRange kAmplitudePriors[] = {
    {"Ala", 0.0, 1.6},   {"Asc", 0.0, 4.9},    {"Asp", 0.0, 4.8},   {"Cr", 3.9, 12.3},
    {"GABA", 0.0, 4.0},  {"Gln", 0.0, 6.8},    {"Glu", 6.0, 17.9},  {"Gly", 0.0, 1.0},
    {"GPC", 0.0, 3.6},   {"GSH", 0.0, 3.6},    {"mIns", 4.0, 12.1}, {"Lac", 0.0, 3.1},
    {"NAAG", 0.0, 2.5},  {"NAA", 7.5, 16.3},   {"PCh", 0.0, 2.4},   {"PCr", 0.0, 5.5},
    {"PE", 0.0, 5.2},    {"Scyllo", 0.0, 0.6}, {"Ser", 0.0, 7.3},   {"Tau", 1.2, 6.0},
    {"MM", 0.0, 400.0},
};

constexpr Interval kBaselinePriors[] = {{-600, 200},  {-800, 300},  {-1000, 600},
                                        {-600, 1000}, {-1600, 200}, {-400, 1000}};

double uniform(Rng& rng, Interval r) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  return r.lo + (r.hi - r.lo) * u01(rng);
}

}  // namespace

Interval central_range(Interval b) {
  const double q = 0.25 * (b.hi - b.lo);
  return {b.lo + q, b.hi - q};
}

PriorTable PriorTable::defaults(const std::vector<std::string>& metabolite_names) {
  PriorTable t;
  t.layout = ParamLayout{metabolite_names.size(), 2};
  for (const auto& name : metabolite_names) {
    const auto* it = std::find_if(std::begin(kAmplitudePriors), std::end(kAmplitudePriors),
                                  [&](const NamedRange& r) { return name == r.name; });
    if (it == std::end(kAmplitudePriors))
      throw ConfigError("no default prior for metabolite '" + name + "'");
    t.theta.push_back({it->lo, it->hi});
  }
  t.theta.push_back({2.0, 25.0});    // gamma
  t.theta.push_back({2.0, 25.0});    // sigma_g
  t.theta.push_back({-10.0, 10.0});  // epsilon
  t.theta.push_back({-0.5, 0.5});    // phi0
  t.theta.push_back({-1e-5, 1e-5});  // phi1
  for (const auto& b : kBaselinePriors) t.theta.push_back(b);
  t.names = t.layout.component_names(metabolite_names);
  return t;
}

std::optional<std::size_t> PriorTable::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

Interval PriorTable::noise_sigma() const {
  return {std::sqrt(noise_variance.lo), std::sqrt(noise_variance.hi)};
}

void PriorTable::validate() const {
  if (names.size() != theta.size() || theta.size() != layout.size())
    throw ValidationError("prior table does not match the parameter layout");
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!(theta[i].lo <= theta[i].hi)) throw ValidationError("prior '" + names[i] + "' has lo > hi");
    if (layout.is_amplitude(i) && theta[i].lo < 0.0)
      throw ValidationError("amplitude prior '" + names[i] + "' is negative");
  }
  for (const auto& r : {noise_variance, rw_step, rw_smoothing, rw_min, rw_max})
    if (!(r.lo <= r.hi)) throw ValidationError("prior row has lo > hi");
  if (noise_variance.lo < 0.0) throw ValidationError("noise variance prior is negative");
}

Scenario Scenario::mid_range(std::string name) {
  return Scenario{std::move(name), AmplitudeRange::mid_range, {}, false};
}

Scenario Scenario::full_range(std::string name) {
  return Scenario{std::move(name), AmplitudeRange::full_range, {}, false};
}

ResolvedPriors resolve(const PriorTable& priors, const Scenario& scenario) {
  ResolvedPriors r;
  r.theta = priors.theta;
  if (scenario.amplitudes == AmplitudeRange::mid_range)
    for (std::size_t m = 0; m < priors.layout.n_metabolites; ++m) r.theta[m] = central_range(r.theta[m]);
  r.noise_sigma = priors.noise_sigma();
  r.random_walk = scenario.random_walk;
  for (const auto& [name, range] : scenario.overrides) {
    if (!(range.lo <= range.hi)) throw ValidationError("override '" + name + "' has lo > hi");
    if (name == "noise_sigma" || name.rfind("rw_", 0) == 0) continue;
    const auto idx = priors.index_of(name);
    if (!idx) throw ValidationError("unknown parameter '" + name + "'");
    r.theta[*idx] = range;
  }
  return r;
}

SampleDraw sample_params(const PriorTable& priors, const Scenario& scenario, Rng& rng) {
  const ResolvedPriors r = resolve(priors, scenario);
  std::vector<double> v(r.theta.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = uniform(rng, r.theta[i]);

  SampleDraw d;
  d.theta = ModelParams::from_vector(v, priors.layout);
  if (const auto it = scenario.overrides.find("noise_sigma"); it != scenario.overrides.end())
    d.noise.sigma = uniform(rng, it->second);
  else
    d.noise.sigma = std::sqrt(uniform(rng, priors.noise_variance));

  if (r.random_walk) {
    auto pick = [&](const char* key, Interval def) {
      const auto it = scenario.overrides.find(key);
      return uniform(rng, it != scenario.overrides.end() ? it->second : def);
    };
    RandomWalkSpec rw;
    rw.step_size = pick("rw_step", priors.rw_step);
    rw.smoothing = pick("rw_smoothing", priors.rw_smoothing);
    rw.min_bound = pick("rw_min", priors.rw_min);
    rw.max_bound = pick("rw_max", priors.rw_max);
    d.random_walk = rw;
  }
  return d;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return mix64(mix64(master ^ mix64(stream)) + index);
}

std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index) {
  return derive_seed(master, static_cast<std::uint64_t>(stream), index);
}

SampleRecord simulate_record(const SignalModel& model, const PriorTable& priors,
                             const Scenario& scenario, std::uint64_t seed) {
  Rng rng(seed);
  SampleDraw d = sample_params(priors, scenario, rng);
  SampleRecord rec;
  rec.seed = seed;
  rec.scenario = scenario.name;
  rec.theta = d.theta.to_vector();
  rec.clean = model.forward(rec.theta);
  rec.observed = add_noise(rec.clean, d.noise, rng);
  if (d.random_walk) {
    rec.observed = apply_random_walk(rec.observed, *d.random_walk, rng);
    rec.corrupted = true;
  }
  rec.noise_sigma = d.noise.sigma;
  rec.snr_db = d.noise.sigma > 0.0 ? compute_snr(model.metabolite_signal(d.theta, false), d.noise.sigma)
                                   : std::numeric_limits<double>::infinity();
  return rec;
}

std::vector<SampleRecord> generate_dataset(std::size_t n, const PriorTable& priors,
                                           const Scenario& scenario, const SignalModel& model,
                                           std::uint64_t master_seed, SeedStream stream,
                                           std::uint64_t offset, unsigned threads) {
  if (n < 1) throw ValidationError("dataset size must be >= 1");
  priors.validate();
  (void)resolve(priors, scenario);
  std::vector<SampleRecord> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    out[i] = simulate_record(model, priors, scenario, derive_seed(master_seed, stream, offset + i));
  });
  return out;
}

std::vector<SampleRecord> make_sweep(const SweepSpec& sweep, const PriorTable& priors,
                                     const Scenario& base, const SignalModel& model,
                                     std::uint64_t master_seed, unsigned threads) {
  const bool is_noise = sweep.parameter == "noise_sigma";
  const bool is_walk = sweep.parameter == "random_walk";
  const auto idx = priors.index_of(sweep.parameter);
  if (!is_noise && !is_walk && !idx)
    throw ValidationError("unknown sweep parameter '" + sweep.parameter + "'");
  if (sweep.grid.empty() || sweep.n_per_value == 0) throw ValidationError("empty sweep");

  const ResolvedPriors train_ranges = resolve(priors, base);
  const std::size_t total = sweep.grid.size() * sweep.n_per_value;
  std::vector<SampleRecord> out(total);
  // Stream id folds in the parameter name so different sweeps never share seeds.
  Fnv1a h;
  h.str(sweep.parameter);
  const std::uint64_t stream = static_cast<std::uint64_t>(SeedStream::sweep) ^ (h.value() << 8);

  parallel_for(total, threads, [&](std::size_t i) {
    const double value = sweep.grid[i / sweep.n_per_value];
    Scenario s = base;
    s.name = base.name + ":" + sweep.parameter;
    bool ood = false;
    if (is_noise) {
      s.overrides["noise_sigma"] = {value, value};
      ood = !train_ranges.noise_sigma.contains(value);
    } else if (is_walk) {
      s.random_walk = true;
      s.overrides["rw_step"] = {value, value};
      ood = value > 0.0;
    } else {
      s.overrides[sweep.parameter] = {value, value};
      ood = !train_ranges.theta[*idx].contains(value);
    }
    SampleRecord rec = simulate_record(model, priors, s, derive_seed(master_seed, stream, i));
    rec.ood = ood;
    rec.sweep_parameter = sweep.parameter;
    rec.sweep_value = value;
    out[i] = std::move(rec);
  });
  return out;
}

std::vector<SweepSpec> default_sweeps(const PriorTable& priors, std::size_t n_per_value,
                                      std::size_t grid_points) {
  grid_points = std::max<std::size_t>(grid_points, 2);
  auto linspace = [&](double lo, double hi) {
    std::vector<double> g(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i)
      g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    return g;
  };
  const double pi = std::numbers::pi;
  const Interval noise = priors.noise_sigma();
  return {
      {"phi0", linspace(-pi, pi), n_per_value},
      {"epsilon", linspace(-40.0, 40.0), n_per_value},
      {"gamma", linspace(0.0, 50.0), n_per_value},
      {"sigma_g", linspace(0.0, 50.0), n_per_value},
      {"noise_sigma", linspace(noise.lo, 2.0 * noise.hi), n_per_value},
      {"b1", linspace(-1200.0, 600.0), n_per_value},
      {"random_walk", {0.0, 1e3, 1e5}, n_per_value},
  };
}

}  // namespace mrsq
