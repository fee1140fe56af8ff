#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrsq/model/signal_model.hpp"

namespace mrsq {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  double mid() const noexcept { return 0.5 * (lo + hi); }
  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

/// Middle half of an interval: [lo + w/4, hi - w/4].
Interval central_range(Interval bounds);

/// Uniform prior ranges for every theta component, the noise level and the
/// random-walk corruption. Noise enters as a variance range; the per-part standard
/// deviation of a draw is its square root.
struct PriorTable {
  std::vector<std::string> names;  ///< theta component names, ParamLayout order
  std::vector<Interval> theta;     ///< same order as names
  Interval noise_variance{10.0, 7071.067811865475};
  Interval rw_step{0.0, 1e5};
  Interval rw_smoothing{1.0, 1e5};
  Interval rw_min{-1e6, 0.0};
  Interval rw_max{0.0, 1e6};
  ParamLayout layout;

  /// Table defaults for the shipped 21-entry basis (20 metabolites + MM, K = 2).
  static PriorTable defaults(const std::vector<std::string>& metabolite_names);

  std::optional<std::size_t> index_of(const std::string& name) const;
  Interval noise_sigma() const;
  /// Throws ValidationError if any row has lo > hi or an amplitude row goes negative.
  void validate() const;
};

enum class AmplitudeRange { mid_range, full_range };

struct Scenario {
  std::string name = "full_range";
  AmplitudeRange amplitudes = AmplitudeRange::full_range;
  /// Replaces the prior of a theta component (or "noise_sigma") by name.
  std::map<std::string, Interval> overrides;
  /// Apply random-walk corruption drawn from the prior table. Never allowed for training.
  bool random_walk = false;

  static Scenario mid_range(std::string name = "mid_range");
  static Scenario full_range(std::string name = "full_range");
};

/// Effective per-component ranges once the scenario is applied.
struct ResolvedPriors {
  std::vector<Interval> theta;
  Interval noise_sigma;
  bool random_walk = false;
};

ResolvedPriors resolve(const PriorTable& priors, const Scenario& scenario);

struct SampleDraw {
  ModelParams theta;
  NoiseSpec noise;
  std::optional<RandomWalkSpec> random_walk;
};

/// Every component i.i.d. uniform over its resolved range, drawn in layout order, then
/// noise, then (if enabled) random-walk parameters.
SampleDraw sample_params(const PriorTable& priors, const Scenario& scenario, Rng& rng);

struct SampleRecord {
  std::uint64_t seed = 0;
  std::string scenario;
  std::vector<double> theta;  ///< ground truth, ParamLayout order
  CVec clean;                 ///< X(f | theta) on the crop window
  CVec observed;              ///< clean + noise (+ random walk when corrupted)
  double snr_db = 0.0;
  double noise_sigma = 0.0;
  bool corrupted = false;
  bool ood = false;
  std::string sweep_parameter;
  double sweep_value = 0.0;

  bool operator==(const SampleRecord&) const = default;
};

/// Seed namespaces keep training streams, validation sets and test sets disjoint.
enum class SeedStream : std::uint64_t {
  train = 1,
  validation = 2,
  test = 3,
  sweep = 4,
  adaptation = 5,
  init = 6,
};

/// seed = mix64(mix64(master ^ mix64(stream)) + index). Any record can be regenerated
/// from (master, stream, index) alone.
std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// One record from its own seed: sample_params -> forward -> add_noise (-> random walk).
SampleRecord simulate_record(const SignalModel& model, const PriorTable& priors,
                             const Scenario& scenario, std::uint64_t seed);

/// n records with seeds derive_seed(master, stream, offset + i). Results do not depend on
/// `threads`.
std::vector<SampleRecord> generate_dataset(std::size_t n, const PriorTable& priors,
                                           const Scenario& scenario, const SignalModel& model,
                                           std::uint64_t master_seed,
                                           SeedStream stream = SeedStream::test,
                                           std::uint64_t offset = 0, unsigned threads = 1);

struct SweepSpec {
  /// theta component name, "noise_sigma", or "random_walk" (pins the walk step size).
  std::string parameter;
  std::vector<double> grid;
  std::size_t n_per_value = 1;
};

/// For each grid value, n_per_value records with that parameter pinned and everything else
/// drawn from `base`. Records outside the prior table range are flagged ood.
/// Throws ValidationError for an unknown parameter name.
std::vector<SampleRecord> make_sweep(const SweepSpec& sweep, const PriorTable& priors,
                                     const Scenario& base, const SignalModel& model,
                                     std::uint64_t master_seed, unsigned threads = 1);

/// Default sweep grids for the OoD perturbation suite.
std::vector<SweepSpec> default_sweeps(const PriorTable& priors, std::size_t n_per_value,
                                      std::size_t grid_points);

}  // namespace mrsq
