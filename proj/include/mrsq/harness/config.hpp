#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mrsq/metrics/metrics.hpp"
#include "mrsq/strategies/strategies.hpp"

namespace mrsq::harness {

enum class Preset { desk, paper };

Preset parse_preset(const std::string& name);
std::string preset_name(Preset p);

/// Which network an adaptation strategy starts from.
enum class AdaptInit { supervised, self_supervised, scratch };

struct SweepConfig {
  std::vector<std::string> parameters{"phi0", "epsilon", "gamma", "sigma_g", "noise_sigma", "b1", "random_walk"};
  std::vector<std::string> strategies{"model_based", "supervised", "tta_instance"};
  std::size_t grid_points = 9;
  std::size_t n_per_value = 20;
};

struct ExperimentConfig {
  Preset preset = Preset::desk;
  std::uint64_t seed = 20240917;
  std::filesystem::path out = "runs/desk";
  /// Basis description file; empty means the compiled-in toy basis.
  std::filesystem::path basis;
  PpmInterval crop;
  std::size_t baseline_order = 2;
  Interval noise_variance{10.0, 7071.067811865475};
  std::size_t test_size = 1000;
  std::size_t train_samples = 50000;
  /// Passes over the train_samples pool.
  std::size_t train_epochs = 10;
  unsigned threads = 1;
  bool reuse_checkpoints = true;

  strategies::TrainConfig train;
  strategies::FitOptions fit;
  strategies::AdaptConfig adapt;
  AdaptInit adapt_init = AdaptInit::supervised;

  std::vector<std::string> scenarios{"id_mid_range", "ood_full_range", "id_full_trained"};
  std::vector<std::string> strategies{"model_based",  "supervised", "self_supervised",
                                      "tta_instance", "tta_online", "tta_domain"};
  SweepConfig sweep;
  std::size_t timing_repeats = 3;
  std::size_t timing_samples = 16;
  metrics::MosaeNorm mosae_norm = metrics::MosaeNorm::all_entries;

  static ExperimentConfig defaults(Preset preset);
  /// Propagates seed, threads, phi1 scale and the step budget into the strategy configs.
  /// Call after changing any top-level field.
  void sync_derived();
  /// Throws ConfigError describing the first invalid field.
  void validate() const;
  std::string to_json() const;
};

/// Preset defaults, then the keys of `json_text` on top. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text, std::optional<Preset> preset_override);
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<Preset> preset_override);

extern const char* const kVersion;

}  // namespace mrsq::harness
