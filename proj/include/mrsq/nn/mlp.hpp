#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mrsq/model/params.hpp"
#include "mrsq/spectral/axis.hpp"

namespace mrsq::nn {

/// Maps raw network outputs onto constrained signal-model parameters:
/// softplus for amplitudes, softplus + 1 for both broadenings, scaled tanh for the
/// first-order phase, identity for the shift, zeroth-order phase and baseline.
struct OutputHead {
  ParamLayout layout;
  double phi1_scale = 1e-4;

  std::size_t size() const noexcept { return layout.size(); }
  void apply(std::span<const double> raw, std::span<double> theta) const;
  std::vector<double> apply(std::span<const double> raw) const;
  /// d loss / d raw from d loss / d theta.
  void backward(std::span<const double> raw, std::span<const double> d_theta,
                std::span<double> d_raw) const;
  /// Raw values that reproduce theta exactly. Throws ValidationError when theta is not
  /// reachable (amplitude <= 0, broadening <= 1, |phi1| >= scale).
  std::vector<double> inverse(std::span<const double> theta) const;

  bool operator==(const OutputHead&) const = default;
};

double softplus(double x) noexcept;
double softplus_inverse(double y);

struct MlpSpec {
  std::size_t input_bins = 355;
  /// Layer widths including input (2 * input_bins) and output (theta size).
  std::vector<std::size_t> widths{710, 512, 256, 128, 32};
  OutputHead head;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  static MlpSpec for_layout(std::size_t input_bins, const ParamLayout& layout,
                            std::vector<std::size_t> hidden = {512, 256, 128});
  /// Throws ValidationError when the widths disagree with input_bins or the head.
  void validate() const;
  bool operator==(const MlpSpec&) const = default;
};

enum class Mode { train, eval };

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// Offsets of each parameter block inside the flat parameter vector.
struct ParamBlocks {
  std::size_t bn_gamma = 0;
  std::size_t bn_beta = 0;
  std::vector<std::size_t> weight;  // per dense layer, row-major [out][in]
  std::vector<std::size_t> bias;
  std::size_t total = 0;
};

/// Per-bin batch norm over the interleaved (re, im) input, then dense layers with ELU on
/// all hidden layers and a linear output layer followed by the head.
///
/// The model is mutated by training and must be externally synchronized; eval-mode
/// forward on a const model is safe to run concurrently.
class MlpModel {
 public:
  MlpModel() = default;
  MlpModel(MlpSpec spec, std::uint64_t seed);

  const MlpSpec& spec() const noexcept { return spec_; }
  const ParamBlocks& blocks() const noexcept { return blocks_; }
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> params() noexcept { return params_; }
  std::size_t param_count() const noexcept { return params_.size(); }

  std::span<const double> running_mean() const noexcept { return running_mean_; }
  std::span<const double> running_var() const noexcept { return running_var_; }
  std::span<double> running_mean() noexcept { return running_mean_; }
  std::span<double> running_var() noexcept { return running_var_; }

  AdamState& adam() noexcept { return adam_; }
  const AdamState& adam() const noexcept { return adam_; }

  /// Bumped whenever parameters or statistics change; forward caches record it.
  std::uint64_t version() const noexcept { return version_; }
  void touch() noexcept { ++version_; }

  /// Free-form training-stream position saved with checkpoints.
  std::string& rng_state() noexcept { return rng_state_; }
  const std::string& rng_state() const noexcept { return rng_state_; }

  bool same_state(const MlpModel& other) const;

 private:
  friend MlpModel load_checkpoint(std::istream&);
  MlpSpec spec_;
  ParamBlocks blocks_;
  std::vector<double> params_;
  std::vector<double> running_mean_;
  std::vector<double> running_var_;
  AdamState adam_;
  std::uint64_t version_ = 0;
  std::string rng_state_;
};

/// Activations kept for the backward pass.
struct ForwardCache {
  std::uint64_t model_version = 0;
  std::size_t batch = 0;
  Mode mode = Mode::eval;
  std::vector<double> normalized;            // batch x 2L, x_hat (before the affine)
  std::vector<std::vector<double>> inputs;   // input to each dense layer, batch x in
  std::vector<std::vector<double>> pre;      // pre-activation of each dense layer, batch x out
  std::vector<double> raw;                   // batch x P
  bool valid = false;
};

struct ForwardResult {
  std::vector<double> theta;  ///< batch x P, constrained (normalized intensity units)
  ForwardCache cache;
};

/// Inputs are cropped, unit-norm spectra of input_bins points (tolerance 1e-6).
/// Train mode uses batch statistics (pooled over the batch and both channels of a bin) and
/// updates the running estimates; it needs batch >= 2. Eval mode uses running statistics.
ForwardResult mlp_forward(MlpModel& model, std::span<const CVec> batch, Mode mode);
/// Eval-mode forward without touching model state.
std::vector<double> mlp_predict(const MlpModel& model, std::span<const CVec> batch);

/// Gradient of a scalar loss over all parameters, given d loss / d theta for each row
/// (batch x P). Throws ContractError if the cache is stale or was produced by another model state.
std::vector<double> mlp_backward(const MlpModel& model, const ForwardCache& cache,
                                 std::span<const double> d_theta);

/// One Adam update with bias correction. Throws NumericError on non-finite gradients.
void adam_step(MlpModel& model, std::span<const double> grads);
/// Generic Adam on an arbitrary parameter vector (used by the model-based fit).
void adam_update(AdamState& state, std::span<double> params, std::span<const double> grads);

/// Versioned binary checkpoint: spec echo, parameters, batch-norm statistics, Adam state,
/// training-stream state. Loading rejects a spec that differs from `expected`.
void save_checkpoint(const MlpModel& model, std::ostream& out);
MlpModel load_checkpoint(std::istream& in);
void save_checkpoint(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_checkpoint(const std::filesystem::path& path, const MlpSpec& expected);

}  // namespace mrsq::nn
