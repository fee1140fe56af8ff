#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrsq/model/signal_model.hpp"
#include "mrsq/nn/mlp.hpp"
#include "mrsq/sim/simulator.hpp"

namespace mrsq::strategies {

// ---- normalization ---------------------------------------------------------

struct NormContext {
  double norm = 1.0;  ///< ||y||_2 over the crop window
};

struct Normalized {
  CVec y;
  NormContext ctx;
};

/// y / ||y||. Throws ValidationError for an all-zero (or non-finite) spectrum.
Normalized normalize(std::span<const cplx> y);
/// Amplitudes and baseline coefficients times the norm; shape parameters unchanged.
std::vector<double> denormalize(std::span<const double> theta, const NormContext& ctx,
                                const ParamLayout& layout);

// ---- model-based fitting ---------------------------------------------------

struct FitOptions {
  double lr = 0.1;
  std::size_t epochs = 1000;
  bool fit_baseline = true;  ///< false pins the baseline at zero
  double phi1_scale = 1e-4;
};

struct FitResult {
  std::vector<double> theta;  ///< best-so-far estimate, denormalized
  double loss = 0.0;          ///< residual of `theta` on the normalized spectrum
  std::size_t best_epoch = 0;
  std::vector<double> best_loss_trace;  ///< best-so-far loss after each epoch
};

/// Starting point of the fit: amplitudes at the centre of their prior, gamma = sigma_g = 10,
/// zero shift, phases and baseline (denormalized units).
std::vector<double> default_fit_init(const PriorTable& priors);

/// Adam on unconstrained pre-activations mapped through the network output head. The
/// spectrum is normalized internally; `init` is in denormalized units and must be reachable
/// by the head. Throws NumericError (with the recent loss trace) if the loss turns non-finite.
FitResult fit_model_based(const SignalModel& model, std::span<const cplx> y,
                          std::span<const double> init, const FitOptions& opts = {});

// ---- network training ------------------------------------------------------

enum class Objective { supervised, self_supervised };

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t validate_every = 256;  ///< batches
  std::size_t val_size = 1024;
  std::size_t max_steps = 3125;
  /// Number of distinct training samples; indices wrap after this many, so max_steps * batch_size
  /// / pool_size is the number of passes. 0 draws a fresh sample for every index.
  std::size_t pool_size = 0;
  double lr = 1e-4;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::vector<std::size_t> hidden{512, 256, 128};
  double phi1_scale = 1e-4;
  /// Progress callback (step, validation loss); may be empty.
  std::function<void(std::size_t, double)> on_validation;

  void validate() const;
};

struct ValidationPoint {
  std::size_t step = 0;
  double loss = 0.0;
};

struct TrainResult {
  nn::MlpModel model;  ///< weights of the best validation checkpoint
  std::vector<ValidationPoint> history;
  std::size_t best_step = 0;
  double best_loss = 0.0;
  std::vector<std::string> dropped_components;  ///< degenerate prior rows left out of the loss
};

/// Mean over the batch and over the kept components of |theta_hat - theta| / (p_max - p_min).
/// Rows with p_max == p_min are skipped. `d_theta_hat`, when non-empty, receives the
/// (sub)gradient with respect to theta_hat.
double scaled_mae(std::span<const double> theta_hat, std::span<const double> theta,
                  std::span<const Interval> ranges, std::span<double> d_theta_hat = {});

/// Trains on an endless stream of simulated spectra drawn from `scenario` (seed stream
/// `train`), validating on a fixed set from the `validation` stream. Returns the weights
/// with the lowest validation loss.
TrainResult train_network(Objective objective, const SignalModel& model, const PriorTable& priors,
                          const Scenario& scenario, const TrainConfig& cfg,
                          const nn::MlpModel* init = nullptr);

/// Objective value of a network on a fixed set (eval mode).
double validation_loss(Objective objective, const nn::MlpModel& net, const SignalModel& model,
                       const PriorTable& priors, const std::vector<SampleRecord>& records);

// ---- inference -------------------------------------------------------------

std::vector<double> predict(const nn::MlpModel& net, std::span<const cplx> y);
/// Same results as per-spectrum predict, processed in chunks.
std::vector<std::vector<double>> predict_batch(const nn::MlpModel& net, std::span<const CVec> ys,
                                               std::size_t chunk = 256);

// ---- test-time adaptation --------------------------------------------------

/// How batch norm behaves while adapting. `batch` uses the statistics of the adaptation
/// batch and updates the running estimates; single-spectrum batches always fall back to
/// `running`, which normalizes with the frozen running estimates.
enum class BnMode { batch, running };

struct AdaptConfig {
  std::size_t instance_steps = 50;
  std::size_t batch_size = 16;
  std::size_t domain_epochs = 1000;
  double lr = 1e-4;
  BnMode bn = BnMode::batch;
  bool online_predict_before_update = false;
  std::uint64_t seed = 0;  ///< domain-adaptation shuffling
  unsigned threads = 1;

  void validate() const;
};

struct InstanceResult {
  std::vector<double> theta;  ///< denormalized
  double residual_before = 0.0;
  double residual_after = 0.0;
};

/// Adapts a private copy of `init` to a single spectrum with J residual-loss Adam steps
/// and predicts with the adapted copy. `init` is never modified.
InstanceResult tta_instance(const nn::MlpModel& init, const SignalModel& model,
                            std::span<const cplx> y, const AdaptConfig& cfg);

struct OnlineResult {
  std::vector<std::vector<double>> theta;  ///< per spectrum, denormalized, stream order
  std::vector<double> batch_loss;          ///< residual loss before each update
  nn::MlpModel model;                      ///< weights after the last batch
};

/// One update per consecutive batch; weights carry over to the next batch.
OnlineResult tta_online(const nn::MlpModel& init, const SignalModel& model,
                        std::span<const CVec> stream, const AdaptConfig& cfg);

struct DomainResult {
  std::vector<std::vector<double>> theta;  ///< inference pass after adaptation
  std::vector<double> epoch_loss;          ///< mean residual loss per epoch
  nn::MlpModel model;
};

/// Epochs of shuffled mini-batch residual-loss training over the whole set, then one
/// eval-mode pass.
DomainResult tta_domain(const nn::MlpModel& init, const SignalModel& model,
                        std::span<const CVec> dataset, const AdaptConfig& cfg);

/// Mean over spectra of sum |y_unit - x(theta_hat)|^2 (each spectrum normalized first).
double mean_residual(const nn::MlpModel& net, const SignalModel& model, std::span<const CVec> ys);

}  // namespace mrsq::strategies
