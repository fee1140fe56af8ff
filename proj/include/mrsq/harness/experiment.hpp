#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "mrsq/harness/config.hpp"
#include "mrsq/sim/simulator.hpp"

namespace mrsq::harness {

/// Basis, forward model and priors built from a config.
struct Workbench {
  SignalModel model;
  PriorTable priors;

  static Workbench from_config(const ExperimentConfig& cfg);
};

struct EvalRecord {
  std::string strategy;
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<double> truth;  ///< theta, ParamLayout order
  std::vector<double> pred;
  double mae = 0.0;
  double mosae = 0.0;
  double w_opt = 0.0;
  double snr_db = 0.0;
  double ms_per_sample = 0.0;
  bool ood = false;
  std::string sweep_parameter;
  double sweep_value = 0.0;
};

using Logger = std::function<void(const std::string&)>;

/// Checkpoints live in <out>/checkpoints/<objective>_<mid|full>.ckpt; missing ones are
/// trained (and saved) on demand.
class NetworkStore {
 public:
  NetworkStore(const ExperimentConfig& cfg, const Workbench& wb, Logger log = {});
  const nn::MlpModel& get(strategies::Objective objective, AmplitudeRange range);
  /// Untrained network with the configured architecture (adaptation from scratch).
  const nn::MlpModel& scratch();
  static std::filesystem::path path_for(const std::filesystem::path& out, strategies::Objective objective,
                                        AmplitudeRange range);

 private:
  const ExperimentConfig& cfg_;
  const Workbench& wb_;
  Logger log_;
  std::map<std::pair<int, int>, std::unique_ptr<nn::MlpModel>> cache_;
  std::unique_ptr<nn::MlpModel> scratch_;
};

struct Prediction {
  std::vector<double> theta;
  double ms = 0.0;
};

/// Runs one strategy over a set of spectra. `net` is the trained network for network
/// strategies (ignored by model_based / oracle / midpoint). `truth` feeds the oracle hook.
std::vector<Prediction> run_strategy(const std::string& strategy, const ExperimentConfig& cfg, const Workbench& wb,
                                     const nn::MlpModel* net, const std::vector<SampleRecord>& data);

/// Metrics for one prediction against one sample.
EvalRecord make_record(const std::string& strategy, const std::string& scenario, const SampleRecord& sample,
                       const Prediction& p, const Workbench& wb, metrics::MosaeNorm norm);

/// Test set of a named scenario. OoD-full and ID-full share the full-range set.
std::vector<SampleRecord> scenario_test_set(const std::string& scenario, const ExperimentConfig& cfg,
                                            const Workbench& wb);
/// Amplitude range of the network a scenario is evaluated with.
AmplitudeRange trained_range(const std::string& scenario);
/// Amplitude range of the test data of a scenario.
AmplitudeRange test_range(const std::string& scenario);

struct TimingResult {
  std::string strategy;
  double median_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  std::size_t repeats = 0;
  std::size_t samples = 0;
};

/// Median wall time per spectrum over `repeats` runs on `data` after one warm-up run.
/// Network strategies process the whole set as one batch, so their cost is amortized.
TimingResult measure_time(const std::string& strategy, const ExperimentConfig& cfg, const Workbench& wb,
                          const nn::MlpModel* net, const std::vector<SampleRecord>& data, std::size_t repeats);

struct SuiteResult {
  std::vector<EvalRecord> records;
  std::vector<TimingResult> timing;
};

/// Every configured strategy on every configured scenario; writes records.csv, summary.csv,
/// timing.csv and summary.json into cfg.out.
SuiteResult run_scenario_suite(const ExperimentConfig& cfg, Logger log = {});

/// Perturbation sweeps with mid-trained networks; writes sweep_records.csv, sweep_curves.csv
/// and sweep.json into cfg.out.
std::vector<EvalRecord> run_sweep_suite(const ExperimentConfig& cfg, Logger log = {});

/// Network a strategy runs with, or nullptr for strategies that need none.
const nn::MlpModel* network_for(const std::string& strategy, const ExperimentConfig& cfg, NetworkStore& store,
                                AmplitudeRange range);

}  // namespace mrsq::harness
