#include "mrsq/harness/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "mrsq/error.hpp"
#include "mrsq/harness/report.hpp"
#include "mrsq/hash.hpp"
#include "mrsq/parallel.hpp"

namespace mrsq::harness {
namespace {

using Clock = std::chrono::steady_clock;
using strategies::Objective;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<CVec> observed(const std::vector<SampleRecord>& data) {
  std::vector<CVec> ys;
  ys.reserve(data.size());
  for (const auto& r : data) ys.push_back(r.observed);
  return ys;
}

Scenario scenario_for(AmplitudeRange r) {
  return r == AmplitudeRange::mid_range ? Scenario::mid_range("mid_range") : Scenario::full_range("full_range");
}

std::uint64_t named_stream(SeedStream base, const std::string& name) {
  Fnv1a h;
  h.str(name);
  return static_cast<std::uint64_t>(base) ^ (h.value() << 8);
}

const char* objective_name(Objective o) { return o == Objective::supervised ? "supervised" : "self_supervised"; }
const char* range_name(AmplitudeRange r) { return r == AmplitudeRange::mid_range ? "mid" : "full"; }

nn::MlpSpec network_spec(const ExperimentConfig& cfg, const Workbench& wb) {
  auto spec = nn::MlpSpec::for_layout(wb.model.crop_size(), wb.model.layout(), cfg.train.hidden);
  spec.head.phi1_scale = cfg.train.phi1_scale;
  return spec;
}

// Training settings a checkpoint depends on; a reused checkpoint with a different tag is retrained.
std::string training_tag(const ExperimentConfig& cfg, Objective objective, AmplitudeRange range) {
  const auto& t = cfg.train;
  std::ostringstream os;
  os << "objective=" << objective_name(objective) << " range=" << range_name(range) << " seed=" << t.seed
     << " steps=" << t.max_steps << " pool=" << t.pool_size << " batch=" << t.batch_size
     << " val=" << t.val_size << "/" << t.validate_every << " lr=" << t.lr << " phi1=" << t.phi1_scale
     << " noise=" << cfg.noise_variance.lo << "-" << cfg.noise_variance.hi << " hidden=";
  for (auto h : t.hidden) os << h << ',';
  return os.str();
}

void write_file(const std::filesystem::path& p, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  fn(out);
  if (!out) throw ConfigError("failed writing " + p.string());
}

}  // namespace

Workbench Workbench::from_config(const ExperimentConfig& cfg) {
  if (cfg.baseline_order != 2)
    throw ConfigError("default priors cover a second-order baseline only (baseline_order = 2)");
  const BasisDescription desc = cfg.basis.empty() ? parse_basis_description(std::string(default_basis_json()))
                                                  : load_basis_description(cfg.basis);
  const auto axis = SpectralAxis::build(desc.axis_params(cfg.crop));
  BasisSet basis = synthesize_basis(desc, axis);
  const auto names = basis.names();
  PriorTable priors = PriorTable::defaults(names);
  priors.noise_variance = cfg.noise_variance;
  priors.validate();
  return Workbench{SignalModel(std::move(basis), cfg.baseline_order), std::move(priors)};
}

// ---- networks --------------------------------------------------------------

NetworkStore::NetworkStore(const ExperimentConfig& cfg, const Workbench& wb, Logger log)
    : cfg_(cfg), wb_(wb), log_(std::move(log)) {}

std::filesystem::path NetworkStore::path_for(const std::filesystem::path& out, Objective objective,
                                             AmplitudeRange range) {
  return out / "checkpoints" / (std::string(objective_name(objective)) + "_" + range_name(range) + ".ckpt");
}

const nn::MlpModel& NetworkStore::get(Objective objective, AmplitudeRange range) {
  const auto key = std::make_pair(static_cast<int>(objective), static_cast<int>(range));
  if (auto it = cache_.find(key); it != cache_.end()) return *it->second;
  const auto path = path_for(cfg_.out, objective, range);
  const auto spec = network_spec(cfg_, wb_);
  const auto tag = training_tag(cfg_, objective, range);
  std::unique_ptr<nn::MlpModel> net;
  if (cfg_.reuse_checkpoints && std::filesystem::exists(path)) {
    auto loaded = nn::load_checkpoint(path, spec);
    if (loaded.rng_state().rfind(tag + ";", 0) == 0) {
      if (log_) log_("loading " + path.string());
      net = std::make_unique<nn::MlpModel>(std::move(loaded));
    } else if (log_) {
      log_(path.string() + " was trained with other settings; retraining");
    }
  }
  if (!net) {
    if (log_)
      log_(std::string("training ") + objective_name(objective) + " network on " + range_name(range) + "-range data (" +
           std::to_string(cfg_.train.max_steps) + " steps)");
    auto tc = cfg_.train;
    if (log_)
      tc.on_validation = [this](std::size_t step, double loss) {
        log_("  step " + std::to_string(step) + "  validation loss " + std::to_string(loss));
      };
    auto res = strategies::train_network(objective, wb_.model, wb_.priors, scenario_for(range), tc);
    if (log_) log_("  best validation at step " + std::to_string(res.best_step));
    std::filesystem::create_directories(path.parent_path());
    res.model.rng_state() = tag + ";" + res.model.rng_state();
    nn::save_checkpoint(res.model, path);
    net = std::make_unique<nn::MlpModel>(std::move(res.model));
  }
  auto& ref = *net;
  cache_.emplace(key, std::move(net));
  return ref;
}

const nn::MlpModel& NetworkStore::scratch() {
  if (!scratch_)
    scratch_ = std::make_unique<nn::MlpModel>(network_spec(cfg_, wb_), derive_seed(cfg_.seed, SeedStream::init, 1));
  return *scratch_;
}

const nn::MlpModel* network_for(const std::string& strategy, const ExperimentConfig& cfg, NetworkStore& store,
                                AmplitudeRange range) {
  if (strategy == "supervised") return &store.get(Objective::supervised, range);
  if (strategy == "self_supervised") return &store.get(Objective::self_supervised, range);
  if (strategy.rfind("tta_", 0) == 0) {
    switch (cfg.adapt_init) {
      case AdaptInit::supervised: return &store.get(Objective::supervised, range);
      case AdaptInit::self_supervised: return &store.get(Objective::self_supervised, range);
      case AdaptInit::scratch: return &store.scratch();
    }
  }
  return nullptr;
}

// ---- strategies ------------------------------------------------------------

std::vector<Prediction> run_strategy(const std::string& strategy, const ExperimentConfig& cfg, const Workbench& wb,
                                     const nn::MlpModel* net, const std::vector<SampleRecord>& data) {
  const std::size_t n = data.size();
  std::vector<Prediction> out(n);
  if (n == 0) return out;
  const bool needs_net = strategy == "supervised" || strategy == "self_supervised" || strategy.rfind("tta_", 0) == 0;
  if (needs_net && !net) throw ConfigError("strategy '" + strategy + "' needs a network");

  auto amortize = [&](std::vector<std::vector<double>> th, Clock::time_point t0) {
    const double ms = ms_since(t0) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {std::move(th[i]), ms};
  };

  if (strategy == "oracle") {
    for (std::size_t i = 0; i < n; ++i) out[i] = {data[i].theta, 0.0};
  } else if (strategy == "midpoint") {
    std::vector<double> mid(wb.priors.theta.size());
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = wb.priors.theta[i].mid();
    for (std::size_t i = 0; i < n; ++i) out[i] = {mid, 0.0};
  } else if (strategy == "model_based") {
    const auto init = strategies::default_fit_init(wb.priors);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
      const auto t0 = Clock::now();
      auto fit = strategies::fit_model_based(wb.model, data[i].observed, init, cfg.fit);
      out[i] = {std::move(fit.theta), ms_since(t0)};
    });
  } else if (strategy == "supervised" || strategy == "self_supervised") {
    const auto ys = observed(data);
    const auto t0 = Clock::now();
    amortize(strategies::predict_batch(*net, ys), t0);
  } else if (strategy == "tta_instance") {
    parallel_for(n, cfg.threads, [&](std::size_t i) {
      const auto t0 = Clock::now();
      auto r = strategies::tta_instance(*net, wb.model, data[i].observed, cfg.adapt);
      out[i] = {std::move(r.theta), ms_since(t0)};
    });
  } else if (strategy == "tta_online") {
    const auto ys = observed(data);
    const auto t0 = Clock::now();
    amortize(strategies::tta_online(*net, wb.model, ys, cfg.adapt).theta, t0);
  } else if (strategy == "tta_domain") {
    const auto ys = observed(data);
    const auto t0 = Clock::now();
    amortize(strategies::tta_domain(*net, wb.model, ys, cfg.adapt).theta, t0);
  } else {
    throw ConfigError("unknown strategy '" + strategy + "'");
  }
  return out;
}

EvalRecord make_record(const std::string& strategy, const std::string& scenario, const SampleRecord& sample,
                       const Prediction& p, const Workbench& wb, metrics::MosaeNorm norm) {
  EvalRecord r;
  r.strategy = strategy;
  r.scenario = scenario;
  r.seed = sample.seed;
  r.truth = sample.theta;
  r.pred = p.theta;
  r.snr_db = sample.snr_db;
  r.ms_per_sample = p.ms;
  r.ood = sample.ood;
  r.sweep_parameter = sample.sweep_parameter;
  r.sweep_value = sample.sweep_value;
  const std::size_t M = wb.model.layout().n_metabolites;
  const std::span<const double> a(r.truth.data(), M), ah(r.pred.data(), M);
  const auto mm = wb.model.basis().mm_index();
  r.mae = metrics::mae(ah, a, mm);
  r.w_opt = metrics::optimal_scale(ah, a, mm).w;
  r.mosae = metrics::mosae(ah, a, mm, norm);
  return r;
}

// ---- scenarios -------------------------------------------------------------

AmplitudeRange trained_range(const std::string& scenario) {
  if (scenario == "id_mid_range" || scenario == "ood_full_range") return AmplitudeRange::mid_range;
  if (scenario == "id_full_trained") return AmplitudeRange::full_range;
  throw ConfigError("unknown scenario '" + scenario + "'");
}

AmplitudeRange test_range(const std::string& scenario) {
  if (scenario == "id_mid_range") return AmplitudeRange::mid_range;
  if (scenario == "ood_full_range" || scenario == "id_full_trained") return AmplitudeRange::full_range;
  throw ConfigError("unknown scenario '" + scenario + "'");
}

std::vector<SampleRecord> scenario_test_set(const std::string& scenario, const ExperimentConfig& cfg,
                                            const Workbench& wb) {
  const Scenario s = scenario_for(test_range(scenario));
  const auto stream = named_stream(SeedStream::test, s.name);
  std::vector<SampleRecord> out(cfg.test_size);
  parallel_for(cfg.test_size, cfg.threads, [&](std::size_t i) {
    out[i] = simulate_record(wb.model, wb.priors, s, derive_seed(cfg.seed, stream, i));
  });
  return out;
}

TimingResult measure_time(const std::string& strategy, const ExperimentConfig& cfg, const Workbench& wb,
                          const nn::MlpModel* net, const std::vector<SampleRecord>& data, std::size_t repeats) {
  if (data.empty()) throw ValidationError("timing needs at least one spectrum");
  ExperimentConfig serial = cfg;
  serial.threads = 1;
  serial.sync_derived();
  run_strategy(strategy, serial, wb, net, data);  // warm-up
  std::vector<double> ms;
  for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r) {
    const auto t0 = Clock::now();
    run_strategy(strategy, serial, wb, net, data);
    ms.push_back(ms_since(t0) / static_cast<double>(data.size()));
  }
  std::sort(ms.begin(), ms.end());
  TimingResult t;
  t.strategy = strategy;
  t.repeats = ms.size();
  t.samples = data.size();
  t.min_ms = ms.front();
  t.max_ms = ms.back();
  t.median_ms = ms.size() % 2 ? ms[ms.size() / 2] : 0.5 * (ms[ms.size() / 2 - 1] + ms[ms.size() / 2]);
  return t;
}

SuiteResult run_scenario_suite(const ExperimentConfig& cfg, Logger log) {
  cfg.validate();
  const Workbench wb = Workbench::from_config(cfg);
  NetworkStore store(cfg, wb, log);
  std::filesystem::create_directories(cfg.out);

  std::map<std::string, std::vector<SampleRecord>> sets;
  for (const auto& sc : cfg.scenarios) {
    if (log) log("simulating test set for " + sc);
    sets[sc] = scenario_test_set(sc, cfg, wb);
  }

  SuiteResult res;
  for (const auto& strategy : cfg.strategies) {
    for (const auto& sc : cfg.scenarios) {
      const auto* net = network_for(strategy, cfg, store, trained_range(sc));
      if (log) log("evaluating " + strategy + " on " + sc);
      const auto& data = sets.at(sc);
      const auto preds = run_strategy(strategy, cfg, wb, net, data);
      for (std::size_t i = 0; i < data.size(); ++i)
        res.records.push_back(make_record(strategy, sc, data[i], preds[i], wb, cfg.mosae_norm));
    }
  }

  const auto& timing_set = sets.at(cfg.scenarios.front());
  const std::vector<SampleRecord> timing_data(
      timing_set.begin(), timing_set.begin() + static_cast<std::ptrdiff_t>(std::min(cfg.timing_samples, timing_set.size())));
  for (const auto& strategy : cfg.strategies) {
    if (log) log("timing " + strategy);
    const auto* net = network_for(strategy, cfg, store, trained_range(cfg.scenarios.front()));
    res.timing.push_back(measure_time(strategy, cfg, wb, net, timing_data, cfg.timing_repeats));
  }

  save_records(cfg.out / "records.csv", res.records);
  const auto rows = summarize(res.records);
  write_file(cfg.out / "summary.csv", [&](std::ostream& o) { write_summary(o, rows); });
  write_file(cfg.out / "timing.csv", [&](std::ostream& o) { write_timing(o, res.timing); });
  const auto reg = regression_table(res.records, wb.model.basis().names());
  write_file(cfg.out / "regression.csv", [&](std::ostream& o) { write_regression(o, reg); });
  write_sidecar(cfg.out / "summary.json", cfg, "summary.csv");
  return res;
}

std::vector<EvalRecord> run_sweep_suite(const ExperimentConfig& cfg, Logger log) {
  cfg.validate();
  const Workbench wb = Workbench::from_config(cfg);
  NetworkStore store(cfg, wb, log);
  std::filesystem::create_directories(cfg.out);

  const auto all = default_sweeps(wb.priors, cfg.sweep.n_per_value, cfg.sweep.grid_points);
  const Scenario base = Scenario::mid_range("mid_range");
  std::vector<EvalRecord> records;
  for (const auto& name : cfg.sweep.parameters) {
    const auto it = std::find_if(all.begin(), all.end(), [&](const SweepSpec& s) { return s.parameter == name; });
    if (it == all.end()) throw ConfigError("no default sweep grid for '" + name + "'");
    if (log) log("sweep " + name + ": " + std::to_string(it->grid.size() * it->n_per_value) + " spectra");
    const auto data = make_sweep(*it, wb.priors, base, wb.model, cfg.seed, cfg.threads);
    for (const auto& strategy : cfg.sweep.strategies) {
      const auto* net = network_for(strategy, cfg, store, AmplitudeRange::mid_range);
      const auto preds = run_strategy(strategy, cfg, wb, net, data);
      for (std::size_t i = 0; i < data.size(); ++i)
        records.push_back(make_record(strategy, "sweep:" + name, data[i], preds[i], wb, cfg.mosae_norm));
    }
  }
  save_records(cfg.out / "sweep_records.csv", records);
  const auto curves = sweep_curves(records);
  write_file(cfg.out / "sweep_curves.csv", [&](std::ostream& o) { write_curves(o, curves); });
  write_sidecar(cfg.out / "sweep.json", cfg, "sweep_curves.csv");
  return records;
}

}  // namespace mrsq::harness
