#include "mrsq/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mrsq/error.hpp"

namespace mrsq::harness {

const char* const kVersion = "mrsq 1.0.0";

namespace {

using nlohmann::json;

const std::set<std::string> kStrategies{"model_based",  "supervised", "self_supervised", "tta_instance",
                                        "tta_online",   "tta_domain", "oracle",          "midpoint"};
const std::set<std::string> kScenarios{"id_mid_range", "ood_full_range", "id_full_trained"};

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [k, _] : obj.items())
    if (!known.count(k)) throw ConfigError("unknown config key '" + where + (where.empty() ? "" : ".") + k + "'");
}

template <class T>
void read(const json& obj, const char* key, T& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

void read_interval(const json& obj, const char* key, double& lo, double& hi, const std::string& where) {
  if (!obj.contains(key)) return;
  std::vector<double> v;
  read(obj, key, v, where);
  if (v.size() != 2) throw ConfigError("config key '" + where + key + "' must be [lo, hi]");
  lo = v[0];
  hi = v[1];
}

std::string bn_name(strategies::BnMode m) { return m == strategies::BnMode::batch ? "batch" : "running"; }

std::string init_name(AdaptInit i) {
  switch (i) {
    case AdaptInit::supervised: return "supervised";
    case AdaptInit::self_supervised: return "self_supervised";
    case AdaptInit::scratch: return "scratch";
  }
  return "supervised";
}

void overlay(ExperimentConfig& c, const json& j) {
  reject_unknown(j,
                 {"preset", "seed", "out", "basis", "crop_ppm", "baseline_order", "noise_variance", "test_size",
                  "train_samples", "threads", "reuse_checkpoints", "train", "model_based", "adapt", "scenarios",
                  "strategies", "sweep", "timing", "mosae_norm"},
                 "");
  read(j, "seed", c.seed, "");
  if (j.contains("out")) {
    std::string s;
    read(j, "out", s, "");
    c.out = s;
  }
  if (j.contains("basis")) {
    std::string s;
    read(j, "basis", s, "");
    c.basis = s;
  }
  read_interval(j, "crop_ppm", c.crop.lo, c.crop.hi, "");
  read(j, "baseline_order", c.baseline_order, "");
  read_interval(j, "noise_variance", c.noise_variance.lo, c.noise_variance.hi, "");
  read(j, "test_size", c.test_size, "");
  read(j, "train_samples", c.train_samples, "");
  read(j, "threads", c.threads, "");
  read(j, "reuse_checkpoints", c.reuse_checkpoints, "");
  read(j, "scenarios", c.scenarios, "");
  read(j, "strategies", c.strategies, "");
  if (j.contains("mosae_norm")) {
    std::string s;
    read(j, "mosae_norm", s, "");
    if (s == "M")
      c.mosae_norm = metrics::MosaeNorm::all_entries;
    else if (s == "M-1")
      c.mosae_norm = metrics::MosaeNorm::metabolites_only;
    else
      throw ConfigError("mosae_norm must be \"M\" or \"M-1\"");
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown(t, {"batch_size", "epochs", "validate_every", "val_size", "lr", "hidden", "phi1_scale"}, "train");
    read(t, "batch_size", c.train.batch_size, "train.");
    read(t, "epochs", c.train_epochs, "train.");
    read(t, "validate_every", c.train.validate_every, "train.");
    read(t, "val_size", c.train.val_size, "train.");
    read(t, "lr", c.train.lr, "train.");
    read(t, "hidden", c.train.hidden, "train.");
    read(t, "phi1_scale", c.train.phi1_scale, "train.");
  }
  if (j.contains("model_based")) {
    const auto& t = j.at("model_based");
    reject_unknown(t, {"lr", "epochs", "fit_baseline"}, "model_based");
    read(t, "lr", c.fit.lr, "model_based.");
    read(t, "epochs", c.fit.epochs, "model_based.");
    read(t, "fit_baseline", c.fit.fit_baseline, "model_based.");
  }
  if (j.contains("adapt")) {
    const auto& t = j.at("adapt");
    reject_unknown(t,
                   {"instance_steps", "batch_size", "domain_epochs", "lr", "bn", "online_predict_before_update",
                    "init"},
                   "adapt");
    read(t, "instance_steps", c.adapt.instance_steps, "adapt.");
    read(t, "batch_size", c.adapt.batch_size, "adapt.");
    read(t, "domain_epochs", c.adapt.domain_epochs, "adapt.");
    read(t, "lr", c.adapt.lr, "adapt.");
    read(t, "online_predict_before_update", c.adapt.online_predict_before_update, "adapt.");
    if (t.contains("bn")) {
      std::string s;
      read(t, "bn", s, "adapt.");
      if (s == "batch")
        c.adapt.bn = strategies::BnMode::batch;
      else if (s == "running")
        c.adapt.bn = strategies::BnMode::running;
      else
        throw ConfigError("adapt.bn must be \"batch\" or \"running\"");
    }
    if (t.contains("init")) {
      std::string s;
      read(t, "init", s, "adapt.");
      if (s == "supervised")
        c.adapt_init = AdaptInit::supervised;
      else if (s == "self_supervised")
        c.adapt_init = AdaptInit::self_supervised;
      else if (s == "scratch")
        c.adapt_init = AdaptInit::scratch;
      else
        throw ConfigError("adapt.init must be supervised, self_supervised or scratch");
    }
  }
  if (j.contains("sweep")) {
    const auto& t = j.at("sweep");
    reject_unknown(t, {"parameters", "strategies", "grid_points", "n_per_value"}, "sweep");
    read(t, "parameters", c.sweep.parameters, "sweep.");
    read(t, "strategies", c.sweep.strategies, "sweep.");
    read(t, "grid_points", c.sweep.grid_points, "sweep.");
    read(t, "n_per_value", c.sweep.n_per_value, "sweep.");
  }
  if (j.contains("timing")) {
    const auto& t = j.at("timing");
    reject_unknown(t, {"repeats", "samples"}, "timing");
    read(t, "repeats", c.timing_repeats, "timing.");
    read(t, "samples", c.timing_samples, "timing.");
  }
}

}  // namespace

void ExperimentConfig::sync_derived() {
  ExperimentConfig& c = *this;
  c.train.seed = c.seed;
  c.adapt.seed = c.seed;
  c.train.threads = c.threads;
  c.adapt.threads = c.threads;
  c.fit.phi1_scale = c.train.phi1_scale;
  c.train.pool_size = c.train_samples;
  c.train.max_steps =
      (c.train_samples * c.train_epochs + c.train.batch_size - 1) / std::max<std::size_t>(c.train.batch_size, 1);
}

Preset parse_preset(const std::string& name) {
  if (name == "desk") return Preset::desk;
  if (name == "paper") return Preset::paper;
  throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
}

std::string preset_name(Preset p) { return p == Preset::desk ? "desk" : "paper"; }

ExperimentConfig ExperimentConfig::defaults(Preset preset) {
  ExperimentConfig c;
  c.preset = preset;
  if (preset == Preset::desk) {
    c.out = "runs/desk";
    c.test_size = 1000;
    c.train_samples = 50000;
    c.adapt.domain_epochs = 20;
    c.sweep.grid_points = 9;
    c.sweep.n_per_value = 20;
  } else {
    c.out = "runs/paper";
    c.test_size = 10000;
    c.train_samples = 1000000;
    c.train_epochs = 1;
    c.adapt.domain_epochs = 1000;
    c.sweep.grid_points = 21;
    c.sweep.n_per_value = 200;
    c.sweep.strategies = c.strategies;
  }
  c.sync_derived();
  return c;
}

void ExperimentConfig::validate() const {
  if (!(crop.lo < crop.hi)) throw ConfigError("crop_ppm must satisfy lo < hi");
  if (!(noise_variance.lo >= 0.0 && noise_variance.lo <= noise_variance.hi))
    throw ConfigError("noise_variance must satisfy 0 <= lo <= hi");
  if (test_size == 0) throw ConfigError("test_size must be >= 1");
  if (train_samples < train.batch_size) throw ConfigError("train_samples must cover at least one batch");
  if (train_epochs == 0) throw ConfigError("train.epochs must be >= 1");
  if (threads == 0) throw ConfigError("threads must be >= 1");
  if (timing_repeats < 3) throw ConfigError("timing.repeats must be >= 3");
  if (timing_samples == 0) throw ConfigError("timing.samples must be >= 1");
  if (!(fit.lr > 0.0)) throw ConfigError("model_based.lr must be positive");
  if (!(train.phi1_scale > 0.0)) throw ConfigError("train.phi1_scale must be positive");
  train.validate();
  adapt.validate();
  std::set<std::string> seen;
  for (const auto& s : scenarios) {
    if (!kScenarios.count(s)) throw ConfigError("unknown scenario '" + s + "'");
    if (!seen.insert(s).second) throw ConfigError("duplicate scenario '" + s + "'");
  }
  seen.clear();
  for (const auto& s : strategies) {
    if (!kStrategies.count(s)) throw ConfigError("unknown strategy '" + s + "'");
    if (!seen.insert(s).second) throw ConfigError("duplicate strategy '" + s + "'");
  }
  for (const auto& s : sweep.strategies)
    if (!kStrategies.count(s)) throw ConfigError("unknown sweep strategy '" + s + "'");
  if (sweep.grid_points < 1 || sweep.n_per_value < 1) throw ConfigError("sweep sizes must be positive");
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["preset"] = preset_name(preset);
  j["seed"] = seed;
  j["out"] = out.string();
  j["basis"] = basis.string();
  j["crop_ppm"] = {crop.lo, crop.hi};
  j["baseline_order"] = baseline_order;
  j["noise_variance"] = {noise_variance.lo, noise_variance.hi};
  j["test_size"] = test_size;
  j["train_samples"] = train_samples;
  j["threads"] = threads;
  j["reuse_checkpoints"] = reuse_checkpoints;
  j["train"] = {{"batch_size", train.batch_size}, {"epochs", train_epochs}, {"validate_every", train.validate_every},
                {"val_size", train.val_size},     {"lr", train.lr},
                {"hidden", train.hidden},         {"phi1_scale", train.phi1_scale}};
  j["model_based"] = {{"lr", fit.lr}, {"epochs", fit.epochs}, {"fit_baseline", fit.fit_baseline}};
  j["adapt"] = {{"instance_steps", adapt.instance_steps},
                {"batch_size", adapt.batch_size},
                {"domain_epochs", adapt.domain_epochs},
                {"lr", adapt.lr},
                {"bn", bn_name(adapt.bn)},
                {"online_predict_before_update", adapt.online_predict_before_update},
                {"init", init_name(adapt_init)}};
  j["scenarios"] = scenarios;
  j["strategies"] = strategies;
  j["sweep"] = {{"parameters", sweep.parameters},
                {"strategies", sweep.strategies},
                {"grid_points", sweep.grid_points},
                {"n_per_value", sweep.n_per_value}};
  j["timing"] = {{"repeats", timing_repeats}, {"samples", timing_samples}};
  j["mosae_norm"] = mosae_norm == metrics::MosaeNorm::all_entries ? "M" : "M-1";
  return j.dump(2);
}

ExperimentConfig parse_config(const std::string& json_text, std::optional<Preset> preset_override) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  Preset p = Preset::desk;
  if (j.contains("preset")) {
    if (!j.at("preset").is_string()) throw ConfigError("preset must be a string");
    p = parse_preset(j.at("preset").get<std::string>());
  }
  if (preset_override) p = *preset_override;
  ExperimentConfig c = ExperimentConfig::defaults(p);
  overlay(c, j);
  c.sync_derived();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<Preset> preset_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), preset_override);
}

}  // namespace mrsq::harness
