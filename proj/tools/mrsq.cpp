// Command-line front end: simulate, train, fit, adapt, evaluate, sweep, report.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "mrsq/error.hpp"
#include "mrsq/harness/config.hpp"
#include "mrsq/harness/experiment.hpp"
#include "mrsq/harness/report.hpp"
#include "mrsq/sim/dataset_io.hpp"

namespace fs = std::filesystem;
using namespace mrsq;
using namespace mrsq::harness;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string preset;
  bool quiet = false;
};

ExperimentConfig resolve_config(const Globals& g) {
  std::optional<Preset> preset;
  if (!g.preset.empty()) preset = parse_preset(g.preset);
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig::defaults(preset.value_or(Preset::desk))
                                          : load_config(g.config, preset);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.out = g.out;
  cfg.sync_derived();
  cfg.validate();
  return cfg;
}

Logger make_logger(const Globals& g) {
  if (g.quiet) return {};
  return [](const std::string& s) { std::cerr << s << '\n'; };
}

AmplitudeRange parse_range(const std::string& s) {
  if (s == "mid") return AmplitudeRange::mid_range;
  if (s == "full") return AmplitudeRange::full_range;
  throw ConfigError("range must be mid or full");
}

strategies::Objective parse_objective(const std::string& s) {
  if (s == "supervised") return strategies::Objective::supervised;
  if (s == "self_supervised") return strategies::Objective::self_supervised;
  throw ConfigError("objective must be supervised or self_supervised");
}

void write_table(const fs::path& dir, const std::string& stem, const std::vector<EvalRecord>& records,
                 const ExperimentConfig& cfg) {
  fs::create_directories(dir);
  save_records(dir / (stem + "_records.csv"), records);
  const auto rows = summarize(records);
  std::ofstream out(dir / (stem + "_summary.csv"));
  write_summary(out, rows);
  write_sidecar(dir / (stem + "_summary.json"), cfg, stem + "_summary.csv");
  std::cout << format_summary(rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MRS spectral-fitting workbench"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--preset", g.preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  app.add_flag("-q,--quiet", g.quiet, "No progress output");

  auto* sim = app.add_subcommand("simulate", "Generate a dataset");
  std::string sim_range = "full", sim_file;
  std::size_t sim_n = 0;
  bool sim_rw = false;
  sim->add_option("--range", sim_range, "mid or full amplitude priors");
  sim->add_option("--n", sim_n, "Number of spectra (default: test_size)");
  sim->add_flag("--random-walk", sim_rw, "Add random-walk baseline corruption");
  sim->add_option("--file", sim_file, "Output file (default: <out>/datasets/<range>.jsonl)");

  auto* train = app.add_subcommand("train", "Train a network and save its checkpoint");
  std::string tr_obj = "supervised", tr_range = "mid";
  train->add_option("--objective", tr_obj, "supervised or self_supervised");
  train->add_option("--range", tr_range, "mid or full training priors");

  auto* fit = app.add_subcommand("fit", "Model-based fitting over a dataset");
  std::string fit_data;
  fit->add_option("--dataset", fit_data, "Dataset file")->required();

  auto* adapt = app.add_subcommand("adapt", "Test-time adaptation over a dataset");
  std::string ad_mode = "instance", ad_data, ad_ckpt, ad_range = "mid";
  adapt->add_option("--mode", ad_mode, "instance, online or domain")
      ->check(CLI::IsMember({"instance", "online", "domain"}));
  adapt->add_option("--dataset", ad_data, "Dataset file")->required();
  adapt->add_option("--checkpoint", ad_ckpt, "Initial network (default: configured init for --range)");
  adapt->add_option("--range", ad_range, "Training range of the default initial network");

  auto* eval = app.add_subcommand("evaluate", "Scenario suite (ID-mid, OoD-full, ID-full)");
  auto* sweep = app.add_subcommand("sweep", "Perturbation sweeps");

  auto* report = app.add_subcommand("report", "Re-aggregate summary tables from records");
  std::string rep_records;
  report->add_option("--records", rep_records, "Records CSV (default: <out>/records.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const ExperimentConfig cfg = resolve_config(g);
    const Logger log = make_logger(g);

    if (*sim) {
      const auto wb = Workbench::from_config(cfg);
      Scenario s = parse_range(sim_range) == AmplitudeRange::mid_range ? Scenario::mid_range("mid_range")
                                                                       : Scenario::full_range("full_range");
      s.random_walk = sim_rw;
      if (sim_rw) s.name += "+random_walk";
      const std::size_t n = sim_n ? sim_n : cfg.test_size;
      const auto data = generate_dataset(n, wb.priors, s, wb.model, cfg.seed, SeedStream::test, 0, cfg.threads);
      const fs::path file = sim_file.empty() ? cfg.out / "datasets" / (s.name + ".jsonl") : fs::path(sim_file);
      if (file.has_parent_path()) fs::create_directories(file.parent_path());
      save_dataset(file, data, wb.model, wb.priors);
      std::cout << "wrote " << n << " spectra to " << file.string() << '\n';
    } else if (*train) {
      const auto wb = Workbench::from_config(cfg);
      ExperimentConfig c = cfg;
      c.reuse_checkpoints = false;
      NetworkStore store(c, wb, log);
      store.get(parse_objective(tr_obj), parse_range(tr_range));
      std::cout << "saved "
                << NetworkStore::path_for(c.out, parse_objective(tr_obj), parse_range(tr_range)).string() << '\n';
    } else if (*fit) {
      const auto wb = Workbench::from_config(cfg);
      const auto data = load_dataset(fit_data, wb.model);
      const auto preds = run_strategy("model_based", cfg, wb, nullptr, data);
      std::vector<EvalRecord> recs;
      for (std::size_t i = 0; i < data.size(); ++i)
        recs.push_back(make_record("model_based", data[i].scenario, data[i], preds[i], wb, cfg.mosae_norm));
      write_table(cfg.out, "fit", recs, cfg);
    } else if (*adapt) {
      const auto wb = Workbench::from_config(cfg);
      const auto data = load_dataset(ad_data, wb.model);
      NetworkStore store(cfg, wb, log);
      const std::string strategy = "tta_" + ad_mode;
      std::optional<nn::MlpModel> own;
      const nn::MlpModel* net = nullptr;
      if (!ad_ckpt.empty()) {
        auto spec = nn::MlpSpec::for_layout(wb.model.crop_size(), wb.model.layout(), cfg.train.hidden);
        spec.head.phi1_scale = cfg.train.phi1_scale;
        own = nn::load_checkpoint(fs::path(ad_ckpt), spec);
        net = &*own;
      } else {
        net = network_for(strategy, cfg, store, parse_range(ad_range));
      }
      const auto preds = run_strategy(strategy, cfg, wb, net, data);
      std::vector<EvalRecord> recs;
      for (std::size_t i = 0; i < data.size(); ++i)
        recs.push_back(make_record(strategy, data[i].scenario, data[i], preds[i], wb, cfg.mosae_norm));
      write_table(cfg.out, "adapt_" + ad_mode, recs, cfg);
    } else if (*eval) {
      const auto res = run_scenario_suite(cfg, log);
      std::cout << format_summary(summarize(res.records));
      std::cout << "timing (median ms/sample):";
      for (const auto& t : res.timing) std::cout << "  " << t.strategy << '=' << t.median_ms;
      std::cout << "\nresults in " << cfg.out.string() << '\n';
    } else if (*sweep) {
      const auto recs = run_sweep_suite(cfg, log);
      std::cout << recs.size() << " sweep records written to " << (cfg.out / "sweep_records.csv").string() << '\n';
    } else if (*report) {
      const fs::path file = rep_records.empty() ? cfg.out / "records.csv" : fs::path(rep_records);
      const auto recs = load_records(file);
      const auto rows = summarize(recs);
      fs::create_directories(cfg.out);
      std::ofstream out(cfg.out / "report_summary.csv");
      write_summary(out, rows);
      bool sweep_records = false;
      for (const auto& r : recs) sweep_records = sweep_records || !r.sweep_parameter.empty();
      if (sweep_records) {
        std::ofstream cur(cfg.out / "report_curves.csv");
        write_curves(cur, sweep_curves(recs));
      }
      std::cout << format_summary(rows);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
