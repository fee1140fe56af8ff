#include "mrsq/harness/report.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mrsq/error.hpp"
#include "mrsq/simd/kernels.hpp"

namespace mrsq::harness {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw FormatError("bad number '" + s + "' in records file");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  char* end = nullptr;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw FormatError("bad integer '" + s + "' in records file");
  return v;
}

constexpr int kFixedColumns = 11;

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<EvalRecord>& records) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const EvalRecord*>> groups;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.strategy, r.scenario);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<SummaryRow> rows;
  for (const auto& key : order) {
    const auto& g = groups.at(key);
    std::vector<double> mae, mosae;
    double ms = 0.0;
    for (const auto* r : g) {
      mae.push_back(r->mae);
      mosae.push_back(r->mosae);
      ms += r->ms_per_sample;
    }
    SummaryRow row;
    row.strategy = key.first;
    row.scenario = key.second;
    row.n = g.size();
    row.mae = metrics::aggregate(mae);
    row.mosae = metrics::aggregate(mosae);
    row.ms_per_sample = ms / static_cast<double>(g.size());
    rows.push_back(row);
  }
  return rows;
}

std::vector<CurvePoint> sweep_curves(const std::vector<EvalRecord>& records) {
  using Key = std::tuple<std::string, std::string, double>;
  std::vector<Key> order;
  std::map<Key, std::pair<std::vector<double>, bool>> groups;
  for (const auto& r : records) {
    if (r.sweep_parameter.empty()) continue;
    const Key key{r.strategy, r.sweep_parameter, r.sweep_value};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.first.push_back(r.mosae);
    it->second.second = it->second.second || r.ood;
  }
  std::vector<CurvePoint> out;
  for (const auto& key : order) {
    const auto& g = groups.at(key);
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), g.second, metrics::aggregate(g.first)});
  }
  return out;
}

std::vector<RegressionRow> regression_table(const std::vector<EvalRecord>& records,
                                            const std::vector<std::string>& metabolite_names) {
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<const EvalRecord*>> groups;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.strategy, r.scenario);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<RegressionRow> rows;
  for (const auto& key : order) {
    const auto& g = groups.at(key);
    for (std::size_t m = 0; m < metabolite_names.size(); ++m) {
      std::vector<double> pred, truth;
      for (const auto* r : g) {
        pred.push_back(r->pred.at(m));
        truth.push_back(r->truth.at(m));
      }
      RegressionRow row{key.first, key.second, metabolite_names[m], false, {}};
      try {
        row.stats = metrics::regression_stats(pred, truth);
        row.valid = true;
      } catch (const ValidationError&) {
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_regression(std::ostream& out, const std::vector<RegressionRow>& rows) {
  out << "strategy,scenario,metabolite,alpha,beta,r2,rmse\n";
  for (const auto& r : rows) {
    out << r.strategy << ',' << r.scenario << ',' << r.metabolite;
    if (r.valid)
      out << ',' << num(r.stats.alpha) << ',' << num(r.stats.beta) << ',' << num(r.stats.r2) << ',' << num(r.stats.rmse);
    else
      out << ",nan,nan,nan,nan";
    out << '\n';
  }
}

void write_records(std::ostream& out, const std::vector<EvalRecord>& records) {
  const std::size_t P = records.empty() ? 0 : records.front().truth.size();
  out << "strategy,scenario,seed,snr_db,mae,mosae,w_opt,ms_per_sample,ood,sweep_parameter,sweep_value";
  for (std::size_t i = 0; i < P; ++i) out << ",truth_" << i;
  for (std::size_t i = 0; i < P; ++i) out << ",pred_" << i;
  out << '\n';
  for (const auto& r : records) {
    if (r.truth.size() != P || r.pred.size() != P) throw ValidationError("records have mixed theta sizes");
    out << r.strategy << ',' << r.scenario << ',' << r.seed << ',' << num(r.snr_db) << ',' << num(r.mae) << ','
        << num(r.mosae) << ',' << num(r.w_opt) << ',' << num(r.ms_per_sample) << ',' << (r.ood ? 1 : 0) << ','
        << r.sweep_parameter << ',' << num(r.sweep_value);
    for (double v : r.truth) out << ',' << num(v);
    for (double v : r.pred) out << ',' << num(v);
    out << '\n';
  }
}

std::vector<EvalRecord> read_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("records file is empty");
  const auto header = split(line);
  if (header.size() < kFixedColumns || header[0] != "strategy" || (header.size() - kFixedColumns) % 2 != 0)
    throw FormatError("records file has an unexpected header");
  const std::size_t P = (header.size() - kFixedColumns) / 2;
  std::vector<EvalRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw FormatError("records line " + std::to_string(line_no) + " has the wrong width");
    EvalRecord r;
    r.strategy = f[0];
    r.scenario = f[1];
    r.seed = parse_u64(f[2]);
    r.snr_db = parse_double(f[3]);
    r.mae = parse_double(f[4]);
    r.mosae = parse_double(f[5]);
    r.w_opt = parse_double(f[6]);
    r.ms_per_sample = parse_double(f[7]);
    r.ood = f[8] == "1";
    r.sweep_parameter = f[9];
    r.sweep_value = parse_double(f[10]);
    for (std::size_t i = 0; i < P; ++i) r.truth.push_back(parse_double(f[kFixedColumns + i]));
    for (std::size_t i = 0; i < P; ++i) r.pred.push_back(parse_double(f[kFixedColumns + P + i]));
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "strategy,scenario,n,mae_mean,mae_se,mosae_mean,mosae_se,ms_per_sample\n";
  for (const auto& r : rows)
    out << r.strategy << ',' << r.scenario << ',' << r.n << ',' << num(r.mae.mean) << ',' << num(r.mae.standard_error)
        << ',' << num(r.mosae.mean) << ',' << num(r.mosae.standard_error) << ',' << num(r.ms_per_sample) << '\n';
}

void write_curves(std::ostream& out, const std::vector<CurvePoint>& points) {
  out << "strategy,parameter,value,ood,n,mosae_mean,mosae_se\n";
  for (const auto& p : points)
    out << p.strategy << ',' << p.parameter << ',' << num(p.value) << ',' << (p.ood ? 1 : 0) << ',' << p.mosae.n << ','
        << num(p.mosae.mean) << ',' << num(p.mosae.standard_error) << '\n';
}

void write_timing(std::ostream& out, const std::vector<TimingResult>& timing) {
  out << "strategy,median_ms_per_sample,min_ms,max_ms,repeats,samples\n";
  for (const auto& t : timing)
    out << t.strategy << ',' << num(t.median_ms) << ',' << num(t.min_ms) << ',' << num(t.max_ms) << ',' << t.repeats
        << ',' << t.samples << '\n';
}

void save_records(const std::filesystem::path& path, const std::vector<EvalRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_records(out, records);
}

std::vector<EvalRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_records(in);
}

void write_sidecar(const std::filesystem::path& path, const ExperimentConfig& cfg, const std::string& table) {
  nlohmann::json j;
  j["table"] = table;
  j["software"] = kVersion;
  j["isa"] = std::string(simd::name(simd::active_isa()));
  j["master_seed"] = cfg.seed;
  j["seed_streams"] = {{"train", 1}, {"validation", 2}, {"test", 3}, {"sweep", 4}, {"adaptation", 5}, {"init", 6}};
  j["config"] = nlohmann::json::parse(cfg.to_json());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %-16s %6s %18s %18s %12s\n", "strategy", "scenario", "n", "MAE (+-SE)",
                "MOSAE (+-SE)", "ms/sample");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %-16s %6zu %9.4f +-%6.4f %9.4f +-%6.4f %12.4f\n", r.strategy.c_str(),
                  r.scenario.c_str(), r.n, r.mae.mean, r.mae.standard_error, r.mosae.mean, r.mosae.standard_error,
                  r.ms_per_sample);
    os << buf;
  }
  return os.str();
}

}  // namespace mrsq::harness
