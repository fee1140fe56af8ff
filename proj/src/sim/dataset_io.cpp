#include "mrsq/sim/dataset_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mrsq/error.hpp"

namespace mrsq {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "mrsq-dataset";
constexpr int kVersion = 1;

std::string hex(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

json split(const CVec& v, bool imag) {
  json a = json::array();
  for (const auto& c : v) a.push_back(imag ? c.imag() : c.real());
  return a;
}

CVec join(const json& re, const json& im) {
  if (re.size() != im.size()) throw FormatError("real/imaginary arrays differ in length");
  CVec out(re.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {re[i].get<double>(), im[i].get<double>()};
  return out;
}

// JSON has no infinities; SNR of a noiseless record is stored as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void write_dataset(std::ostream& out, const std::vector<SampleRecord>& records,
                   const SignalModel& model, const PriorTable& priors) {
  json manifest = {{"kind", "manifest"},
                   {"format", kFormat},
                   {"version", kVersion},
                   {"axis_fingerprint", hex(model.axis().fingerprint())},
                   {"basis_fingerprint", hex(model.basis().fingerprint())},
                   {"theta_order", priors.names},
                   {"count", records.size()}};
  out << manifest.dump() << '\n';
  for (const auto& r : records) {
    json j = {{"seed", r.seed},
              {"scenario", r.scenario},
              {"theta", r.theta},
              {"snr_db", finite_or_null(r.snr_db)},
              {"noise_sigma", r.noise_sigma},
              {"corrupted", r.corrupted},
              {"ood", r.ood},
              {"sweep_parameter", r.sweep_parameter},
              {"sweep_value", r.sweep_value},
              {"spectrum_real", split(r.observed, false)},
              {"spectrum_imag", split(r.observed, true)},
              {"clean_real", split(r.clean, false)},
              {"clean_imag", split(r.clean, true)}};
    out << j.dump() << '\n';
  }
  if (!out) throw FormatError("failed writing dataset");
}

std::vector<SampleRecord> read_dataset(std::istream& in, const SignalModel& model) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("dataset is empty (missing manifest)");
  std::vector<SampleRecord> records;
  try {
    const json manifest = json::parse(line);
    if (manifest.value("kind", "") != "manifest" || manifest.value("format", "") != kFormat)
      throw FormatError("first line is not a dataset manifest");
    if (manifest.at("version").get<int>() != kVersion) throw FormatError("unsupported dataset version");
    if (manifest.at("axis_fingerprint").get<std::string>() != hex(model.axis().fingerprint()))
      throw FormatError("dataset axis fingerprint does not match the configured axis");
    if (manifest.at("basis_fingerprint").get<std::string>() != hex(model.basis().fingerprint()))
      throw FormatError("dataset basis fingerprint does not match the configured basis");
    const auto count = manifest.at("count").get<std::size_t>();
    records.reserve(count);
    const std::size_t len = model.crop_size();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      SampleRecord r;
      r.seed = j.at("seed").get<std::uint64_t>();
      r.scenario = j.at("scenario").get<std::string>();
      r.theta = j.at("theta").get<std::vector<double>>();
      r.snr_db = j.at("snr_db").is_null() ? std::numeric_limits<double>::infinity()
                                          : j.at("snr_db").get<double>();
      r.noise_sigma = j.at("noise_sigma").get<double>();
      r.corrupted = j.at("corrupted").get<bool>();
      r.ood = j.at("ood").get<bool>();
      r.sweep_parameter = j.at("sweep_parameter").get<std::string>();
      r.sweep_value = j.at("sweep_value").get<double>();
      r.observed = join(j.at("spectrum_real"), j.at("spectrum_imag"));
      r.clean = join(j.at("clean_real"), j.at("clean_imag"));
      if (r.theta.size() != model.layout().size() || r.observed.size() != len || r.clean.size() != len)
        throw FormatError("record dimensions do not match the model");
      records.push_back(std::move(r));
    }
    if (records.size() != count) throw FormatError("record count does not match the manifest");
  } catch (const json::exception& e) {
    throw FormatError(std::string("corrupt dataset: ") + e.what());
  }
  return records;
}

void save_dataset(const std::filesystem::path& path, const std::vector<SampleRecord>& records,
                  const SignalModel& model, const PriorTable& priors) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset " + path.string());
  write_dataset(out, records, model, priors);
}

std::vector<SampleRecord> load_dataset(const std::filesystem::path& path, const SignalModel& model) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  return read_dataset(in, model);
}

}  // namespace mrsq
