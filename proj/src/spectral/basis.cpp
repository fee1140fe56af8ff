#include "mrsq/spectral/basis.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mrsq/error.hpp"
#include "mrsq/hash.hpp"

namespace mrsq {

using nlohmann::json;

AxisParams BasisDescription::axis_params(std::optional<PpmInterval> crop) const {
  return AxisParams{n_points, bandwidth_hz, field_mhz, center_ppm, crop};
}

BasisSet::BasisSet(std::vector<BasisEntry> entries, const SpectralAxis& axis)
    : entries_(std::move(entries)), axis_(axis) {
  for (std::size_t m = 0; m < entries_.size(); ++m) {
    if (entries_[m].time.size() != axis_.n_points())
      throw ValidationError("basis entry '" + entries_[m].name + "' has the wrong length");
    if (entries_[m].is_mm) {
      if (mm_index_) throw ValidationError("more than one macromolecule entry");
      mm_index_ = m;
    }
  }
}

std::vector<std::string> BasisSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

std::uint64_t BasisSet::fingerprint() const noexcept {
  Fnv1a h;
  h.str("mrsq-basis-v1");
  h.u64(axis_.fingerprint());
  for (const auto& e : entries_) {
    h.str(e.name);
    h.u64(e.is_mm ? 1 : 0);
    for (const auto& v : e.time) {
      h.f64(v.real());
      h.f64(v.imag());
    }
  }
  return h.value();
}

BasisSet synthesize_basis(const BasisDescription& desc, const SpectralAxis& axis) {
  if (desc.metabolites.empty()) throw ValidationError("basis description has no metabolites");
  if (axis.n_points() != desc.n_points || axis.bandwidth_hz() != desc.bandwidth_hz ||
      axis.field_mhz() != desc.field_mhz || axis.center_ppm() != desc.center_ppm)
    throw ValidationError("axis does not match the basis acquisition parameters");

  const double ppm_lo = axis.ppm().front();
  const double ppm_hi = axis.ppm().back();
  std::set<std::string> seen;
  std::vector<BasisEntry> entries;
  entries.reserve(desc.metabolites.size());
  const auto t = axis.time_s();

  for (const auto& met : desc.metabolites) {
    if (met.name.empty()) throw ValidationError("metabolite with empty name");
    if (!seen.insert(met.name).second) throw ValidationError("duplicate metabolite '" + met.name + "'");
    if (met.peaks.empty()) throw ValidationError("metabolite '" + met.name + "' has no peaks");

    BasisEntry entry{met.name, met.is_mm, CVec(axis.n_points(), cplx{0.0, 0.0})};
    for (const auto& peak : met.peaks) {
      if (!(peak.ppm >= ppm_lo && peak.ppm <= ppm_hi))
        throw ValidationError("peak of '" + met.name + "' at " + std::to_string(peak.ppm) +
                              " ppm is outside the representable range");
      if (!std::isfinite(peak.amplitude) || !(peak.intrinsic_gauss_per_s >= 0.0))
        throw ValidationError("invalid peak parameters for '" + met.name + "'");
      const double delta_hz = (peak.ppm - desc.center_ppm) * desc.field_mhz;
      const double omega = 2.0 * std::numbers::pi * delta_hz;
      const double g = peak.intrinsic_gauss_per_s;
      for (std::size_t k = 0; k < t.size(); ++k) {
        const double env = peak.amplitude * std::exp(-(g * t[k]) * (g * t[k]));
        entry.time[k] += std::polar(env, omega * t[k]);
      }
    }
    entries.push_back(std::move(entry));
  }
  return BasisSet(std::move(entries), axis);
}

BasisDescription parse_basis_description(const std::string& json_text) {
  BasisDescription desc;
  try {
    const json doc = json::parse(json_text);
    const json& ax = doc.at("axis");
    desc.n_points = ax.at("n_points").get<std::size_t>();
    desc.bandwidth_hz = ax.at("bandwidth_hz").get<double>();
    desc.field_mhz = ax.at("field_mhz").get<double>();
    desc.center_ppm = ax.at("center_ppm").get<double>();
    for (const json& jm : doc.at("metabolites")) {
      MetaboliteSpec met;
      met.name = jm.at("name").get<std::string>();
      met.is_mm = jm.value("is_mm", false);
      for (const json& jp : jm.at("peaks")) {
        BasisPeak p;
        p.ppm = jp.at("ppm").get<double>();
        p.amplitude = jp.value("amplitude", 1.0);
        p.intrinsic_gauss_per_s = jp.value("intrinsic_gauss_per_s", 0.0);
        met.peaks.push_back(p);
      }
      desc.metabolites.push_back(std::move(met));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed basis file: ") + e.what());
  }

  std::set<std::string> names;
  for (const auto& m : desc.metabolites) {
    if (!names.insert(m.name).second) throw ValidationError("duplicate metabolite '" + m.name + "'");
    if (m.peaks.empty()) throw ValidationError("metabolite '" + m.name + "' has no peaks");
  }
  if (desc.metabolites.empty()) throw ValidationError("basis description has no metabolites");
  return desc;
}

std::string dump_basis_description(const BasisDescription& desc) {
  json doc;
  doc["axis"] = {{"n_points", desc.n_points},
                 {"bandwidth_hz", desc.bandwidth_hz},
                 {"field_mhz", desc.field_mhz},
                 {"center_ppm", desc.center_ppm}};
  json mets = json::array();
  for (const auto& m : desc.metabolites) {
    json peaks = json::array();
    for (const auto& p : m.peaks)
      peaks.push_back({{"ppm", p.ppm},
                       {"amplitude", p.amplitude},
                       {"intrinsic_gauss_per_s", p.intrinsic_gauss_per_s}});
    mets.push_back({{"name", m.name}, {"is_mm", m.is_mm}, {"peaks", peaks}});
  }
  doc["metabolites"] = mets;
  return doc.dump(2);
}

BasisDescription load_basis_description(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open basis file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_basis_description(ss.str());
}

void save_basis_description(const BasisDescription& desc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write basis file " + path.string());
  out << dump_basis_description(desc) << '\n';
}

}  // namespace mrsq
