#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mrsq/sim/simulator.hpp"

namespace mrsq {

/// Line-delimited JSON. The first line is a manifest carrying the axis and basis
/// fingerprints and the theta component order; each following line is one record.
/// Numbers are written with round-trip precision, so reading back is exact.
void write_dataset(std::ostream& out, const std::vector<SampleRecord>& records,
                   const SignalModel& model, const PriorTable& priors);
/// Throws FormatError on malformed lines or when the fingerprints do not match `model`.
std::vector<SampleRecord> read_dataset(std::istream& in, const SignalModel& model);

void save_dataset(const std::filesystem::path& path, const std::vector<SampleRecord>& records,
                  const SignalModel& model, const PriorTable& priors);
std::vector<SampleRecord> load_dataset(const std::filesystem::path& path, const SignalModel& model);

}  // namespace mrsq
