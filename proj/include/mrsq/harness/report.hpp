#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mrsq/harness/experiment.hpp"

namespace mrsq::harness {

struct SummaryRow {
  std::string strategy;
  std::string scenario;
  std::size_t n = 0;
  metrics::MetricSummary mae;
  metrics::MetricSummary mosae;
  double ms_per_sample = 0.0;  ///< mean over records
};

struct CurvePoint {
  std::string strategy;
  std::string parameter;
  double value = 0.0;
  bool ood = false;
  metrics::MetricSummary mosae;
};

struct RegressionRow {
  std::string strategy;
  std::string scenario;
  std::string metabolite;
  bool valid = false;  ///< false when the predictions have zero variance
  metrics::RegressionStats stats;
};

/// One row per (strategy, scenario) in order of first appearance. Depends only on the records.
std::vector<SummaryRow> summarize(const std::vector<EvalRecord>& records);
/// One point per (strategy, parameter, value) for sweep records.
std::vector<CurvePoint> sweep_curves(const std::vector<EvalRecord>& records);

/// Truth-on-prediction regression per (strategy, scenario, metabolite).
std::vector<RegressionRow> regression_table(const std::vector<EvalRecord>& records,
                                            const std::vector<std::string>& metabolite_names);

/// Numbers are written with 17 significant digits so reading back is exact.
void write_records(std::ostream& out, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_records(std::istream& in);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_curves(std::ostream& out, const std::vector<CurvePoint>& points);
void write_regression(std::ostream& out, const std::vector<RegressionRow>& rows);
void write_timing(std::ostream& out, const std::vector<TimingResult>& timing);

void save_records(const std::filesystem::path& path, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> load_records(const std::filesystem::path& path);

/// Config, seeds and software version next to a result table.
void write_sidecar(const std::filesystem::path& path, const ExperimentConfig& cfg, const std::string& table);

/// Text table for terminals.
std::string format_summary(const std::vector<SummaryRow>& rows);

}  // namespace mrsq::harness
