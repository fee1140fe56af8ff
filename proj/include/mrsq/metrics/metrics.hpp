#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace mrsq::metrics {

/// Mean absolute amplitude error over the metabolites, the macromolecule entry excluded.
double mae(std::span<const double> pred, std::span<const double> truth, std::optional<std::size_t> mm_index);

struct ScaleFit {
  double w = 1.0;
  double objective = 0.0;  ///< sum over included metabolites of |w pred - truth|
};

/// argmin_{w >= 0} sum_{m != MM} |w pred_m - truth_m|: the weighted median of truth/pred with
/// weights pred over entries with pred > 0 (lower median on ties). Throws ValidationError when
/// every included prediction is zero or a prediction is negative.
ScaleFit optimal_scale(std::span<const double> pred, std::span<const double> truth,
                       std::optional<std::size_t> mm_index);

enum class MosaeNorm { all_entries, metabolites_only };

/// sum_{m != MM} |w_opt pred_m - truth_m| divided by M (all_entries) or by M - 1.
double mosae(std::span<const double> pred, std::span<const double> truth, std::optional<std::size_t> mm_index,
             MosaeNorm norm = MosaeNorm::all_entries);

struct RegressionStats {
  double alpha = 0.0;  ///< slope of truth on prediction
  double beta = 0.0;   ///< intercept
  double r2 = 0.0;
  double rmse = 0.0;   ///< sqrt(mean (pred - truth)^2)
};

/// Least squares truth = alpha pred + beta. Throws ValidationError for fewer than two
/// points or zero variance in the predictions.
RegressionStats regression_stats(std::span<const double> pred, std::span<const double> truth);

struct MetricSummary {
  double mean = 0.0;
  double standard_error = 0.0;  ///< s / sqrt(n) with the n-1 variance; 0 for n = 1
  std::size_t n = 0;
};

MetricSummary aggregate(std::span<const double> values);

}  // namespace mrsq::metrics
