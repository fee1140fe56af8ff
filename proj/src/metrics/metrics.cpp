#include "mrsq/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mrsq/error.hpp"

namespace mrsq::metrics {
namespace {

std::size_t check(std::span<const double> pred, std::span<const double> truth, std::optional<std::size_t> mm) {
  if (pred.size() != truth.size()) throw ValidationError("prediction and truth lengths differ");
  if (pred.empty()) throw ValidationError("no amplitudes");
  if (mm && *mm >= pred.size()) throw ValidationError("macromolecule index out of range");
  const std::size_t count = pred.size() - (mm ? 1 : 0);
  if (count == 0) throw ValidationError("no metabolites besides the macromolecule entry");
  return count;
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth, std::optional<std::size_t> mm_index) {
  const std::size_t count = check(pred, truth, mm_index);
  double s = 0.0;
  for (std::size_t m = 0; m < pred.size(); ++m)
    if (!mm_index || m != *mm_index) s += std::abs(pred[m] - truth[m]);
  return s / static_cast<double>(count);
}

ScaleFit optimal_scale(std::span<const double> pred, std::span<const double> truth,
                       std::optional<std::size_t> mm_index) {
  check(pred, truth, mm_index);
  struct Item {
    double ratio, weight;
  };
  std::vector<Item> items;
  double total = 0.0;
  for (std::size_t m = 0; m < pred.size(); ++m) {
    if (mm_index && m == *mm_index) continue;
    if (pred[m] < 0.0) throw ValidationError("negative predicted amplitude");
    if (pred[m] > 0.0) {
      items.push_back({truth[m] / pred[m], pred[m]});
      total += pred[m];
    }
  }
  if (items.empty()) throw ValidationError("all predicted amplitudes are zero");
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.ratio < b.ratio; });
  double acc = 0.0;
  ScaleFit fit;
  fit.w = items.back().ratio;
  for (const auto& it : items) {
    acc += it.weight;
    if (acc >= 0.5 * total) {
      fit.w = it.ratio;
      break;
    }
  }
  fit.w = std::max(fit.w, 0.0);
  for (std::size_t m = 0; m < pred.size(); ++m)
    if (!mm_index || m != *mm_index) fit.objective += std::abs(fit.w * pred[m] - truth[m]);
  return fit;
}

double mosae(std::span<const double> pred, std::span<const double> truth, std::optional<std::size_t> mm_index,
             MosaeNorm norm) {
  const std::size_t count = check(pred, truth, mm_index);
  const auto fit = optimal_scale(pred, truth, mm_index);
  const double d = norm == MosaeNorm::all_entries ? static_cast<double>(pred.size()) : static_cast<double>(count);
  return fit.objective / d;
}

RegressionStats regression_stats(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw ValidationError("prediction and truth lengths differ");
  const std::size_t n = pred.size();
  if (n < 2) throw ValidationError("regression needs at least two points");
  const double N = static_cast<double>(n);
  const double mx = std::accumulate(pred.begin(), pred.end(), 0.0) / N;
  const double my = std::accumulate(truth.begin(), truth.end(), 0.0) / N;
  double sxx = 0.0, sxy = 0.0, syy = 0.0, se = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = pred[i] - mx, dy = truth[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
    se += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  }
  if (!(sxx > 0.0)) throw ValidationError("predictions have zero variance; slope undefined");
  RegressionStats r;
  r.alpha = sxy / sxx;
  r.beta = my - r.alpha * mx;
  if (syy > 0.0) {
    double sres = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = truth[i] - (r.alpha * pred[i] + r.beta);
      sres += e * e;
    }
    r.r2 = 1.0 - sres / syy;
  } else {
    r.r2 = 1.0;
  }
  r.rmse = std::sqrt(se / N);
  return r;
}

MetricSummary aggregate(std::span<const double> values) {
  if (values.empty()) throw ValidationError("cannot aggregate an empty list");
  MetricSummary s;
  s.n = values.size();
  const double N = static_cast<double>(s.n);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / N;
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.standard_error = std::sqrt(ss / (N - 1.0)) / std::sqrt(N);
  }
  return s;
}

}  // namespace mrsq::metrics
