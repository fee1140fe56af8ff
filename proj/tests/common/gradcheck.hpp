#pragma once

// Central finite differences against analytic gradients.
//
// Five-point stencil (f(-2h) - 8f(-h) + 8f(h) - f(2h)) / 12h. Its truncation error is O(h^4),
// which allows a step large enough that rounding in f (of order eps * |f| / h) stays far below
// the derivatives being checked, even for coordinates whose derivative is 1e-9 of the largest.

#include <algorithm>
#include <cmath>
#include <vector>

#include "mrsq/model/signal_model.hpp"
#include "mrsq/nn/mlp.hpp"

namespace mrsq::testing {

template <class F>
double stencil(F&& f, double h) {
  return (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h);
}

struct GradCheck {
  double max_rel = 0.0;   ///< worst per-coordinate relative error
  std::size_t worst = 0;  ///< its coordinate
};

/// Per-coordinate error |g - fd| / max(|g|, |fd|, floor), where floor = 1e-9 * max|g| guards
/// coordinates whose derivative is zero up to rounding. Step h_i = 1e-4 * scale_i.
inline GradCheck check_residual_gradient(const SignalModel& model, std::span<const double> theta,
                                         std::span<const cplx> y, std::span<const double> scale) {
  const auto lg = model.residual_gradient(theta, y);
  double gmax = 0.0;
  for (double g : lg.grad) gmax = std::max(gmax, std::abs(g));
  GradCheck out;
  std::vector<double> t(theta.begin(), theta.end());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double h = 1e-4 * scale[i];
    const double keep = t[i];
    auto f = [&](double step) {
      t[i] = keep + step;
      const double v = model.residual(t, y);
      t[i] = keep;
      return v;
    };
    const double fd = stencil(f, h);
    const double denom = std::max({std::abs(lg.grad[i]), std::abs(fd), 1e-9 * gmax});
    const double rel = denom == 0.0 ? 0.0 : std::abs(lg.grad[i] - fd) / denom;
    if (rel > out.max_rel) {
      out.max_rel = rel;
      out.worst = i;
    }
  }
  return out;
}

/// Network gradient of loss = sum_b,i cot[b,i] * theta_hat[b,i] against central differences
/// over every parameter (step 1e-4). The forward pass is repeated in `mode` for each probe,
/// so train mode exercises the batch-statistics path.
inline GradCheck check_mlp_gradient(const nn::MlpModel& net, std::span<const CVec> batch, nn::Mode mode,
                                    std::span<const double> cot) {
  auto loss = [&](nn::MlpModel& m) {
    const auto r = nn::mlp_forward(m, batch, mode);
    double s = 0.0;
    for (std::size_t k = 0; k < r.theta.size(); ++k) s += cot[k] * r.theta[k];
    return s;
  };
  nn::MlpModel work = net;
  const auto fwd = nn::mlp_forward(work, batch, mode);
  const auto grad = nn::mlp_backward(work, fwd.cache, cot);
  double gmax = 0.0;
  for (double g : grad) gmax = std::max(gmax, std::abs(g));
  GradCheck out;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    auto f = [&](double step) {
      nn::MlpModel p = net;
      p.params()[i] += step;
      return loss(p);
    };
    const double fd = stencil(f, 1e-4);
    const double denom = std::max({std::abs(grad[i]), std::abs(fd), 1e-9 * gmax});
    const double rel = denom == 0.0 ? 0.0 : std::abs(grad[i] - fd) / denom;
    if (rel > out.max_rel) {
      out.max_rel = rel;
      out.worst = i;
    }
  }
  return out;
}

}  // namespace mrsq::testing
