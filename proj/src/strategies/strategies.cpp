#include "mrsq/strategies/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mrsq/error.hpp"
#include "mrsq/parallel.hpp"

namespace mrsq::strategies {
namespace {

using nn::Mode;

nn::OutputHead head_for(const ParamLayout& layout, double phi1_scale) {
  nn::OutputHead h;
  h.layout = layout;
  h.phi1_scale = phi1_scale;
  return h;
}

std::vector<CVec> normalize_all(std::span<const CVec> ys, std::vector<NormContext>* ctx = nullptr) {
  std::vector<CVec> out;
  out.reserve(ys.size());
  if (ctx) ctx->clear();
  for (const auto& y : ys) {
    auto n = normalize(y);
    out.push_back(std::move(n.y));
    if (ctx) ctx->push_back(n.ctx);
  }
  return out;
}

std::span<const double> row(const std::vector<double>& flat, std::size_t b, std::size_t p) {
  return std::span<const double>(flat).subspan(b * p, p);
}

Mode adapt_mode(BnMode bn, std::size_t batch) {
  return bn == BnMode::batch && batch >= 2 ? Mode::train : Mode::eval;
}

// One residual-loss Adam step on a batch of unit-norm spectra; returns the mean loss.
double residual_step(nn::MlpModel& net, const SignalModel& model, std::span<const CVec> batch, BnMode bn) {
  const std::size_t B = batch.size();
  const std::size_t P = model.layout().size();
  auto fr = nn::mlp_forward(net, batch, adapt_mode(bn, B));
  std::vector<double> d(B * P);
  double loss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const auto lg = model.residual_gradient(row(fr.theta, b, P), batch[b]);
    loss += lg.loss / static_cast<double>(B);
    for (std::size_t i = 0; i < P; ++i) d[b * P + i] = lg.grad[i] / static_cast<double>(B);
  }
  const auto grads = nn::mlp_backward(net, fr.cache, d);
  nn::adam_step(net, grads);
  return loss;
}

void fresh_adam(nn::MlpModel& net, double lr) {
  auto& a = net.adam();
  a.config.lr = lr;
  a.step = 0;
  std::fill(a.m.begin(), a.m.end(), 0.0);
  std::fill(a.v.begin(), a.v.end(), 0.0);
}

std::vector<double> predict_unit(const nn::MlpModel& net, const CVec& y_unit, const NormContext& ctx) {
  const auto th = nn::mlp_predict(net, std::span<const CVec>(&y_unit, 1));
  return denormalize(th, ctx, net.spec().head.layout);
}

}  // namespace

Normalized normalize(std::span<const cplx> y) {
  double s = 0.0;
  for (const auto& v : y) s += std::norm(v);
  const double n = std::sqrt(s);
  if (!(n > 0.0) || !std::isfinite(n)) throw ValidationError("cannot normalize a zero or non-finite spectrum");
  Normalized out;
  out.ctx.norm = n;
  out.y.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out.y[i] = y[i] / n;
  return out;
}

std::vector<double> denormalize(std::span<const double> theta, const NormContext& ctx,
                                const ParamLayout& layout) {
  if (theta.size() != layout.size()) throw ValidationError("theta size does not match the layout");
  std::vector<double> out(theta.begin(), theta.end());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (layout.scales_with_intensity(i)) out[i] *= ctx.norm;
  return out;
}

// ---- model-based fitting ---------------------------------------------------

std::vector<double> default_fit_init(const PriorTable& priors) {
  const auto& L = priors.layout;
  std::vector<double> th(L.size(), 0.0);
  for (std::size_t m = 0; m < L.n_metabolites; ++m) th[m] = priors.theta[m].mid();
  th[L.gamma()] = 10.0;
  th[L.sigma_g()] = 10.0;
  return th;
}

FitResult fit_model_based(const SignalModel& model, std::span<const cplx> y,
                          std::span<const double> init, const FitOptions& opts) {
  const ParamLayout& L = model.layout();
  if (init.size() != L.size()) throw ValidationError("fit init does not match the parameter layout");
  if (!(opts.lr > 0.0)) throw ValidationError("fit learning rate must be positive");
  const auto n = normalize(y);
  const auto head = head_for(L, opts.phi1_scale);

  std::vector<double> start(init.begin(), init.end());
  for (std::size_t i = 0; i < start.size(); ++i) {
    if (L.scales_with_intensity(i)) start[i] /= n.ctx.norm;
    if (L.is_baseline(i) && !opts.fit_baseline) start[i] = 0.0;
  }
  std::vector<double> raw = head.inverse(start);

  nn::AdamState adam;
  adam.config.lr = opts.lr;
  FitResult res;
  res.loss = std::numeric_limits<double>::infinity();
  std::vector<double> theta(L.size()), d_raw(L.size()), best;
  res.best_loss_trace.reserve(opts.epochs + 1);

  auto trace_tail = [&] {
    std::ostringstream os;
    const std::size_t k = res.best_loss_trace.size();
    os << " (best-so-far loss over the last epochs:";
    for (std::size_t i = k > 5 ? k - 5 : 0; i < k; ++i) os << ' ' << res.best_loss_trace[i];
    os << ')';
    return os.str();
  };

  for (std::size_t e = 0; e <= opts.epochs; ++e) {
    head.apply(raw, theta);
    LossAndGradient lg;
    try {
      lg = model.residual_gradient(theta, n.y);
    } catch (const NumericError& err) {
      throw NumericError("model-based fit diverged at epoch " + std::to_string(e) + ": " + err.what() +
                             trace_tail(),
                         err.index());
    }
    if (!std::isfinite(lg.loss))
      throw NumericError("model-based fit diverged at epoch " + std::to_string(e) + trace_tail(), -1);
    if (lg.loss < res.loss) {
      res.loss = lg.loss;
      res.best_epoch = e;
      best = theta;
    }
    res.best_loss_trace.push_back(res.loss);
    if (e == opts.epochs) break;
    head.backward(raw, lg.grad, d_raw);
    if (!opts.fit_baseline)
      for (std::size_t i = 0; i < d_raw.size(); ++i)
        if (L.is_baseline(i)) d_raw[i] = 0.0;
    nn::adam_update(adam, raw, d_raw);
  }
  res.theta = denormalize(best, n.ctx, L);
  return res;
}

// ---- training --------------------------------------------------------------

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("training batch size must be >= 2");
  if (validate_every == 0 || val_size == 0) throw ConfigError("validation cadence and size must be positive");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  for (auto h : hidden)
    if (h == 0) throw ConfigError("hidden layer width must be positive");
}

double scaled_mae(std::span<const double> theta_hat, std::span<const double> theta,
                  std::span<const Interval> ranges, std::span<double> d_theta_hat) {
  const std::size_t P = ranges.size();
  if (P == 0 || theta.size() != theta_hat.size() || theta.size() % P != 0)
    throw ValidationError("scaled MAE shapes do not match");
  const std::size_t B = theta.size() / P;
  std::size_t kept = 0;
  for (const auto& r : ranges) kept += r.width() > 0.0;
  if (kept == 0) throw ValidationError("all prior ranges are degenerate");
  const double denom = static_cast<double>(B * kept);
  if (!d_theta_hat.empty()) std::fill(d_theta_hat.begin(), d_theta_hat.end(), 0.0);
  double s = 0.0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < P; ++i) {
      const double w = ranges[i].width();
      if (!(w > 0.0)) continue;
      const double diff = (theta_hat[b * P + i] - theta[b * P + i]) / w;
      s += std::abs(diff);
      if (!d_theta_hat.empty() && diff != 0.0) d_theta_hat[b * P + i] = (diff > 0.0 ? 1.0 : -1.0) / (w * denom);
    }
  return s / denom;
}

double validation_loss(Objective objective, const nn::MlpModel& net, const SignalModel& model,
                       const PriorTable& priors, const std::vector<SampleRecord>& records) {
  std::vector<CVec> ys;
  ys.reserve(records.size());
  for (const auto& r : records) ys.push_back(r.observed);
  if (objective == Objective::self_supervised) return mean_residual(net, model, ys);
  const auto pred = predict_batch(net, ys);
  double s = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) s += scaled_mae(pred[i], records[i].theta, priors.theta);
  return s / static_cast<double>(records.size());
}

TrainResult train_network(Objective objective, const SignalModel& model, const PriorTable& priors,
                          const Scenario& scenario, const TrainConfig& cfg, const nn::MlpModel* init) {
  cfg.validate();
  if (scenario.random_walk) throw ConfigError("random-walk corruption is evaluation-only");
  priors.validate();
  const ParamLayout& L = model.layout();
  if (!(priors.layout == L)) throw ConfigError("prior table does not match the signal model");

  auto spec = nn::MlpSpec::for_layout(model.crop_size(), L, cfg.hidden);
  spec.head.phi1_scale = cfg.phi1_scale;
  nn::MlpModel net = init ? *init : nn::MlpModel(spec, derive_seed(cfg.seed, SeedStream::init, 0));
  if (!(net.spec() == spec)) throw ConfigError("initial network does not match the training spec");
  fresh_adam(net, cfg.lr);

  TrainResult res;
  for (std::size_t i = 0; i < L.size(); ++i)
    if (!(priors.theta[i].width() > 0.0)) res.dropped_components.push_back(priors.names[i]);

  const auto val = generate_dataset(cfg.val_size, priors, scenario, model, cfg.seed, SeedStream::validation, 0,
                                    cfg.threads);
  const std::size_t B = cfg.batch_size, P = L.size();

  auto validate_now = [&](std::size_t step) {
    const double v = validation_loss(objective, net, model, priors, val);
    if (!std::isfinite(v)) throw NumericError("validation loss is not finite at step " + std::to_string(step), -1);
    res.history.push_back({step, v});
    if (cfg.on_validation) cfg.on_validation(step, v);
    if (res.history.size() == 1 || v < res.best_loss) {
      res.best_loss = v;
      res.best_step = step;
      res.model = net;
    }
  };

  std::vector<SampleRecord> batch(B);
  std::vector<CVec> ys(B);
  std::vector<NormContext> ctx(B);
  std::vector<double> d(B * P), truth(B * P), den(B * P), d_den(B * P);
  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    parallel_for(B, cfg.threads, [&](std::size_t b) {
      const std::size_t index = cfg.pool_size ? (step * B + b) % cfg.pool_size : step * B + b;
      batch[b] = simulate_record(model, priors, scenario, derive_seed(cfg.seed, SeedStream::train, index));
      auto n = normalize(batch[b].observed);
      ys[b] = std::move(n.y);
      ctx[b] = n.ctx;
    });
    auto fr = nn::mlp_forward(net, ys, Mode::train);
    if (objective == Objective::supervised) {
      for (std::size_t b = 0; b < B; ++b) {
        const auto dn = denormalize(row(fr.theta, b, P), ctx[b], L);
        std::copy(dn.begin(), dn.end(), den.begin() + static_cast<std::ptrdiff_t>(b * P));
        std::copy(batch[b].theta.begin(), batch[b].theta.end(), truth.begin() + static_cast<std::ptrdiff_t>(b * P));
      }
      scaled_mae(den, truth, priors.theta, d_den);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < P; ++i)
          d[b * P + i] = d_den[b * P + i] * (L.scales_with_intensity(i) ? ctx[b].norm : 1.0);
    } else {
      for (std::size_t b = 0; b < B; ++b) {
        const auto lg = model.residual_gradient(row(fr.theta, b, P), ys[b]);
        for (std::size_t i = 0; i < P; ++i) d[b * P + i] = lg.grad[i] / static_cast<double>(B);
      }
    }
    const auto grads = nn::mlp_backward(net, fr.cache, d);
    nn::adam_step(net, grads);
    net.rng_state() = "train_step=" + std::to_string(step + 1);
    if ((step + 1) % cfg.validate_every == 0 || step + 1 == cfg.max_steps) validate_now(step + 1);
  }
  if (res.history.empty()) validate_now(0);
  return res;
}

// ---- inference -------------------------------------------------------------

std::vector<double> predict(const nn::MlpModel& net, std::span<const cplx> y) {
  const auto n = normalize(y);
  return predict_unit(net, n.y, n.ctx);
}

std::vector<std::vector<double>> predict_batch(const nn::MlpModel& net, std::span<const CVec> ys,
                                               std::size_t chunk) {
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t P = net.spec().head.size();
  std::vector<NormContext> ctx;
  const auto unit = normalize_all(ys, &ctx);
  std::vector<std::vector<double>> out;
  out.reserve(ys.size());
  for (std::size_t s = 0; s < unit.size(); s += chunk) {
    const std::size_t e = std::min(unit.size(), s + chunk);
    const auto th = nn::mlp_predict(net, std::span<const CVec>(unit).subspan(s, e - s));
    for (std::size_t b = 0; b < e - s; ++b) out.push_back(denormalize(row(th, b, P), ctx[s + b], net.spec().head.layout));
  }
  return out;
}

double mean_residual(const nn::MlpModel& net, const SignalModel& model, std::span<const CVec> ys) {
  if (ys.empty()) throw ValidationError("no spectra");
  const auto unit = normalize_all(ys);
  const std::size_t P = model.layout().size();
  double s = 0.0;
  for (std::size_t c = 0; c < unit.size(); c += 256) {
    const std::size_t e = std::min(unit.size(), c + 256);
    const auto th = nn::mlp_predict(net, std::span<const CVec>(unit).subspan(c, e - c));
    for (std::size_t b = 0; b < e - c; ++b) s += model.residual(row(th, b, P), unit[c + b]);
  }
  return s / static_cast<double>(unit.size());
}

// ---- test-time adaptation --------------------------------------------------

void AdaptConfig::validate() const {
  if (batch_size == 0) throw ConfigError("adaptation batch size must be positive");
  if (!(lr > 0.0)) throw ConfigError("adaptation learning rate must be positive");
}

InstanceResult tta_instance(const nn::MlpModel& init, const SignalModel& model, std::span<const cplx> y,
                            const AdaptConfig& cfg) {
  cfg.validate();
  const auto n = normalize(y);
  const std::size_t P = model.layout().size();
  InstanceResult res;
  nn::MlpModel net = init;
  fresh_adam(net, cfg.lr);
  const std::span<const CVec> one(&n.y, 1);
  res.residual_before = model.residual(nn::mlp_predict(net, one), n.y);
  for (std::size_t j = 0; j < cfg.instance_steps; ++j) residual_step(net, model, one, cfg.bn);
  const auto th = nn::mlp_predict(net, one);
  res.residual_after = model.residual(std::span<const double>(th).first(P), n.y);
  res.theta = denormalize(th, n.ctx, model.layout());
  return res;
}

OnlineResult tta_online(const nn::MlpModel& init, const SignalModel& model, std::span<const CVec> stream,
                        const AdaptConfig& cfg) {
  cfg.validate();
  OnlineResult res;
  res.model = init;
  fresh_adam(res.model, cfg.lr);
  std::vector<NormContext> ctx;
  const auto unit = normalize_all(stream, &ctx);
  const std::size_t P = model.layout().size();
  auto emit = [&](std::size_t s, std::size_t e) {
    const auto th = nn::mlp_predict(res.model, std::span<const CVec>(unit).subspan(s, e - s));
    for (std::size_t b = 0; b < e - s; ++b) res.theta.push_back(denormalize(row(th, b, P), ctx[s + b], model.layout()));
  };
  for (std::size_t s = 0; s < unit.size(); s += cfg.batch_size) {
    const std::size_t e = std::min(unit.size(), s + cfg.batch_size);
    if (cfg.online_predict_before_update) emit(s, e);
    res.batch_loss.push_back(residual_step(res.model, model, std::span<const CVec>(unit).subspan(s, e - s), cfg.bn));
    if (!cfg.online_predict_before_update) emit(s, e);
  }
  return res;
}

DomainResult tta_domain(const nn::MlpModel& init, const SignalModel& model, std::span<const CVec> dataset,
                        const AdaptConfig& cfg) {
  cfg.validate();
  DomainResult res;
  res.model = init;
  fresh_adam(res.model, cfg.lr);
  const auto unit = normalize_all(dataset);
  std::vector<std::size_t> order(unit.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, SeedStream::adaptation, 0));
  std::vector<CVec> batch;
  for (std::size_t ep = 0; ep < cfg.domain_epochs; ++ep) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    for (std::size_t s = 0; s < order.size(); s += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), s + cfg.batch_size);
      batch.clear();
      for (std::size_t i = s; i < e; ++i) batch.push_back(unit[order[i]]);
      sum += residual_step(res.model, model, batch, cfg.bn) * static_cast<double>(e - s);
    }
    res.epoch_loss.push_back(sum / static_cast<double>(std::max<std::size_t>(order.size(), 1)));
  }
  if (!dataset.empty()) res.theta = predict_batch(res.model, dataset);
  return res;
}

}  // namespace mrsq::strategies
