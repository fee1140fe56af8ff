#include "mrsq/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "mrsq/error.hpp"
#include "mrsq/simd/kernels.hpp"

namespace mrsq::nn {
namespace {

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double elu(double x) noexcept { return x > 0.0 ? x : std::expm1(x); }
double elu_grad(double x) noexcept { return x > 0.0 ? 1.0 : std::exp(x); }

}  // namespace

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw ValidationError("softplus inverse needs a positive value");
  // log(exp(y) - 1), rewritten to stay finite for small and large y.
  return y + std::log(-std::expm1(-y));
}

void OutputHead::apply(std::span<const double> raw, std::span<double> theta) const {
  const std::size_t p = size();
  for (std::size_t i = 0; i < p; ++i) {
    const double r = raw[i];
    if (layout.is_amplitude(i))
      theta[i] = softplus(r);
    else if (i == layout.gamma() || i == layout.sigma_g())
      theta[i] = softplus(r) + 1.0;
    else if (i == layout.phi1())
      theta[i] = phi1_scale * std::tanh(r);
    else
      theta[i] = r;
  }
}

std::vector<double> OutputHead::apply(std::span<const double> raw) const {
  if (raw.size() != size()) throw ValidationError("raw output size does not match the head");
  std::vector<double> theta(size());
  apply(raw, theta);
  return theta;
}

void OutputHead::backward(std::span<const double> raw, std::span<const double> d_theta,
                          std::span<double> d_raw) const {
  const std::size_t p = size();
  for (std::size_t i = 0; i < p; ++i) {
    const double r = raw[i];
    double d = 1.0;
    if (layout.is_amplitude(i) || i == layout.gamma() || i == layout.sigma_g()) {
      d = sigmoid(r);
    } else if (i == layout.phi1()) {
      const double t = std::tanh(r);
      d = phi1_scale * (1.0 - t * t);
    }
    d_raw[i] = d * d_theta[i];
  }
}

std::vector<double> OutputHead::inverse(std::span<const double> theta) const {
  if (theta.size() != size()) throw ValidationError("theta size does not match the head");
  std::vector<double> raw(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const double v = theta[i];
    if (layout.is_amplitude(i)) {
      raw[i] = softplus_inverse(v);
    } else if (i == layout.gamma() || i == layout.sigma_g()) {
      raw[i] = softplus_inverse(v - 1.0);
    } else if (i == layout.phi1()) {
      if (!(std::abs(v) < phi1_scale)) throw ValidationError("first-order phase outside the head range");
      raw[i] = std::atanh(v / phi1_scale);
    } else {
      raw[i] = v;
    }
  }
  return raw;
}

MlpSpec MlpSpec::for_layout(std::size_t input_bins, const ParamLayout& layout,
                            std::vector<std::size_t> hidden) {
  MlpSpec s;
  s.input_bins = input_bins;
  s.widths.clear();
  s.widths.push_back(2 * input_bins);
  s.widths.insert(s.widths.end(), hidden.begin(), hidden.end());
  s.widths.push_back(layout.size());
  s.head.layout = layout;
  return s;
}

void MlpSpec::validate() const {
  if (input_bins == 0) throw ValidationError("network needs at least one input bin");
  if (widths.size() < 2) throw ValidationError("network needs at least one dense layer");
  if (widths.front() != 2 * input_bins) throw ValidationError("first width must be 2 * input_bins");
  if (widths.back() != head.size()) throw ValidationError("last width must equal the theta size");
  for (auto w : widths)
    if (w == 0) throw ValidationError("zero layer width");
  if (!(head.phi1_scale > 0.0)) throw ValidationError("phi1 scale must be positive");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0) || !(bn_eps > 0.0))
    throw ValidationError("invalid batch-norm settings");
}

MlpModel::MlpModel(MlpSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  const std::size_t L = spec_.input_bins;
  std::size_t off = 0;
  blocks_.bn_gamma = off;
  off += L;
  blocks_.bn_beta = off;
  off += L;
  for (std::size_t l = 0; l + 1 < spec_.widths.size(); ++l) {
    blocks_.weight.push_back(off);
    off += spec_.widths[l] * spec_.widths[l + 1];
    blocks_.bias.push_back(off);
    off += spec_.widths[l + 1];
  }
  blocks_.total = off;
  params_.assign(off, 0.0);
  std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(blocks_.bn_gamma), L, 1.0);

  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t l = 0; l + 1 < spec_.widths.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec_.widths[l]));
    const std::size_t nw = spec_.widths[l] * spec_.widths[l + 1];
    for (std::size_t i = 0; i < nw; ++i) params_[blocks_.weight[l] + i] = bound * u(rng);
    for (std::size_t i = 0; i < spec_.widths[l + 1]; ++i) params_[blocks_.bias[l] + i] = bound * u(rng);
  }
  running_mean_.assign(L, 0.0);
  running_var_.assign(L, 1.0);
  adam_.m.assign(off, 0.0);
  adam_.v.assign(off, 0.0);
}

bool MlpModel::same_state(const MlpModel& o) const {
  return spec_ == o.spec_ && params_ == o.params_ && running_mean_ == o.running_mean_ &&
         running_var_ == o.running_var_ && adam_.m == o.adam_.m && adam_.v == o.adam_.v &&
         adam_.step == o.adam_.step;
}

namespace {

void check_inputs(const MlpSpec& spec, std::span<const CVec> batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  for (const auto& y : batch) {
    if (y.size() != spec.input_bins)
      throw ValidationError("spectrum has " + std::to_string(y.size()) + " bins, network expects " +
                            std::to_string(spec.input_bins));
    double n2 = 0.0;
    for (const auto& v : y) n2 += std::norm(v);
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-6) throw ValidationError("network input is not unit-norm");
  }
}

// Dense layers + head, shared by the training and the const prediction path.
void dense_forward(const MlpSpec& spec, const ParamBlocks& blocks, std::span<const double> params,
                   std::vector<double> h, std::size_t batch, ForwardCache* cache,
                   std::vector<double>& theta) {
  const auto& k = simd::active();
  const std::size_t n_layers = spec.widths.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t in = spec.widths[l], out = spec.widths[l + 1];
    const double* W = params.data() + blocks.weight[l];
    const double* bias = params.data() + blocks.bias[l];
    std::vector<double> z(batch * out);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = W + o * in;
      for (std::size_t b = 0; b < batch; ++b) z[b * out + o] = bias[o] + k.dot(row, h.data() + b * in, in);
    }
    const bool last = l + 1 == n_layers;
    std::vector<double> a(z.size());
    if (!last) {
      for (std::size_t i = 0; i < z.size(); ++i) a[i] = elu(z[i]);
    } else {
      a = z;
    }
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->pre.push_back(std::move(z));
    }
    h = std::move(a);
  }
  const std::size_t p = spec.head.size();
  theta.assign(batch * p, 0.0);
  for (std::size_t b = 0; b < batch; ++b)
    spec.head.apply(std::span<const double>(h).subspan(b * p, p), std::span<double>(theta).subspan(b * p, p));
  if (cache) cache->raw = std::move(h);
}

std::vector<double> interleave(std::span<const CVec> batch, std::size_t L) {
  std::vector<double> x(batch.size() * 2 * L);
  for (std::size_t b = 0; b < batch.size(); ++b)
    for (std::size_t j = 0; j < L; ++j) {
      x[b * 2 * L + 2 * j] = batch[b][j].real();
      x[b * 2 * L + 2 * j + 1] = batch[b][j].imag();
    }
  return x;
}

}  // namespace

ForwardResult mlp_forward(MlpModel& model, std::span<const CVec> batch, Mode mode) {
  const MlpSpec& spec = model.spec();
  check_inputs(spec, batch);
  const std::size_t B = batch.size();
  if (mode == Mode::train && B < 2)
    throw ValidationError("train-mode batch statistics need a batch of at least 2 spectra");
  const std::size_t L = spec.input_bins;
  std::vector<double> x = interleave(batch, L);

  std::vector<double> mean(L), var(L);
  if (mode == Mode::train) {
    const double count = static_cast<double>(2 * B);
    for (std::size_t j = 0; j < L; ++j) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b) s += x[b * 2 * L + 2 * j] + x[b * 2 * L + 2 * j + 1];
      const double mu = s / count;
      double ss = 0.0;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < 2; ++c) {
          const double d = x[b * 2 * L + 2 * j + c] - mu;
          ss += d * d;
        }
      mean[j] = mu;
      var[j] = ss / count;
      auto rm = model.running_mean();
      auto rv = model.running_var();
      rm[j] = (1.0 - spec.bn_momentum) * rm[j] + spec.bn_momentum * mu;
      rv[j] = (1.0 - spec.bn_momentum) * rv[j] + spec.bn_momentum * ss / (count - 1.0);
    }
    model.touch();
  } else {
    std::copy(model.running_mean().begin(), model.running_mean().end(), mean.begin());
    std::copy(model.running_var().begin(), model.running_var().end(), var.begin());
  }

  ForwardResult res;
  res.cache.mode = mode;
  res.cache.batch = B;
  res.cache.normalized.resize(x.size());
  std::vector<double> h(x.size());
  const auto params = model.params();
  const auto& blk = model.blocks();
  for (std::size_t j = 0; j < L; ++j) {
    const double inv = 1.0 / std::sqrt(var[j] + spec.bn_eps);
    const double g = params[blk.bn_gamma + j], be = params[blk.bn_beta + j];
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < 2; ++c) {
        const std::size_t i = b * 2 * L + 2 * j + c;
        const double xh = (x[i] - mean[j]) * inv;
        res.cache.normalized[i] = xh;
        h[i] = g * xh + be;
      }
  }
  dense_forward(spec, blk, params, std::move(h), B, &res.cache, res.theta);
  res.cache.model_version = model.version();
  res.cache.valid = true;
  return res;
}

std::vector<double> mlp_predict(const MlpModel& model, std::span<const CVec> batch) {
  const MlpSpec& spec = model.spec();
  check_inputs(spec, batch);
  const std::size_t B = batch.size(), L = spec.input_bins;
  std::vector<double> h = interleave(batch, L);
  const auto params = model.params();
  const auto& blk = model.blocks();
  for (std::size_t j = 0; j < L; ++j) {
    const double inv = 1.0 / std::sqrt(model.running_var()[j] + spec.bn_eps);
    const double mu = model.running_mean()[j];
    const double g = params[blk.bn_gamma + j], be = params[blk.bn_beta + j];
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < 2; ++c) {
        double& v = h[b * 2 * L + 2 * j + c];
        v = g * ((v - mu) * inv) + be;
      }
  }
  std::vector<double> theta;
  dense_forward(spec, blk, params, std::move(h), B, nullptr, theta);
  return theta;
}

std::vector<double> mlp_backward(const MlpModel& model, const ForwardCache& cache,
                                 std::span<const double> d_theta) {
  if (!cache.valid) throw ContractError("backward called without a forward cache");
  if (cache.model_version != model.version())
    throw ContractError("forward cache is stale: the model changed since the forward pass");
  const MlpSpec& spec = model.spec();
  const std::size_t B = cache.batch, P = spec.head.size(), L = spec.input_bins;
  if (d_theta.size() != B * P) throw ValidationError("cotangent size does not match batch x theta");

  const auto& k = simd::active();
  const auto params = model.params();
  const auto& blk = model.blocks();
  std::vector<double> grads(model.param_count(), 0.0);

  std::vector<double> d_out(B * P);
  for (std::size_t b = 0; b < B; ++b)
    spec.head.backward(std::span<const double>(cache.raw).subspan(b * P, P), d_theta.subspan(b * P, P),
                       std::span<double>(d_out).subspan(b * P, P));

  const std::size_t n_layers = spec.widths.size() - 1;
  for (std::size_t l = n_layers; l-- > 0;) {
    const std::size_t in = spec.widths[l], out = spec.widths[l + 1];
    const auto& pre = cache.pre[l];
    const auto& input = cache.inputs[l];
    std::vector<double> dz(d_out);
    if (l + 1 != n_layers)
      for (std::size_t i = 0; i < dz.size(); ++i) dz[i] *= elu_grad(pre[i]);

    const double* W = params.data() + blk.weight[l];
    double* dW = grads.data() + blk.weight[l];
    double* dbias = grads.data() + blk.bias[l];
    std::vector<double> d_in(B * in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = W + o * in;
      double* drow = dW + o * in;
      double sb = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const double g = dz[b * out + o];
        if (g == 0.0) continue;
        sb += g;
        k.axpy(g, input.data() + b * in, drow, in);
        k.axpy(g, row, d_in.data() + b * in, in);
      }
      dbias[o] = sb;
    }
    d_out = std::move(d_in);
  }

  // Batch-norm affine: d gamma = sum d_h * x_hat, d beta = sum d_h.
  for (std::size_t j = 0; j < L; ++j) {
    double dg = 0.0, db = 0.0;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < 2; ++c) {
        const std::size_t i = b * 2 * L + 2 * j + c;
        dg += d_out[i] * cache.normalized[i];
        db += d_out[i];
      }
    grads[blk.bn_gamma + j] = dg;
    grads[blk.bn_beta + j] = db;
  }
  return grads;
}

void adam_update(AdamState& s, std::span<double> params, std::span<const double> grads) {
  if (grads.size() != params.size()) throw ValidationError("gradient size does not match parameters");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i]))
      throw NumericError("non-finite gradient at parameter " + std::to_string(i) + " (Adam step " +
                             std::to_string(s.step + 1) + ")",
                         static_cast<long>(i));
  if (s.m.size() != params.size()) {
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  ++s.step;
  const auto& c = s.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    s.m[i] = c.beta1 * s.m[i] + (1.0 - c.beta1) * g;
    s.v[i] = c.beta2 * s.v[i] + (1.0 - c.beta2) * g * g;
    const double mh = s.m[i] / bc1;
    const double vh = s.v[i] / bc2;
    params[i] -= c.lr * mh / (std::sqrt(vh) + c.eps);
  }
}

void adam_step(MlpModel& model, std::span<const double> grads) {
  adam_update(model.adam(), model.params(), grads);
  model.touch();
}

// ---- checkpoints -----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'M', 'R', 'S', 'Q', 'M', 'L', 'P', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_vec(std::ostream& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("truncated checkpoint");
  return v;
}

std::vector<double> get_vec(std::istream& in, std::size_t limit) {
  const auto n = get<std::uint64_t>(in);
  if (n > limit) throw FormatError("checkpoint block too large");
  std::vector<double> v(n);
  if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double))))
    throw FormatError("truncated checkpoint");
  return v;
}

void put_spec(std::ostream& out, const MlpSpec& s) {
  put<std::uint64_t>(out, s.input_bins);
  put<std::uint64_t>(out, s.widths.size());
  for (auto w : s.widths) put<std::uint64_t>(out, w);
  put<std::uint64_t>(out, s.head.layout.n_metabolites);
  put<std::uint64_t>(out, s.head.layout.baseline_order);
  put<double>(out, s.head.phi1_scale);
  put<double>(out, s.bn_momentum);
  put<double>(out, s.bn_eps);
}

MlpSpec get_spec(std::istream& in) {
  MlpSpec s;
  s.input_bins = get<std::uint64_t>(in);
  const auto nw = get<std::uint64_t>(in);
  if (nw > 64) throw FormatError("implausible layer count in checkpoint");
  s.widths.resize(nw);
  for (auto& w : s.widths) w = get<std::uint64_t>(in);
  s.head.layout.n_metabolites = get<std::uint64_t>(in);
  s.head.layout.baseline_order = get<std::uint64_t>(in);
  s.head.phi1_scale = get<double>(in);
  s.bn_momentum = get<double>(in);
  s.bn_eps = get<double>(in);
  return s;
}

}  // namespace

void save_checkpoint(const MlpModel& model, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put(out, kCheckpointVersion);
  put_spec(out, model.spec());
  put_vec(out, std::vector<double>(model.params().begin(), model.params().end()));
  put_vec(out, std::vector<double>(model.running_mean().begin(), model.running_mean().end()));
  put_vec(out, std::vector<double>(model.running_var().begin(), model.running_var().end()));
  const auto& a = model.adam();
  put(out, a.config.lr);
  put(out, a.config.beta1);
  put(out, a.config.beta2);
  put(out, a.config.eps);
  put<std::uint64_t>(out, a.step);
  put_vec(out, a.m);
  put_vec(out, a.v);
  put<std::uint64_t>(out, model.rng_state().size());
  out.write(model.rng_state().data(), static_cast<std::streamsize>(model.rng_state().size()));
  if (!out) throw FormatError("failed writing checkpoint");
}

MlpModel load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw FormatError("not a network checkpoint");
  if (get<std::uint32_t>(in) != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  MlpSpec spec = get_spec(in);
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("checkpoint holds an invalid network spec: ") + e.what());
  }
  MlpModel model(spec, 0);
  const std::size_t n = model.param_count();
  auto params = get_vec(in, n);
  auto rm = get_vec(in, spec.input_bins);
  auto rv = get_vec(in, spec.input_bins);
  if (params.size() != n || rm.size() != spec.input_bins || rv.size() != spec.input_bins)
    throw FormatError("checkpoint parameter block does not match its spec");
  model.params_ = std::move(params);
  model.running_mean_ = std::move(rm);
  model.running_var_ = std::move(rv);
  auto& a = model.adam_;
  a.config.lr = get<double>(in);
  a.config.beta1 = get<double>(in);
  a.config.beta2 = get<double>(in);
  a.config.eps = get<double>(in);
  a.step = get<std::uint64_t>(in);
  a.m = get_vec(in, n);
  a.v = get_vec(in, n);
  const auto len = get<std::uint64_t>(in);
  if (len > (1u << 20)) throw FormatError("implausible RNG state length");
  model.rng_state_.resize(len);
  if (!in.read(model.rng_state_.data(), static_cast<std::streamsize>(len))) throw FormatError("truncated checkpoint");
  return model;
}

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  save_checkpoint(model, out);
}

MlpModel load_checkpoint(const std::filesystem::path& path, const MlpSpec& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  MlpModel m = load_checkpoint(in);
  if (!(m.spec() == expected)) throw FormatError("checkpoint network spec does not match the configuration");
  return m;
}

}  // namespace mrsq::nn
