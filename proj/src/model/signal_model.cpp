#include "mrsq/model/signal_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mrsq/error.hpp"
#include "mrsq/simd/kernels.hpp"
#include "mrsq/spectral/fft.hpp"

namespace mrsq {

struct SignalModel::Work {
  std::vector<double> damp;      // interleaved D(t)
  std::vector<double> combined;  // interleaved z(t) = sum_m a_m s_m(t)
  std::vector<double> damped;    // interleaved z(t) D(t)
  CVec spectrum;                 // raw DFT bins of the damped signal

  explicit Work(std::size_t n) : damp(2 * n), combined(2 * n), damped(2 * n), spectrum(n) {}
};

namespace {

const double* as_doubles(const CVec& v) { return reinterpret_cast<const double*>(v.data()); }

}  // namespace

void RandomWalkSpec::validate() const {
  if (!(min_bound <= 0.0 && 0.0 <= max_bound))
    throw ValidationError("random walk bounds must satisfy min <= 0 <= max");
  if (!(step_size >= 0.0)) throw ValidationError("random walk step size must be >= 0");
  if (!(smoothing >= 1.0)) throw ValidationError("random walk smoothing must be >= 1");
}

SignalModel::SignalModel(BasisSet basis, std::size_t baseline_order)
    : basis_(std::move(basis)), layout_{basis_.size(), baseline_order} {
  const auto& ax = basis_.axis();
  const std::size_t n = ax.n_points();
  basis_interleaved_.reserve(basis_.size());
  for (const auto& e : basis_.entries()) {
    std::vector<double> v(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
      v[2 * k] = e.time[k].real();
      v[2 * k + 1] = e.time[k].imag();
    }
    basis_interleaved_.push_back(std::move(v));
  }
  const std::size_t len = ax.crop_size();
  crop_bins_.resize(len);
  for (std::size_t j = 0; j < len; ++j) crop_bins_[j] = ax.dft_bin(ax.crop_begin() + j);
  crop_hz_.assign(ax.crop_hz().begin(), ax.crop_hz().end());
  const auto u = ax.crop_unit();
  unit_powers_.assign(baseline_order + 1, std::vector<double>(len, 1.0));
  for (std::size_t k = 1; k <= baseline_order; ++k)
    for (std::size_t j = 0; j < len; ++j) unit_powers_[k][j] = unit_powers_[k - 1][j] * u[j];
}

void SignalModel::check_theta(std::span<const double> theta) const {
  if (theta.size() != layout_.size())
    throw ValidationError("theta has " + std::to_string(theta.size()) + " components, model expects " +
                          std::to_string(layout_.size()));
  if (theta[layout_.gamma()] < 0.0) throw ValidationError("Lorentzian broadening is negative");
  if (theta[layout_.sigma_g()] < 0.0) throw ValidationError("Gaussian broadening is negative");
}

void SignalModel::synthesize(std::span<const double> theta, Work& w, bool include_mm) const {
  const auto& k = simd::active();
  const std::size_t n = axis().n_points();
  std::fill(w.combined.begin(), w.combined.end(), 0.0);
  const auto mm = basis_.mm_index();
  for (std::size_t m = 0; m < basis_.size(); ++m) {
    if (!include_mm && mm && *mm == m) continue;
    const double a = theta[m];
    if (a != 0.0) k.axpy(a, basis_interleaved_[m].data(), w.combined.data(), 2 * n);
  }
  const double gamma = theta[layout_.gamma()];
  const double sg2 = theta[layout_.sigma_g()] * theta[layout_.sigma_g()];
  const double eps = theta[layout_.epsilon()];
  const auto t = axis().time_s();
  for (std::size_t i = 0; i < n; ++i) {
    const double env = std::exp(-(gamma + sg2 * t[i]) * t[i]);
    const double ang = eps * t[i];
    w.damp[2 * i] = env * std::cos(ang);
    w.damp[2 * i + 1] = -env * std::sin(ang);
  }
  k.cmul(w.combined.data(), w.damp.data(), w.damped.data(), n);
  fft::forward(reinterpret_cast<const cplx*>(w.damped.data()), w.spectrum.data(), n);
}

CVec SignalModel::forward(const ModelParams& theta) const { return forward(theta.to_vector()); }

CVec SignalModel::forward(std::span<const double> theta) const {
  check_theta(theta);
  Work w(axis().n_points());
  synthesize(theta, w);
  const std::size_t len = crop_size();
  const double phi0 = theta[layout_.phi0()];
  const double phi1 = theta[layout_.phi1()];
  const std::size_t nb = layout_.baseline_order + 1;
  CVec x(len);
  for (std::size_t j = 0; j < len; ++j) {
    const cplx phase = std::polar(1.0, phi0 + crop_hz_[j] * phi1);
    double br = 0.0, bi = 0.0;
    for (std::size_t p = 0; p < nb; ++p) {
      br += theta[layout_.baseline(p)] * unit_powers_[p][j];
      bi += theta[layout_.baseline(nb + p)] * unit_powers_[p][j];
    }
    x[j] = phase * w.spectrum[crop_bins_[j]] + cplx{br, bi};
  }
  return x;
}

CVec SignalModel::metabolite_signal(const ModelParams& theta, bool include_mm) const {
  const auto v = theta.to_vector();
  check_theta(v);
  Work w(axis().n_points());
  synthesize(v, w, include_mm);
  const std::size_t len = crop_size();
  CVec x(len);
  for (std::size_t j = 0; j < len; ++j)
    x[j] = std::polar(1.0, theta.phi0 + crop_hz_[j] * theta.phi1) * w.spectrum[crop_bins_[j]];
  return x;
}

CVec SignalModel::component(const ModelParams& theta, std::size_t m) const {
  ModelParams unit = theta;
  std::fill(unit.amplitudes.begin(), unit.amplitudes.end(), 0.0);
  unit.amplitudes.at(m) = 1.0;
  return metabolite_signal(unit, true);
}

CVec SignalModel::baseline(std::span<const double> coefficients) const {
  const std::size_t nb = layout_.baseline_order + 1;
  if (coefficients.size() != 2 * nb) throw ValidationError("baseline coefficient count mismatch");
  CVec out(crop_size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    double br = 0.0, bi = 0.0;
    for (std::size_t p = 0; p < nb; ++p) {
      br += coefficients[p] * unit_powers_[p][j];
      bi += coefficients[nb + p] * unit_powers_[p][j];
    }
    out[j] = {br, bi};
  }
  return out;
}

double SignalModel::residual(std::span<const double> theta, std::span<const cplx> y) const {
  const CVec x = forward(theta);
  if (y.size() != x.size()) throw ValidationError("observed spectrum length does not match the crop window");
  double loss = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) loss += std::norm(y[j] - x[j]);
  return loss;
}

LossAndGradient SignalModel::residual_gradient(std::span<const double> theta,
                                               std::span<const cplx> y) const {
  check_theta(theta);
  const std::size_t len = crop_size();
  if (y.size() != len) throw ValidationError("observed spectrum length does not match the crop window");
  const std::size_t n = axis().n_points();
  const auto& kern = simd::active();

  Work w(n);
  synthesize(theta, w);

  const double phi0 = theta[layout_.phi0()];
  const double phi1 = theta[layout_.phi1()];
  const std::size_t nb = layout_.baseline_order + 1;

  LossAndGradient out;
  out.grad.assign(layout_.size(), 0.0);
  auto& g = out.grad;

  // cot[t] = DFT{ conj(W) }, W = G conj(P) on the crop bins, G = -2 (y - x).
  CVec adj(n, cplx{0.0, 0.0});
  double loss = 0.0;
  double d_phi0 = 0.0, d_phi1 = 0.0;
  for (std::size_t j = 0; j < len; ++j) {
    const cplx phase = std::polar(1.0, phi0 + crop_hz_[j] * phi1);
    const cplx metab = phase * w.spectrum[crop_bins_[j]];
    double br = 0.0, bi = 0.0;
    for (std::size_t p = 0; p < nb; ++p) {
      br += theta[layout_.baseline(p)] * unit_powers_[p][j];
      bi += theta[layout_.baseline(nb + p)] * unit_powers_[p][j];
    }
    const cplx r = y[j] - (metab + cplx{br, bi});
    loss += std::norm(r);
    const cplx G = -2.0 * r;
    for (std::size_t p = 0; p < nb; ++p) {
      g[layout_.baseline(p)] += G.real() * unit_powers_[p][j];
      g[layout_.baseline(nb + p)] += G.imag() * unit_powers_[p][j];
    }
    const double im = (std::conj(G) * metab).imag();
    d_phi0 -= im;
    d_phi1 -= crop_hz_[j] * im;
    adj[crop_bins_[j]] = std::conj(G) * phase;
  }
  g[layout_.phi0()] = d_phi0;
  g[layout_.phi1()] = d_phi1;

  CVec h(n);
  fft::forward(adj.data(), h.data(), n);
  std::vector<double> q(2 * n);
  kern.cmul(w.damp.data(), as_doubles(h), q.data(), n);

  // d/da_m = Re sum_t s_m(t) q(t)
  std::vector<double> q_conj(q);
  for (std::size_t i = 0; i < n; ++i) q_conj[2 * i + 1] = -q_conj[2 * i + 1];
  for (std::size_t m = 0; m < basis_.size(); ++m)
    g[m] = kern.dot(basis_interleaved_[m].data(), q_conj.data(), 2 * n);

  std::vector<double> zq(2 * n);
  kern.cmul(w.combined.data(), q.data(), zq.data(), n);
  const auto t = axis().time_s();
  double s_t_re = 0.0, s_t2_re = 0.0, s_t_im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s_t_re += t[i] * zq[2 * i];
    s_t2_re += t[i] * t[i] * zq[2 * i];
    s_t_im += t[i] * zq[2 * i + 1];
  }
  g[layout_.gamma()] = -s_t_re;
  g[layout_.sigma_g()] = -2.0 * theta[layout_.sigma_g()] * s_t2_re;
  g[layout_.epsilon()] = s_t_im;

  out.loss = loss;
  if (!std::isfinite(loss)) {
    for (std::size_t i = 0; i < theta.size(); ++i)
      if (!std::isfinite(theta[i])) throw NumericError("non-finite parameter " + std::to_string(i), static_cast<long>(i));
    throw NumericError("non-finite residual loss");
  }
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!std::isfinite(g[i]))
      throw NumericError("non-finite gradient for parameter " + std::to_string(i), static_cast<long>(i));
  return out;
}

CVec add_noise(std::span<const cplx> clean, const NoiseSpec& noise, Rng& rng) {
  if (!(noise.sigma >= 0.0)) throw ValidationError("noise sigma must be >= 0");
  CVec out(clean.begin(), clean.end());
  if (noise.sigma == 0.0) return out;
  std::normal_distribution<double> normal(0.0, noise.sigma);
  for (auto& v : out) {
    const double re = normal(rng);
    const double im = normal(rng);
    v += cplx{re, im};
  }
  return out;
}

CVec apply_random_walk(std::span<const cplx> spectrum, const RandomWalkSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t len = spectrum.size();
  CVec out(spectrum.begin(), spectrum.end());
  if (len == 0) return out;

  std::normal_distribution<double> step(0.0, 1.0);
  auto walk = [&]() {
    std::vector<double> w(len);
    double pos = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      pos = std::clamp(pos + spec.step_size * step(rng), spec.min_bound, spec.max_bound);
      w[j] = pos;
    }
    return w;
  };
  const auto re = walk();
  const auto im = walk();

  const auto window = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(len) * spec.smoothing / 1e5)));
  const std::size_t left = (window - 1) / 2;
  const std::size_t right = window - 1 - left;
  // Prefix sums give the centered moving average, truncated at the edges.
  std::vector<double> cre(len + 1, 0.0), cim(len + 1, 0.0);
  for (std::size_t j = 0; j < len; ++j) {
    cre[j + 1] = cre[j] + re[j];
    cim[j + 1] = cim[j] + im[j];
  }
  for (std::size_t j = 0; j < len; ++j) {
    const std::size_t lo = j >= left ? j - left : 0;
    const std::size_t hi = std::min(len, j + right + 1);
    const double count = static_cast<double>(hi - lo);
    out[j] += cplx{(cre[hi] - cre[lo]) / count, (cim[hi] - cim[lo]) / count};
  }
  return out;
}

double compute_snr(std::span<const cplx> metabolite_only, double noise_sigma) {
  if (!(noise_sigma > 0.0)) throw ValidationError("noise sigma must be positive for SNR");
  if (metabolite_only.empty()) throw ValidationError("empty spectrum");
  double power = 0.0;
  for (const auto& v : metabolite_only) power += std::norm(v);
  power /= static_cast<double>(metabolite_only.size());
  if (power == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(power / (2.0 * noise_sigma * noise_sigma));
}

}  // namespace mrsq
