#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "mrsq/error.hpp"

using namespace mrsq;
using namespace mrsq::testing;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> widths(const PriorTable& p) {
  std::vector<double> w;
  for (const auto& r : p.theta) w.push_back(std::max(r.width(), 1e-12));
  return w;
}

/// One singlet at the carrier on a long acquisition (0.18 Hz bins).
SignalModel fine_singlet_model() {
  BasisDescription d;
  d.n_points = 16384;
  d.metabolites = {{"S", false, {{4.65, 1.0, 0.0}}}};
  const auto axis = SpectralAxis::build(d.axis_params(PpmInterval{4.45, 4.85}));
  return SignalModel(synthesize_basis(d, axis), 2);
}

double peak_hz(const SignalModel& m, const CVec& x) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < x.size(); ++j)
    if (std::abs(x[j]) > std::abs(x[best])) best = j;
  return m.axis().crop_hz()[best];
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("parameter layout") {
  const ParamLayout L;
  CHECK(L.size() == 32);
  CHECK(L.gamma() == 21);
  CHECK(L.phi1() == 25);
  CHECK(L.baseline(0) == 26);
  std::vector<double> v(32);
  for (std::size_t i = 0; i < 32; ++i) v[i] = double(i) + 0.5;
  const auto p = ModelParams::from_vector(v, L);
  CHECK(p.to_vector() == v);
  CHECK(p.gamma == 21.5);
  CHECK(p.baseline.front() == 26.5);
  CHECK_THROWS_AS(ModelParams::from_vector(std::vector<double>(31), L), ValidationError);
  auto bad = p;
  bad.amplitudes[0] = -1;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("forward model examples") {
  const auto& wb = toy();
  const auto& m = wb.model;
  Rng rng(5);
  SUBCASE("all zero parameters give a zero spectrum") {
    for (auto v : m.forward(std::vector<double>(32, 0.0))) CHECK(v == cplx{});
  }
  SUBCASE("phi0 = pi negates the metabolite spectrum") {
    auto th = random_theta(wb.priors, rng);
    for (std::size_t k = 0; k < 6; ++k) th[m.layout().baseline(k)] = 0.0;
    th[m.layout().phi0()] = 0.0;
    const auto x0 = m.forward(th);
    th[m.layout().phi0()] = kPi;
    const auto x1 = m.forward(th);
    CVec neg(x0.size());
    for (std::size_t j = 0; j < x0.size(); ++j) neg[j] = -x0[j];
    CHECK(max_abs_diff(x1, neg) <= 1e-12 * l2(x0));
  }
  SUBCASE("phase is 2 pi periodic") {
    for (int rep = 0; rep < 5; ++rep) {
      auto th = random_theta(wb.priors, rng);
      const auto x0 = m.forward(th);
      th[m.layout().phi0()] += 2 * kPi;
      CHECK(max_abs_diff(m.forward(th), x0) <= 1e-12 * l2(x0));
    }
  }
  SUBCASE("linear in each amplitude") {
    for (int rep = 0; rep < 5; ++rep) {
      auto th = random_theta(wb.priors, rng);
      const std::size_t k = rep * 4;
      const auto x0 = m.forward(th);
      const auto comp = m.component(ModelParams::from_vector(th, m.layout()), k);
      th[k] += 1.75;
      const auto x1 = m.forward(th);
      CVec lin(x0.size());
      for (std::size_t j = 0; j < x0.size(); ++j) lin[j] = x0[j] + 1.75 * comp[j];
      CHECK(max_abs_diff(x1, lin) <= 1e-12 * l2(x1));
    }
  }
  SUBCASE("baseline changes never touch the metabolite term") {
    auto th = random_theta(wb.priors, rng);
    const auto x0 = m.forward(th);
    auto th2 = th;
    for (std::size_t k = 0; k < 6; ++k) th2[m.layout().baseline(k)] = uniform(rng, -5, 5);
    const auto x1 = m.forward(th2);
    const std::span<const double> b0(th.data() + 26, 6), b1(th2.data() + 26, 6);
    const auto B0 = m.baseline(b0), B1 = m.baseline(b1);
    CVec diff(x0.size()), dB(x0.size());
    for (std::size_t j = 0; j < x0.size(); ++j) {
      diff[j] = x1[j] - x0[j];
      dB[j] = B1[j] - B0[j];
    }
    CHECK(max_abs_diff(diff, dB) <= 1e-12 * l2(x0));
    // Metabolite part is the remainder.
    const auto p = ModelParams::from_vector(th, m.layout());
    const auto met = m.metabolite_signal(p, true);
    CVec sum(x0.size());
    for (std::size_t j = 0; j < x0.size(); ++j) sum[j] = met[j] + B0[j];
    CHECK(max_abs_diff(sum, x0) <= 1e-12 * l2(x0));
  }
  SUBCASE("baseline layout: real coefficients first, ascending power") {
    std::vector<double> b{1, 2, 3, 4, 5, 6};
    const auto B = m.baseline(b);
    const auto u = m.axis().crop_unit();
    for (std::size_t j = 0; j < B.size(); j += 50) {
      const cplx expect{1 + 2 * u[j] + 3 * u[j] * u[j], 4 + 5 * u[j] + 6 * u[j] * u[j]};
      CHECK(std::abs(B[j] - expect) < 1e-12);
    }
  }
  SUBCASE("bad input") {
    CHECK_THROWS_AS(m.forward(std::vector<double>(31, 0.0)), ValidationError);
    auto th = random_theta(wb.priors, rng);
    th[m.layout().gamma()] = -1;
    CHECK_THROWS_AS(m.forward(th), ValidationError);
  }
}

TEST_CASE("Lorentzian linewidth is gamma / pi") {
  const auto m = fine_singlet_model();
  std::vector<double> th(m.layout().size(), 0.0);
  th[0] = 1.0;
  for (double gamma : {10.0, 20.0}) {
    th[m.layout().gamma()] = gamma;
    const auto x = m.forward(th);
    const auto hz = m.axis().crop_hz();
    std::size_t pk = 0;
    for (std::size_t j = 1; j < x.size(); ++j)
      if (x[j].real() > x[pk].real()) pk = j;
    const double half = 0.5 * x[pk].real();
    auto crossing = [&](int dir) {
      std::size_t j = pk;
      while (x[j + dir].real() > half) j += dir;
      const double r0 = x[j].real(), r1 = x[j + dir].real();
      return hz[j] + (hz[j + dir] - hz[j]) * (r0 - half) / (r0 - r1);
    };
    const double fwhm = crossing(1) - crossing(-1);
    CHECK(fwhm == doctest::Approx(gamma / kPi).epsilon(0.10));
  }
}

TEST_CASE("a positive epsilon moves lines by -epsilon / (2 pi) Hz") {
  const auto m = fine_singlet_model();
  std::vector<double> th(m.layout().size(), 0.0);
  th[0] = 1.0;
  th[m.layout().gamma()] = 2.0;
  const double step = m.axis().hz_step();
  CHECK(std::abs(peak_hz(m, m.forward(th))) <= step);
  for (double shift_hz : {-20.0, 15.0, 40.0}) {
    th[m.layout().epsilon()] = 2 * kPi * shift_hz;
    CHECK(peak_hz(m, m.forward(th)) == doctest::Approx(-shift_hz).epsilon(0.02));
  }
}

TEST_CASE("residual gradient") {
  const auto& wb = toy();
  const auto& m = wb.model;
  Rng rng(17);
  SUBCASE("zero at the generating parameters") {
    const auto th = random_theta(wb.priors, rng);
    const auto y = m.forward(th);
    const auto lg = m.residual_gradient(th, y);
    CHECK(lg.loss == 0.0);
    for (double g : lg.grad) CHECK(g == 0.0);
  }
  SUBCASE("matches central differences") {
    const auto w = widths(wb.priors);
    for (int rep = 0; rep < 10; ++rep) {
      const auto th = random_theta(wb.priors, rng);
      auto y = m.forward(random_theta(wb.priors, rng));
      y = add_noise(y, NoiseSpec{30.0}, rng);
      const auto gc = check_residual_gradient(m, th, y, w);
      INFO("worst coordinate " << gc.worst);
      CHECK(gc.max_rel < 1e-5);
    }
  }
  SUBCASE("constant real baseline term") {
    const auto th = random_theta(wb.priors, rng);
    const auto y = add_noise(m.forward(random_theta(wb.priors, rng)), NoiseSpec{10.0}, rng);
    const auto x = m.forward(th);
    double expect = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) expect += 2 * (x[j] - y[j]).real();
    const auto lg = m.residual_gradient(th, y);
    CHECK(lg.grad[m.layout().baseline(0)] == doctest::Approx(expect).epsilon(1e-12));
    CHECK(lg.loss == doctest::Approx(m.residual(th, y)).epsilon(1e-14));
  }
  SUBCASE("non-finite input names the offending parameter") {
    auto th = random_theta(wb.priors, rng);
    th[m.layout().phi0()] = std::nan("");
    try {
      m.residual_gradient(th, m.forward(random_theta(wb.priors, rng)));
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(e.index() == static_cast<long>(m.layout().phi0()));
    }
  }
}

TEST_CASE("noise") {
  Rng rng(1);
  const CVec clean = random_spectrum(355, rng);
  SUBCASE("sigma zero is the identity") {
    Rng r(2);
    CHECK(add_noise(clean, NoiseSpec{0.0}, r) == clean);
  }
  SUBCASE("empirical standard deviation") {
    Rng r(3);
    const CVec zeros(100000);
    const auto n = add_noise(zeros, NoiseSpec{100.0}, r);
    double s = 0, s2 = 0;
    for (auto v : n) {
      s += v.real();
      s2 += v.real() * v.real();
    }
    const double mean = s / 1e5;
    const double sd = std::sqrt(s2 / 1e5 - mean * mean);
    CHECK(sd == doctest::Approx(100.0).epsilon(0.02));
  }
  SUBCASE("same seed, same draw") {
    Rng a(9), b(9);
    CHECK(add_noise(clean, NoiseSpec{5.0}, a) == add_noise(clean, NoiseSpec{5.0}, b));
  }
  SUBCASE("negative sigma") {
    Rng r(1);
    CHECK_THROWS_AS(add_noise(clean, NoiseSpec{-1.0}, r), ValidationError);
  }
}

TEST_CASE("random walk") {
  Rng rng(4);
  const CVec spec = random_spectrum(355, rng);
  SUBCASE("zero step is the identity") {
    Rng r(1);
    CHECK(apply_random_walk(spec, RandomWalkSpec{0.0, 500.0, -10.0, 10.0}, r) == spec);
  }
  SUBCASE("zero bounds clamp to nothing") {
    Rng r(1);
    CHECK(apply_random_walk(spec, RandomWalkSpec{1e3, 500.0, 0.0, 0.0}, r) == spec);
  }
  SUBCASE("bounded") {
    for (double smoothing : {1.0, 1e3, 1e5}) {
      Rng r(7);
      const CVec zeros(355);
      const auto w = apply_random_walk(zeros, RandomWalkSpec{1e3, smoothing, -1e6, 1e6}, r);
      for (auto v : w) {
        CHECK(std::abs(v.real()) <= 1e6);
        CHECK(std::abs(v.imag()) <= 1e6);
      }
    }
    Rng r(8);
    const CVec zeros(355);
    const auto w = apply_random_walk(zeros, RandomWalkSpec{1e5, 1.0, -50.0, 20.0}, r);
    for (auto v : w) {
      CHECK(v.real() >= -50.0);
      CHECK(v.real() <= 20.0);
    }
  }
  SUBCASE("invalid spec") {
    CHECK_THROWS_AS(RandomWalkSpec({1.0, 0.5, -1, 1}).validate(), ValidationError);
    CHECK_THROWS_AS(RandomWalkSpec({1.0, 10, 1, 2}).validate(), ValidationError);
    CHECK_THROWS_AS(RandomWalkSpec({-1.0, 10, -1, 1}).validate(), ValidationError);
  }
}

TEST_CASE("SNR") {
  const double sigma = 3.0;
  CVec x(355, cplx{sigma, sigma});  // |x|^2 = 2 sigma^2
  CHECK(compute_snr(x, sigma) == doctest::Approx(0.0));
  Rng rng(2);
  const auto y = random_spectrum(355, rng, 40.0);
  CHECK(compute_snr(y, 10.0) - compute_snr(y, 20.0) == doctest::Approx(20 * std::log10(2.0)).epsilon(1e-12));
  CHECK(std::isinf(compute_snr(CVec(355), 1.0)));
  CHECK(compute_snr(CVec(355), 1.0) < 0);
}

}  // TEST_SUITE
