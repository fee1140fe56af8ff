#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "mrsq/error.hpp"
#include "mrsq/spectral/fft.hpp"

using namespace mrsq;
using namespace mrsq::testing;

namespace {

constexpr double kPi = std::numbers::pi;

TimeSignal tone(const SpectralAxis& axis, double hz) {
  TimeSignal s{CVec(axis.n_points()), axis.dwell_s()};
  for (std::size_t k = 0; k < axis.n_points(); ++k) s.samples[k] = std::polar(1.0, 2 * kPi * hz * axis.time_s()[k]);
  return s;
}

std::size_t argmax_abs(std::span<const cplx> v) {
  return static_cast<std::size_t>(
      std::max_element(v.begin(), v.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); }) - v.begin());
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("default axis has 355 crop points and a monotone ppm grid") {
  const auto axis = SpectralAxis::build(AxisParams{});
  CHECK(axis.crop_size() == 355);
  const auto ppm = axis.ppm();
  for (std::size_t j = 1; j < ppm.size(); ++j) CHECK(ppm[j] > ppm[j - 1]);
  // Grid ends are included, so the step is bandwidth / (n - 1).
  CHECK(axis.ppm_step() == doctest::Approx(3000.0 / (1023.0 * 298.03)).epsilon(1e-14));
  CHECK(ppm.front() == doctest::Approx(4.65 - 1500.0 / 298.03));
  CHECK(ppm.back() == doctest::Approx(4.65 + 1500.0 / 298.03));
  CHECK(axis.crop_ppm().front() >= 0.5 - axis.ppm_step());
  CHECK(axis.crop_ppm().back() <= 4.0);
  CHECK(axis.crop_unit().front() == -1.0);
  CHECK(axis.crop_unit().back() == 1.0);
}

TEST_CASE("two-point axis without crop keeps everything") {
  const auto axis = SpectralAxis::build(2, 1.0, 1.0, 0.0, std::nullopt);
  CHECK(axis.n_points() == 2);
  CHECK(axis.crop_size() == 2);
  CHECK(axis.ppm()[0] == doctest::Approx(-0.5));
  CHECK(axis.ppm()[1] == doctest::Approx(0.5));
}

TEST_CASE("narrow crop length matches direct enumeration of the grid") {
  for (double width : {0.01, 0.02, 0.05, 0.3}) {
    const auto axis = SpectralAxis::build(1024, 3000, 298.03, 4.65, PpmInterval{2.0, 2.0 + width});
    // Oracle: nearest grid point to each end, by linear scan, half-open.
    auto nearest = [&](double v) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < axis.n_points(); ++j)
        if (std::abs(axis.ppm()[j] - v) < std::abs(axis.ppm()[best] - v)) best = j;
      return best;
    };
    CHECK(axis.crop_size() == nearest(2.0 + width) - nearest(2.0));
    // And within one point of the count of grid points inside the closed interval.
    const auto inside = std::count_if(axis.ppm().begin(), axis.ppm().end(),
                                      [&](double p) { return p >= 2.0 && p <= 2.0 + width; });
    CHECK(std::abs(static_cast<long>(axis.crop_size()) - static_cast<long>(inside)) <= 1);
  }
}

TEST_CASE("bad geometry is a configuration error") {
  CHECK_THROWS_AS(SpectralAxis::build(1, 3000, 298.03, 4.65, std::nullopt), ConfigError);
  CHECK_THROWS_AS(SpectralAxis::build(1024, 0, 298.03, 4.65, std::nullopt), ConfigError);
  CHECK_THROWS_AS(SpectralAxis::build(1024, 3000, -1, 4.65, std::nullopt), ConfigError);
  CHECK_THROWS_AS(SpectralAxis::build(1024, 3000, 298.03, 4.65, PpmInterval{-1.0, 4.0}), ConfigError);
  CHECK_THROWS_AS(SpectralAxis::build(1024, 3000, 298.03, 4.65, PpmInterval{3.0, 2.0}), ConfigError);
  CHECK_THROWS_AS(SpectralAxis::build(1024, 3000, 298.03, 4.65, PpmInterval{2.0, 2.0 + 1e-9}), ConfigError);
}

TEST_CASE("fft matches a naive DFT") {
  Rng rng(3);
  for (std::size_t n : {1u, 2u, 5u, 16u, 31u}) {
    const auto x = random_spectrum(n, rng);
    CVec fast(n);
    fft::forward(x.data(), fast.data(), n);
    for (std::size_t k = 0; k < n; ++k) {
      cplx ref = 0;
      for (std::size_t t = 0; t < n; ++t) ref += x[t] * std::polar(1.0, -2 * kPi * double(k * t % n) / double(n));
      CHECK(std::abs(fast[k] - ref) <= 1e-12 * (1 + std::abs(ref)));
    }
  }
}

TEST_CASE("to_frequency_domain basics") {
  const auto axis = SpectralAxis::build(AxisParams{});
  SUBCASE("zero in, zero out") {
    const auto s = to_frequency_domain(TimeSignal{CVec(1024), axis.dwell_s()}, axis, true);
    CHECK(s.values.size() == 355);
    for (auto v : s.values) CHECK(v == cplx{});
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(to_frequency_domain(TimeSignal{CVec(1000), axis.dwell_s()}, axis, true), ValidationError);
  }
  SUBCASE("a tone lands on its bin") {
    for (double hz : {-700.0, -123.4, 0.0, 250.0, 1200.0}) {
      const auto s = to_frequency_domain(tone(axis, hz), axis, false);
      const auto j = argmax_abs(s.values);
      // True DFT bin frequency of display index j.
      const double bin_hz = (double(j) - 512.0) * 3000.0 / 1024.0;
      CHECK(std::abs(bin_hz - hz) <= 0.5 * 3000.0 / 1024.0 + 1e-9);
    }
  }
  SUBCASE("Parseval") {
    Rng rng(11);
    TimeSignal s{random_spectrum(1024, rng), axis.dwell_s()};
    const auto f = to_frequency_domain(s, axis, false);
    const double et = std::pow(l2(s.samples), 2), ef = std::pow(l2(f.values), 2) / 1024.0;
    CHECK(std::abs(et - ef) / et < 1e-10);
  }
  SUBCASE("linearity") {
    Rng rng(12);
    TimeSignal x{random_spectrum(1024, rng), axis.dwell_s()}, y{random_spectrum(1024, rng), axis.dwell_s()};
    const cplx a{0.3, -1.2}, b{2.5, 0.1};
    TimeSignal z{CVec(1024), axis.dwell_s()};
    for (std::size_t k = 0; k < 1024; ++k) z.samples[k] = a * x.samples[k] + b * y.samples[k];
    const auto fx = to_frequency_domain(x, axis, false), fy = to_frequency_domain(y, axis, false);
    const auto fz = to_frequency_domain(z, axis, false);
    CVec lin(1024);
    for (std::size_t k = 0; k < 1024; ++k) lin[k] = a * fx.values[k] + b * fy.values[k];
    CHECK(max_abs_diff(fz.values, lin) <= 1e-12 * l2(lin));
  }
  SUBCASE("cropping is idempotent") {
    Rng rng(13);
    const auto full = to_frequency_domain(TimeSignal{random_spectrum(1024, rng), axis.dwell_s()}, axis, false);
    const auto once = crop_spectrum(full, axis);
    const auto twice = crop_spectrum(once, axis);
    CHECK(once.values == twice.values);
    CHECK(once.values.size() == 355);
    CHECK(once.values.front() == full.values[axis.crop_begin()]);
  }
}

TEST_CASE("basis synthesis") {
  SUBCASE("a peak at the carrier is a constant signal") {
    BasisDescription d;
    d.metabolites = {{"W", false, {{4.65, 1.0, 0.0}}}};
    const auto b = synthesize_basis(d, SpectralAxis::build(d.axis_params()));
    for (auto v : b[0].time) CHECK(std::abs(v - cplx{1.0, 0.0}) < 1e-15);
  }
  SUBCASE("the toy basis has 21 entries and one macromolecule") {
    const auto& basis = toy().model.basis();
    CHECK(basis.size() == 21);
    CHECK(basis.mm_index() == std::optional<std::size_t>{20});
    CHECK(std::count_if(basis.entries().begin(), basis.entries().end(), [](const auto& e) { return e.is_mm; }) == 1);
  }
  SUBCASE("a 2.008 ppm singlet peaks at the nearest grid bin") {
    BasisDescription d;
    d.metabolites = {{"NAA", false, {{2.008, 1.0, 0.0}}}};
    const auto axis = SpectralAxis::build(d.axis_params());
    const auto b = synthesize_basis(d, axis);
    const auto s = to_frequency_domain(TimeSignal{b[0].time, axis.dwell_s()}, axis, false);
    std::size_t nearest = 0;
    for (std::size_t j = 1; j < axis.n_points(); ++j)
      if (std::abs(axis.ppm()[j] - 2.008) < std::abs(axis.ppm()[nearest] - 2.008)) nearest = j;
    CHECK(argmax_abs(s.values) == nearest);
  }
  SUBCASE("synthesis is bit-reproducible and JSON round-trips exactly") {
    const auto d = parse_basis_description(std::string(default_basis_json()));
    const auto axis = SpectralAxis::build(d.axis_params());
    const auto b1 = synthesize_basis(d, axis), b2 = synthesize_basis(d, axis);
    for (std::size_t m = 0; m < b1.size(); ++m) CHECK(b1[m].time == b2[m].time);
    CHECK(b1.fingerprint() == b2.fingerprint());
    const auto back = parse_basis_description(dump_basis_description(d));
    REQUIRE(back.metabolites.size() == d.metabolites.size());
    for (std::size_t m = 0; m < d.metabolites.size(); ++m) {
      CHECK(back.metabolites[m].name == d.metabolites[m].name);
      CHECK(back.metabolites[m].is_mm == d.metabolites[m].is_mm);
      REQUIRE(back.metabolites[m].peaks.size() == d.metabolites[m].peaks.size());
      for (std::size_t p = 0; p < d.metabolites[m].peaks.size(); ++p) {
        CHECK(back.metabolites[m].peaks[p].ppm == d.metabolites[m].peaks[p].ppm);
        CHECK(back.metabolites[m].peaks[p].amplitude == d.metabolites[m].peaks[p].amplitude);
        CHECK(back.metabolites[m].peaks[p].intrinsic_gauss_per_s == d.metabolites[m].peaks[p].intrinsic_gauss_per_s);
      }
    }
  }
  SUBCASE("invalid descriptions are rejected") {
    const auto axis = SpectralAxis::build(AxisParams{});
    BasisDescription d;
    CHECK_THROWS_AS(synthesize_basis(d, axis), ValidationError);
    d.metabolites = {{"A", false, {{2.0, 1.0, 0.0}}}, {"A", false, {{3.0, 1.0, 0.0}}}};
    CHECK_THROWS_AS(synthesize_basis(d, axis), ValidationError);
    d.metabolites = {{"A", false, {}}};
    CHECK_THROWS_AS(synthesize_basis(d, axis), ValidationError);
    d.metabolites = {{"A", false, {{40.0, 1.0, 0.0}}}};
    CHECK_THROWS_AS(synthesize_basis(d, axis), ValidationError);
  }
}

}  // TEST_SUITE
