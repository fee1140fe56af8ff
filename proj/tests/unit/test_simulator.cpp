#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fixtures.hpp"
#include "mrsq/error.hpp"
#include "mrsq/metrics/metrics.hpp"
#include "mrsq/sim/dataset_io.hpp"

using namespace mrsq;
using namespace mrsq::testing;

TEST_SUITE("simulator") {

TEST_CASE("central range") {
  auto close = [](Interval a, Interval b) {
    return std::abs(a.lo - b.lo) < 1e-12 && std::abs(a.hi - b.hi) < 1e-12;
  };
  CHECK(close(central_range({3.9, 12.3}), {6.0, 10.2}));
  CHECK(close(central_range({7.5, 16.3}), {9.7, 14.1}));
  CHECK(close(central_range({0.0, 0.0}), {0.0, 0.0}));
}

TEST_CASE("prior table") {
  const auto& p = toy().priors;
  CHECK(p.theta.size() == 32);
  CHECK(p.names[3] == "Cr");
  CHECK(p.names[21] == "gamma");
  CHECK(p.names[26] == "b1");
  CHECK_NOTHROW(p.validate());
  // Noise enters as a variance; the per-part sigma is its square root.
  CHECK(p.noise_sigma().lo == doctest::Approx(std::sqrt(10.0)));
  CHECK(p.noise_sigma().hi == doctest::Approx(std::sqrt(5000.0 * std::numbers::sqrt2)));
  // Mid-range amplitudes sit inside the full range.
  const auto mid = resolve(p, Scenario::mid_range()), full = resolve(p, Scenario::full_range());
  for (std::size_t i = 0; i < 32; ++i) {
    CHECK(mid.theta[i].lo >= full.theta[i].lo);
    CHECK(mid.theta[i].hi <= full.theta[i].hi);
    if (i < 21 && full.theta[i].width() > 0) {
      CHECK(mid.theta[i].lo > full.theta[i].lo);
      CHECK(mid.theta[i].hi < full.theta[i].hi);
    }
  }
}

TEST_CASE("sample_params") {
  const auto& p = toy().priors;
  SUBCASE("degenerate priors give the point mass") {
    PriorTable d = p;
    for (std::size_t i = 0; i < d.theta.size(); ++i) d.theta[i] = {d.theta[i].mid(), d.theta[i].mid()};
    d.noise_variance = {4.0, 4.0};
    Rng rng(1);
    const auto s = sample_params(d, Scenario::full_range(), rng);
    const auto v = s.theta.to_vector();
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == d.theta[i].lo);
    CHECK(s.noise.sigma == 2.0);
  }
  SUBCASE("mid-range draws stay inside the central ranges") {
    Rng rng(2);
    std::size_t violations = 0;
    for (int n = 0; n < 10000; ++n) {
      const auto s = sample_params(p, Scenario::mid_range(), rng);
      for (std::size_t m = 0; m < 21; ++m)
        if (!central_range(p.theta[m]).contains(s.theta.amplitudes[m])) ++violations;
    }
    CHECK(violations == 0);
  }
  SUBCASE("full-range Cr covers its prior") {
    Rng rng(3);
    double lo = 1e9, hi = -1e9;
    for (int n = 0; n < 10000; ++n) {
      const double a = sample_params(p, Scenario::full_range(), rng).theta.amplitudes[3];
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    const double span = 12.3 - 3.9;
    CHECK(lo >= 3.9);
    CHECK(hi <= 12.3);
    CHECK(lo - 3.9 < 0.01 * span);
    CHECK(12.3 - hi < 0.01 * span);
  }
  SUBCASE("overrides replace a row and unknown names are rejected") {
    Scenario s = Scenario::full_range();
    s.overrides["phi0"] = {1.0, 1.0};
    Rng rng(4);
    CHECK(sample_params(p, s, rng).theta.phi0 == 1.0);
    s.overrides["nope"] = {0, 1};
    CHECK_THROWS_AS(sample_params(p, s, rng), ValidationError);
  }
}

TEST_CASE("seeds") {
  CHECK(derive_seed(1, SeedStream::test, 0) == derive_seed(1, SeedStream::test, 0));
  CHECK(derive_seed(1, SeedStream::test, 0) != derive_seed(1, SeedStream::train, 0));
  CHECK(derive_seed(1, SeedStream::test, 0) != derive_seed(1, SeedStream::test, 1));
  CHECK(derive_seed(1, SeedStream::test, 0) != derive_seed(2, SeedStream::test, 0));
}

TEST_CASE("records") {
  const auto& wb = toy();
  SUBCASE("a record regenerates from its seed alone") {
    const auto a = generate_dataset(1, wb.priors, Scenario::full_range(), wb.model, 42);
    const auto b = generate_dataset(1, wb.priors, Scenario::full_range(), wb.model, 42);
    CHECK(a == b);
    const auto c = simulate_record(wb.model, wb.priors, Scenario::full_range(), a[0].seed);
    CHECK(c == a[0]);
  }
  SUBCASE("thread count does not change the data") {
    const auto a = generate_dataset(40, wb.priors, Scenario::mid_range(), wb.model, 7, SeedStream::test, 0, 1);
    const auto b = generate_dataset(40, wb.priors, Scenario::mid_range(), wb.model, 7, SeedStream::test, 0, 3);
    CHECK(a == b);
    const auto tail = generate_dataset(10, wb.priors, Scenario::mid_range(), wb.model, 7, SeedStream::test, 30);
    for (std::size_t i = 0; i < 10; ++i) CHECK(tail[i] == a[30 + i]);
  }
  SUBCASE("labels, noise and SNR are consistent") {
    const auto data = generate_dataset(20, wb.priors, Scenario::full_range(), wb.model, 9);
    for (const auto& r : data) {
      const auto x = wb.model.forward(r.theta);
      CHECK(max_abs_diff(x, r.clean) <= 1e-12 * l2(x));
      // The residual is pure noise at the recorded sigma.
      double s2 = 0;
      for (std::size_t j = 0; j < x.size(); ++j) s2 += std::norm(r.observed[j] - r.clean[j]);
      const double sd = std::sqrt(s2 / (2.0 * double(x.size())));
      CHECK(sd == doctest::Approx(r.noise_sigma).epsilon(0.15));
      const auto met = wb.model.metabolite_signal(ModelParams::from_vector(r.theta, wb.model.layout()), false);
      CHECK(r.snr_db == doctest::Approx(compute_snr(met, r.noise_sigma)).epsilon(1e-12));
      CHECK_FALSE(r.corrupted);
    }
  }
}

TEST_CASE("SNR of mid-range draws spans the 0-40 dB band") {
  const auto& wb = toy();
  const auto data = generate_dataset(10000, wb.priors, Scenario::mid_range(), wb.model, 20240917);
  std::size_t in_band = 0;
  double lo = 1e9, hi = -1e9;
  for (const auto& r : data) {
    if (r.snr_db >= 0 && r.snr_db <= 40) ++in_band;
    lo = std::min(lo, r.snr_db);
    hi = std::max(hi, r.snr_db);
  }
  MESSAGE("SNR range " << lo << " .. " << hi << " dB, in band " << in_band);
  CHECK(in_band >= 9500);
  CHECK(hi <= 60.0);
  CHECK(lo < 10.0);
  CHECK(hi > 30.0);
}

TEST_CASE("midpoint predictor has a finite nonzero MOSAE") {
  const auto& wb = toy();
  const auto data = generate_dataset(2000, wb.priors, Scenario::mid_range(), wb.model, 5);
  std::vector<double> mid(21);
  for (std::size_t m = 0; m < 21; ++m) mid[m] = wb.priors.theta[m].mid();
  std::vector<double> vals;
  for (const auto& r : data) vals.push_back(metrics::mosae(mid, std::span(r.theta).first(21), 20));
  const auto s = metrics::aggregate(vals);
  MESSAGE("midpoint MOSAE " << s.mean << " +- " << s.standard_error);
  CHECK(std::isfinite(s.mean));
  CHECK(s.mean > 0.0);
}

TEST_CASE("sweeps") {
  const auto& wb = toy();
  SUBCASE("pinned values are exactly the grid") {
    SweepSpec sw{"phi0", {}, 2};
    for (int i = 0; i < 21; ++i) sw.grid.push_back(-std::numbers::pi + i * std::numbers::pi / 10);
    const auto data = make_sweep(sw, wb.priors, Scenario::mid_range(), wb.model, 3);
    REQUIRE(data.size() == 42);
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(data[i].theta[wb.model.layout().phi0()] == sw.grid[i / 2]);
      CHECK(data[i].sweep_value == sw.grid[i / 2]);
      CHECK(data[i].sweep_parameter == "phi0");
    }
  }
  SUBCASE("values outside the prior are flagged") {
    const auto data =
        make_sweep(SweepSpec{"epsilon", {-40, -10, 0, 10, 40}, 1}, wb.priors, Scenario::mid_range(), wb.model, 3);
    CHECK(data[0].ood);
    CHECK_FALSE(data[1].ood);
    CHECK_FALSE(data[2].ood);
    CHECK_FALSE(data[3].ood);
    CHECK(data[4].ood);
  }
  SUBCASE("random-walk sweep corrupts the observed spectrum only") {
    const auto data =
        make_sweep(SweepSpec{"random_walk", {0, 1e3, 1e5}, 2}, wb.priors, Scenario::mid_range(), wb.model, 3);
    REQUIRE(data.size() == 6);
    for (const auto& r : data) {
      CHECK(max_abs_diff(wb.model.forward(r.theta), r.clean) <= 1e-12 * l2(r.clean));
      CHECK(r.corrupted);
      CHECK(r.ood == (r.sweep_value > 0));
    }
  }
  SUBCASE("noise sweep") {
    const auto data =
        make_sweep(SweepSpec{"noise_sigma", {1.0, 200.0}, 1}, wb.priors, Scenario::mid_range(), wb.model, 3);
    CHECK(data[0].noise_sigma == 1.0);
    CHECK(data[1].noise_sigma == 200.0);
    CHECK(data[1].ood);
  }
  SUBCASE("unknown parameter") {
    CHECK_THROWS_AS(make_sweep(SweepSpec{"bogus", {1.0}, 1}, wb.priors, Scenario::mid_range(), wb.model, 3),
                    ValidationError);
  }
  SUBCASE("default grids exist for every configured parameter") {
    const auto all = default_sweeps(wb.priors, 3, 9);
    for (const char* name : {"phi0", "epsilon", "gamma", "sigma_g", "noise_sigma", "b1", "random_walk"})
      CHECK(std::any_of(all.begin(), all.end(), [&](const SweepSpec& s) { return s.parameter == name; }));
  }
}

TEST_CASE("dataset round trip") {
  const auto& wb = toy();
  SUBCASE("empty dataset") {
    std::stringstream ss;
    write_dataset(ss, {}, wb.model, wb.priors);
    CHECK(read_dataset(ss, wb.model).empty());
  }
  SUBCASE("records come back exactly") {
    auto data = generate_dataset(100, wb.priors, Scenario::full_range(), wb.model, 11);
    auto sweep = make_sweep(SweepSpec{"random_walk", {1e3}, 2}, wb.priors, Scenario::mid_range(), wb.model, 1);
    data.insert(data.end(), sweep.begin(), sweep.end());
    std::stringstream ss;
    write_dataset(ss, data, wb.model, wb.priors);
    const auto back = read_dataset(ss, wb.model);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) CHECK(back[i] == data[i]);
  }
  SUBCASE("a tampered manifest or a different basis is rejected") {
    const auto data = generate_dataset(3, wb.priors, Scenario::full_range(), wb.model, 11);
    std::stringstream ss;
    write_dataset(ss, data, wb.model, wb.priors);
    std::string text = ss.str();
    const auto pos = text.find("fingerprint");
    REQUIRE(pos != std::string::npos);
    const auto digit = text.find_first_of("0123456789", pos);
    text[digit] = text[digit] == '1' ? '2' : '1';
    std::stringstream bad(text);
    CHECK_THROWS_AS(read_dataset(bad, wb.model), FormatError);

    std::stringstream again(ss.str());
    CHECK_THROWS_AS(read_dataset(again, three_peak_model()), FormatError);
    std::stringstream garbage("{\"not\": \"a manifest\"}\n");
    CHECK_THROWS_AS(read_dataset(garbage, wb.model), FormatError);
  }
}

}  // TEST_SUITE
