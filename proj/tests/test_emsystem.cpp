#include "doctest.h"

#include "mtb/emsystem.hpp"
#include "mtb/errors.hpp"
#include "mtb/soliton.hpp"

#include <cmath>
#include <map>

using namespace mtb;

TEST_CASE("energy levels are quadratically spaced") {
  const auto two = energy_levels(2, 1.8e-12);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == 0.0);
  CHECK(two[1] == 1.8e-12);
  const auto four = energy_levels(4, 1.8e-12);
  CHECK(four[1] == doctest::Approx(0.2e-12).epsilon(1e-14));
  CHECK(four[2] == doctest::Approx(0.8e-12).epsilon(1e-14));
  CHECK(four[3] == doctest::Approx(1.8e-12).epsilon(1e-14));
  const auto eight = energy_levels(8, 2.0);
  for (int m = 1; m <= 8; ++m) CHECK(eight[std::size_t(m - 1)] == doctest::Approx(std::pow((m - 1) / 7.0, 2) * 2.0));
  CHECK_THROWS_AS(energy_levels(3, 1.0), InvalidArgument);
  CHECK_THROWS_AS(energy_levels(1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(energy_levels(4, 0.0), InvalidArgument);
}

TEST_CASE("interval, rate, efficiency and time-bandwidth product") {
  const std::vector<double> one = {239e-12};
  CHECK(modulation_interval(one, one) == 239e-12);
  const std::vector<double> tx = {100e-12, 300e-12}, rx = {250e-12, 120e-12};
  CHECK(modulation_interval(tx, rx) == 300e-12);
  CHECK_THROWS_AS(modulation_interval({}, {}), InvalidArgument);

  CHECK(transmission_rate(2, 239e-12) == doctest::Approx(4.18e9).epsilon(1e-3));
  CHECK(transmission_rate(4, 1789e-12) == doctest::Approx(1.12e9).epsilon(2e-3));
  CHECK(spectral_efficiency(4, 89.5 / 50e9, 50e9) == doctest::Approx(0.022).epsilon(0.02));
  CHECK(time_bandwidth_product(1789e-12, 50e9) == doctest::Approx(89.45));
  for (double w : {29.3e9, 49.8e9, 50e9})
    CHECK(spectral_efficiency(4, 281e-12, w) * w == doctest::Approx(transmission_rate(4, 281e-12)).epsilon(1e-15));
  CHECK_THROWS_AS(transmission_rate(4, 0.0), InvalidArgument);
  CHECK_THROWS_AS(spectral_efficiency(4, 1e-10, 0.0), InvalidArgument);
}

TEST_CASE("nearest-level decisions") {
  const auto levels = energy_levels(4, 9.0);  // {0, 1, 4, 9}, exact
  CHECK(nearest_level(0.0, levels) == 1);
  CHECK(nearest_level(0.5, levels) == 1);  // midway 1|2: lower
  CHECK(nearest_level(2.5, levels) == 2);  // midway 2|3: lower
  CHECK(nearest_level(2.5000001, levels) == 3);
  CHECK(nearest_level(6.5, levels) == 3);
  CHECK(nearest_level(100.0, levels) == 4);
  CHECK(nearest_level(-1.0, levels) == 1);
  CHECK_THROWS_AS(nearest_level(1.0, std::vector<double>{}), InvalidArgument);
}

TEST_CASE("random messages are reproducible and cover the alphabet") {
  const auto a = random_messages(4, 4000, 7), b = random_messages(4, 4000, 7), c = random_messages(4, 4000, 8);
  CHECK(a == b);
  CHECK(a != c);
  std::map<int, int> counts;
  for (int m : a) {
    REQUIRE(m >= 1);
    REQUIRE(m <= 4);
    ++counts[m];
  }
  for (auto [m, n] : counts) CHECK(std::abs(n - 1000) < 120);
}

TEST_CASE("OOK soliton scheme: modulation and lossless loopback") {
  const auto fiber = FiberParams::lossless();
  const EmScheme s = soliton_scheme(2, 1.8e-12, 50e9, 1e-4, fiber, {});
  REQUIRE(s.pulses.size() == 1);
  const double ts = SolitonSpec::from_energy(1.8e-12, fiber).duration(1e-4);
  CHECK(s.tx_durations[0] == doctest::Approx(ts).epsilon(0.01));
  CHECK(s.pulse_energies[0] == doctest::Approx((1 - 1e-4) * 1.8e-12).epsilon(1e-3));
  CHECK(s.t_mod == std::max(s.tx_durations[0], s.rx_durations[0]));
  CHECK(s.rate() == doctest::Approx(4.18e9).epsilon(0.02));
  CHECK(s.efficiency() * s.w_eff == doctest::Approx(s.rate()).epsilon(1e-15));

  SUBCASE("all-off messages give a zero train") {
    const std::vector<int> off(5, 1);
    const auto train = modulate(off, s);
    CHECK(energy(train.signal) == 0.0);
    const auto d = detect(train.signal, s, train.layout);
    CHECK(d == off);
  }
  SUBCASE("a single pulse sits centered in its slot") {
    const std::vector<int> msg = {2};
    const auto train = modulate(msg, s);
    const std::size_t c = train.layout.first_center, pc = s.grid().center();
    for (std::size_t j = 0; j < s.grid().size(); ++j) REQUIRE(train.signal[c - pc + j] == s.pulses[0][j]);
    CHECK(energy(train.signal) == doctest::Approx(s.pulse_energies[0]).epsilon(1e-14));
    CHECK(train.layout.slot_length() >= s.t_mod);
    CHECK(train.layout.slot_length() < s.t_mod + s.grid().dt());
  }
  SUBCASE("adjacent full-energy pulses are isolated") {
    const std::vector<int> msg = {2, 2};
    const auto train = modulate(msg, s);
    const auto e = slot_energies(train.signal, train.layout);
    for (double v : e) CHECK(std::abs(v - 1.8e-12) <= 2 * 1e-4 * 1.8e-12);
  }
  SUBCASE("noiseless loopback") {
    const auto msg = random_messages(2, 48, 3);
    const LinkReport rep = evaluate_link(s, fiber, {}, msg);
    CHECK(rep.symbol_errors == 0);
    CHECK(rep.detected == msg);
    CHECK(rep.max_leakage <= 4 * 1e-4 * 1.8e-12);
    CHECK(rep.rate == s.rate());
    CHECK(rep.tbp == doctest::Approx(s.t_mod * s.w_eff));
  }
}

TEST_CASE("4-level soliton scheme on the lossy fiber") {
  const auto fiber = FiberParams::lossy();
  const EmScheme s = soliton_scheme(4, 1.8e-12, 50e9, 1e-4, fiber, {});
  CHECK(s.t_mod == doctest::Approx(1789e-12).epsilon(0.02));
  CHECK(s.rate() == doctest::Approx(1.12e9).epsilon(0.02));
  CHECK(s.rate() <= soliton_em_rate_bound(4, 50e9, 1e-4) * (1 + 1e-9));
  for (int m = 1; m <= 4; ++m) {
    const std::vector<int> one = {m};
    const LinkReport rep = evaluate_link(s, fiber, {}, one);
    CHECK(rep.detected[0] == m);
  }
  const auto msg = random_messages(4, 12, 5);
  const LinkReport rep = evaluate_link(s, fiber, {}, msg);
  CHECK(rep.symbol_errors == 0);
  CHECK(rep.max_leakage <= 4 * 1e-4 * 1.8e-12);
}

TEST_CASE("scheme construction errors") {
  const auto fiber = FiberParams::lossless();
  const TimeGrid g = soliton_grid(1.8e-12, 1e-4, 50e9, fiber);
  std::vector<SampledSignal> one = {truncated_soliton(1.8e-12, 1e-4, fiber, g)};
  CHECK_THROWS_AS(make_scheme(4, 1.8e-12, one, fiber, {}, 1e-4), InvalidArgument);
  const EmScheme s = make_scheme(2, 1.8e-12, one, fiber, {}, 1e-4);
  const std::vector<int> bad = {1, 3};
  CHECK_THROWS_AS(modulate(bad, s), InvalidArgument);
  CHECK_THROWS_AS(evaluate_link(s, fiber, {}, std::vector<int>{}), InvalidArgument);
}

TEST_CASE("duration curves and energy-level selection") {
  DurationCurve curve{{0.2e-12, 0.6e-12, 1.0e-12, 1.4e-12, 1.8e-12}, {290e-12, 280e-12, 250e-12, 230e-12, 214e-12}};
  CHECK(curve.at(0.2e-12) == 290e-12);
  CHECK(curve.at(0.4e-12) == doctest::Approx(285e-12));
  CHECK(curve.at(1.8e-12) == 214e-12);
  CHECK_THROWS_AS(curve.at(0.1e-12), InvalidArgument);
  CHECK_THROWS_AS(curve.at(2.0e-12), InvalidArgument);

  // Brute-force oracle over the same 0.1 pJ ladder.
  for (int m : {2, 4}) {
    const LevelChoice c = select_levels(m, curve);
    double best = 0.0, best_e = 0.0;
    for (int i = 0; i <= 40; ++i) {
      const double e = 1.8e-12 - i * 0.1e-12;
      if (e / ((m - 1.0) * (m - 1.0)) < 0.2e-12 * (1 - 1e-9)) break;
      double t = 0.0;
      for (int k = 2; k <= m; ++k) t = std::max(t, curve.at(std::pow((k - 1.0) / (m - 1.0), 2) * e));
      const double r = std::log2(double(m)) / t;
      if (r > best) {
        best = r;
        best_e = e;
      }
    }
    CHECK(c.rate == doctest::Approx(best).epsilon(1e-14));
    CHECK(c.e_max == doctest::Approx(best_e).epsilon(1e-12));
    CHECK(c.rate == doctest::Approx(transmission_rate(m, c.t_mod)).epsilon(1e-15));
  }
  const LevelChoice ook = select_levels(2, curve);
  CHECK(ook.e_max == doctest::Approx(1.8e-12));
  CHECK(ook.t_mod == 214e-12);

  // Flat curve: every e_max ties, the largest is kept.
  DurationCurve flat{{0.2e-12, 1.8e-12}, {280e-12, 280e-12}};
  CHECK(select_levels(4, flat).e_max == doctest::Approx(1.8e-12));
  DurationCurve narrow{{1.0e-12, 1.8e-12}, {250e-12, 214e-12}};
  CHECK_THROWS_AS(select_levels(4, narrow), InvalidArgument);
}
