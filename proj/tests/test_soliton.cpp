#include "doctest.h"

#include "mtb/errors.hpp"
#include "mtb/soliton.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

using namespace mtb;

namespace {

const FiberParams kFiber = FiberParams::lossless();
const double kScale = std::sqrt(21.7e-24 / 1.2);  // sqrt(|beta2|/gamma), s sqrt(W)

}  // namespace

TEST_CASE("energy and amplitude are inverse closed forms") {
  CHECK(soliton_amplitude_for_energy(2.0 * kScale, kFiber) == doctest::Approx(1.0).epsilon(1e-14));
  for (double e : {1e-15, 0.2e-12, 1.8e-12, 5e-12})
    CHECK(soliton_energy(soliton_amplitude_for_energy(e, kFiber), kFiber) == doctest::Approx(e).epsilon(1e-12));
  const double a = soliton_amplitude_for_energy(1.8e-12, kFiber);
  CHECK(soliton_bandwidth(a, 1e-4, kFiber) == doctest::Approx(50e9).epsilon(5e-3));
  CHECK_THROWS_AS(soliton_amplitude_for_energy(0.0, kFiber), InvalidArgument);
  CHECK_THROWS_AS(soliton_amplitude_for_energy(1e-12, FiberParams::dispersion_only()), InvalidArgument);
}

TEST_CASE("duration, bandwidth and their product") {
  const double log_q = std::log((2.0 - 1e-4) / 1e-4);
  CHECK(soliton_tbp(1e-4) == doctest::Approx(log_q * log_q / (std::numbers::pi * std::numbers::pi)));
  CHECK(soliton_tbp(1e-4) == doctest::Approx(9.94).epsilon(0.01 / 9.94));
  for (double a : {0.01, 0.05, 0.2}) {
    const double t = soliton_duration(a, 1e-4, kFiber), w = soliton_bandwidth(a, 1e-4, kFiber);
    CHECK(t * w == doctest::Approx(soliton_tbp(1e-4)).epsilon(1e-14));
    CHECK(soliton_duration(2 * a, 1e-4, kFiber) == doctest::Approx(t / 2).epsilon(1e-14));
    CHECK(soliton_bandwidth(2 * a, 1e-4, kFiber) == doctest::Approx(2 * w).epsilon(1e-14));
    CHECK(t == doctest::Approx(kScale / a * log_q).epsilon(1e-14));
  }
}

TEST_CASE("maximum soliton energy for the band limit") {
  const double e = max_soliton_energy(50e9, 1e-4, kFiber);
  CHECK(e == doctest::Approx(1.8e-12).epsilon(0.02));
  CHECK(max_soliton_energy(100e9, 1e-4, kFiber) == doctest::Approx(2 * e).epsilon(1e-14));
  CHECK(soliton_bandwidth(soliton_amplitude_for_energy(e, kFiber), 1e-4, kFiber) == doctest::Approx(50e9).epsilon(1e-10));
}

TEST_CASE("sampled soliton metrology agrees with the closed forms") {
  const double e = 1.0e-12;
  const auto spec = SolitonSpec::from_energy(e, kFiber);
  const TimeGrid g(16384, 0.25e-12);
  const auto s = soliton_pulse(spec.amplitude, kFiber, g);
  CHECK(energy(s) == doctest::Approx(e).epsilon(1e-6));
  CHECK(effective_duration(s, 1e-4) == doctest::Approx(spec.duration(1e-4)).epsilon(5e-3));
  CHECK(effective_bandwidth(s, 1e-4) == doctest::Approx(spec.bandwidth(1e-4)).epsilon(5e-3));

  // Main lobe of |S(f)| against the sech transform.
  const Spectrum sp = spectrum(s);
  const double peak = spec.spectrum_magnitude(0.0);
  CHECK(peak == doctest::Approx(std::numbers::pi * kScale));
  for (std::size_t k = 0; k < sp.size(); ++k) {
    const double f = sp.frequency(k);
    const double ref = spec.spectrum_magnitude(f);
    if (ref < 0.1 * peak) continue;
    CHECK(std::abs(sp[k]) == doctest::Approx(ref).epsilon(1e-4));
  }
}

TEST_CASE("truncated soliton keeps 1 - eps of its energy") {
  for (double e : {0.2e-12, 0.9e-12, 1.8e-12}) {
    const double ts = SolitonSpec::from_energy(e, kFiber).duration(1e-4);
    const TimeGrid g = soliton_grid(e, 1e-4, 50e9, kFiber);
    const auto s = truncated_soliton(e, 1e-4, kFiber, g);
    CHECK(energy(s) / e == doctest::Approx(1.0 - 1e-4).epsilon(1e-3));
    CHECK(support_width(s) <= ts + 1e-18);
    CHECK(support_width(s) >= ts - 2 * g.dt());
  }
  CHECK_THROWS_AS(truncated_soliton(0.2e-12, 1e-4, kFiber, TimeGrid(64, 1e-12)), InvalidArgument);
}

TEST_CASE("soliton energy-modulation rate bound") {
  for (int m : {4, 8, 16, 32}) {
    const double expect = 5e9 * std::log2(m) / ((m - 1.0) * (m - 1.0));
    CHECK(soliton_em_rate_bound(m, 50e9, 1e-4) == doctest::Approx(expect).epsilon(0.02));
  }
  const double c = soliton_tbp(1e-4);
  CHECK(soliton_em_rate_bound(2, 50e9, 1e-4) == doctest::Approx(50e9 / c).epsilon(1e-14));
  CHECK(soliton_em_rate_bound(4, 100e9, 1e-4) == doctest::Approx(2 * soliton_em_rate_bound(4, 50e9, 1e-4)));
  CHECK(soliton_em_rate_bound(4, 50e9, 1e-4) == doctest::Approx(1.12e9).epsilon(0.005));
  CHECK(soliton_em_rate_bound(4, 50e9, 1e-4) == doctest::Approx(1.11e9).epsilon(0.01));
  CHECK_THROWS_AS(soliton_em_rate_bound(3, 50e9, 1e-4), InvalidArgument);
}

TEST_CASE("received truncated solitons on the lossy fiber") {
  const auto lossy = FiberParams::lossy();
  for (auto [e, expect] : {std::pair{1.2e-12, 338e-12}, std::pair{1.8e-12, 386e-12}}) {
    const TimeGrid g = soliton_grid(e, 1e-4, 50e9, lossy);
    const auto rx = propagate(truncated_soliton(e, 1e-4, lossy, g), lossy);
    CHECK(effective_duration(rx, 1e-4) == doctest::Approx(expect).epsilon(0.02));
  }
}
