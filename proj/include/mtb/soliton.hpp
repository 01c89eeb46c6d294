#pragma once

// Closed-form fundamental-soliton baseline s(t) = A sech(A sqrt(gamma/|beta2|) t).

#include "mtb/propagator.hpp"
#include "mtb/signal.hpp"

namespace mtb {

/// ln((2 - eps) / eps): the sech energy-quantile factor shared by the
/// duration, bandwidth and rate formulas.
double sech_quantile_log(double eps);

/// Fundamental soliton for a fiber (only beta2 and gamma matter).
struct SolitonSpec {
  double amplitude;  // sqrt(W)
  double beta2;      // ps^2/km
  double gamma;      // 1/(W km)

  static SolitonSpec from_amplitude(double amplitude, const FiberParams& fiber);
  static SolitonSpec from_energy(double energy, const FiberParams& fiber);

  /// sqrt(|beta2|/gamma) in s sqrt(W).
  double scale() const;
  double energy() const;
  double duration(double eps) const;
  double bandwidth(double eps) const;
  double value(double t) const;
  /// |S(f)| of the untruncated pulse.
  double spectrum_magnitude(double f) const;
};

double soliton_amplitude_for_energy(double energy, const FiberParams& fiber);
double soliton_energy(double amplitude, const FiberParams& fiber);
double soliton_duration(double amplitude, double eps, const FiberParams& fiber);
/// Full width of the band holding (1 - eps) of the soliton's spectral energy.
double soliton_bandwidth(double amplitude, double eps, const FiberParams& fiber);
/// (1/pi^2) ln^2((2 - eps)/eps), independent of amplitude.
double soliton_tbp(double eps);

/// Largest soliton energy whose effective bandwidth does not exceed w_max.
double max_soliton_energy(double w_max, double eps, const FiberParams& fiber);

/// Untruncated sech pulse of the given amplitude sampled on grid.
SampledSignal soliton_pulse(double amplitude, const FiberParams& fiber, const TimeGrid& grid);

/// Soliton of energy E zeroed outside [-T_s/2, T_s/2]; carries (1 - eps) E.
SampledSignal truncated_soliton(double energy, double eps, const FiberParams& fiber,
                                const TimeGrid& grid);

/// Same soliton zeroed outside [-window/2, window/2] (used as an in-window
/// baseline when T_s exceeds a design window).
SampledSignal windowed_soliton(double energy, double window, const FiberParams& fiber,
                               const TimeGrid& grid);

/// Upper bound on the rate of M-level energy modulation of isolated solitons:
/// pi^2 W_max log2(M) / ((M - 1)^2 ln^2((2 - eps)/eps)) bit/s.
double soliton_em_rate_bound(int m_levels, double w_max, double eps);

/// Received effective duration of the truncated soliton of energy E over the
/// fiber, on soliton_grid(E, eps, w_max, fiber).
double truncated_soliton_rx_duration(double energy, double eps, double w_max, const FiberParams& fiber,
                                     const SsfmConfig& ssfm = {});

/// Grid suited to a truncated soliton of energy E on this fiber: spacing
/// 1/(32 w_max), window at least 8 T_s and wide enough for dispersive spread.
TimeGrid soliton_grid(double energy, double eps, double w_max, const FiberParams& fiber);

}  // namespace mtb
