#pragma once

// Energy modulation of isolated pulses: M quadratically spaced energy levels,
// one pulse per slot, detection by slot energy.

#include "mtb/propagator.hpp"
#include "mtb/signal.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mtb {

/// ((m - 1)/(M - 1))^2 e_max for m = 1..M; M a power of two >= 2.
std::vector<double> energy_levels(int m_levels, double e_max);

/// Largest of all transmit and received durations.
double modulation_interval(std::span<const double> tx_durations, std::span<const double> rx_durations);

double transmission_rate(int m_levels, double t_mod);
double spectral_efficiency(int m_levels, double t_mod, double w_eff);
double time_bandwidth_product(double t_mod, double w_eff);

struct EmScheme {
  int m_levels = 2;
  double e_max = 0.0;
  std::vector<double> energies;        // nominal levels, energies[0] == 0
  std::vector<SampledSignal> pulses;   // levels 2..M, all on one grid
  std::vector<double> pulse_energies;  // energy of each pulse as transmitted
  std::vector<double> tx_durations;    // support widths
  std::vector<double> rx_durations;    // received effective durations
  std::vector<double> tx_bandwidths;
  std::vector<double> rx_bandwidths;
  double eps = 1e-4;
  double t_mod = 0.0;
  double w_eff = 0.0;

  const TimeGrid& grid() const { return pulses.front().grid(); }
  double rate() const { return transmission_rate(m_levels, t_mod); }
  double efficiency() const { return spectral_efficiency(m_levels, t_mod, w_eff); }
};

/// Measures each pulse (transmit support, received duration and bandwidths
/// over the fiber) and derives t_mod and w_eff. pulses[m] is level m + 2.
/// Pulses may come on different grids of one spacing; they are re-embedded
/// on the widest.
EmScheme make_scheme(int m_levels, double e_max, std::vector<SampledSignal> pulses,
                     const FiberParams& fiber, const SsfmConfig& ssfm, double eps);

/// Truncated solitons at every nonzero level, on the soliton grid of the
/// lowest level (the longest pulse).
EmScheme soliton_scheme(int m_levels, double e_max, double w_max, double eps,
                        const FiberParams& fiber, const SsfmConfig& ssfm);

/// Slot geometry of a pulse train. Slot k is centered on sample
/// first_center + k * slot_samples; slot_samples = ceil(t_mod / dt), so slots
/// are at least t_mod long.
struct TrainLayout {
  TimeGrid grid;
  std::size_t first_center = 0;
  std::size_t slot_samples = 0;
  std::size_t n_slots = 0;

  double slot_length() const { return static_cast<double>(slot_samples) * grid.dt(); }
};

/// Train grid for n_slots slots of this scheme: same dt as the pulses, with a
/// guard of half the pulse window on both sides for dispersive spreading.
TrainLayout train_layout(const EmScheme& scheme, std::size_t n_slots);

struct PulseTrain {
  SampledSignal signal;
  TrainLayout layout;
};

/// Sum over slots of p_{m_k}(t - kT); messages take values 1..M.
PulseTrain modulate(std::span<const int> messages, const EmScheme& scheme);

/// Energy inside each slot window (cell rule at the slot edges).
std::vector<double> slot_energies(const SampledSignal& received, const TrainLayout& layout);

/// Level index in 1..M with the nearest nominal energy; ties go to the lower level.
int nearest_level(double energy, std::span<const double> levels);

std::vector<int> detect(const SampledSignal& received, const EmScheme& scheme, const TrainLayout& layout);

struct LinkReport {
  std::vector<int> transmitted;
  std::vector<int> detected;
  std::size_t symbol_errors = 0;
  std::vector<double> slot_energies;
  /// Largest |slot energy - isolated pulse energy| over all slots.
  double max_leakage = 0.0;
  double rate = 0.0;
  double spectral_efficiency = 0.0;
  double tbp = 0.0;
};

/// Modulate, propagate, restore the transmitted energy, detect, count.
LinkReport evaluate_link(const EmScheme& scheme, const FiberParams& fiber, const SsfmConfig& ssfm,
                         std::span<const int> messages);

/// Uniform random messages in 1..M from a seeded engine.
std::vector<int> random_messages(int m_levels, std::size_t count, std::uint64_t seed);

/// Received-duration curve T*(E) sampled at increasing energies, linearly
/// interpolated.
struct DurationCurve {
  std::vector<double> energies;
  std::vector<double> durations;

  double at(double energy) const;
  double min_energy() const { return energies.front(); }
  double max_energy() const { return energies.back(); }
};

struct LevelChoice {
  double e_max = 0.0;
  double t_mod = 0.0;
  double rate = 0.0;
};

/// Sweeps e_max over [curve min, curve max] in steps of `step` (from the top)
/// and returns the one maximizing log2(M) / max_m T*(E_m); ties keep the
/// larger e_max.
LevelChoice select_levels(int m_levels, const DurationCurve& curve, double step = 0.1e-12);

}  // namespace mtb
