#pragma once

// Symmetric split-step Fourier integration of
//   dq/dz = -(alpha/2) q - i (beta2/2) d^2q/dt^2 + i gamma |q|^2 q
// in retarded time, plus the noiseless receiver-side renormalization.

#include "mtb/signal.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mtb {

enum class ChannelKind { DispersionOnly, Lossless, Lossy };

std::string to_string(ChannelKind kind);

/// Fiber constants in the customary engineering units.
struct FiberParams {
  double alpha_db_per_km = 0.0;  // dB/km, >= 0
  double beta2 = -21.7;          // ps^2/km
  double gamma = 1.2;            // 1/(W km), >= 0
  double length_km = 80.0;       // km, > 0

  void validate() const;
  ChannelKind kind() const;
  /// Power attenuation coefficient in 1/km (ln(10)/10 per dB).
  double alpha_linear() const;
  /// beta2 converted to s^2/km.
  double beta2_si() const { return beta2 * 1e-24; }
  /// Power transmission exp(-alpha L) over the full length.
  double power_transmission() const;

  static FiberParams dispersion_only(double length_km = 80.0);
  static FiberParams lossless(double length_km = 80.0);
  static FiberParams lossy(double length_km = 80.0);
};

struct SsfmConfig {
  double max_nonlinear_phase_per_step = 1e-3;  // rad
  double max_dz = 0.1;                         // km
  /// Re-run with halved steps and compare (costly; off in inner loops).
  bool verify_convergence = false;
  double convergence_tol = 1e-6;
  int max_refinements = 3;
  /// Reject inputs/outputs with more than this energy share outside the
  /// central half of the window.
  double edge_tolerance = 1e-4;
  bool check_margins = true;

  void validate() const;
  SsfmConfig refined() const;
};

/// Record of one forward run kept for the reverse sweep.
struct PropagationTape {
  std::vector<double> nl_dz;                 // nonlinear sub-step lengths
  std::vector<ComplexVector> pre_nonlinear;  // field entering each nonlinear sub-step
  std::vector<ComplexVector> ops;            // distinct transfer functions (1/N folded in)
  /// Linear sub-steps in order; each applies ops[first] then ops[second] (or none if -1).
  std::vector<std::pair<int, int>> linear_seq;

  void clear();
};

/// Reusable integrator bound to a grid and a fiber. Stateless after
/// construction; each call owns its scratch buffers.
class SplitStepPropagator {
 public:
  SplitStepPropagator(TimeGrid grid, FiberParams fiber, SsfmConfig cfg = {});

  const TimeGrid& grid() const noexcept { return grid_; }
  const FiberParams& fiber() const noexcept { return fiber_; }
  const SsfmConfig& config() const noexcept { return cfg_; }

  /// q(t, L) for q(t, 0) = input, with margin and (optional) convergence checks.
  SampledSignal propagate(const SampledSignal& input) const;

  /// Snapshots of q(t, z) at each requested z (ascending, within [0, L]).
  std::vector<SampledSignal> propagate_snapshots(const SampledSignal& input,
                                                 std::span<const double> z_km) const;

  /// Raw kernel: integrates field in place from z_from to z_to (km).
  /// No margin checks. Optionally records a tape for reverse-mode gradients.
  void integrate(ComplexVector& field, double z_from, double z_to,
                 PropagationTape* tape = nullptr) const;

  /// Pulls the output-side gradient g (dJ = Re sum conj(g) dq_out) back to the
  /// input side through a recorded run. The step schedule is held fixed.
  ComplexVector pullback(const PropagationTape& tape, ComplexVector g) const;

  /// Applies one linear sub-step of length dz (km) in place: dispersion and
  /// loss in the frequency domain.
  void linear_step(ComplexVector& field, double dz) const;

  /// Energy share outside the central half of the window.
  static double edge_fraction(std::span<const Complex> field);

 private:
  ComplexVector transfer(double dz) const;
  void apply_transfer(ComplexVector& field, const ComplexVector& h) const;
  SampledSignal propagate_once(const SampledSignal& input, const SsfmConfig& cfg) const;

  TimeGrid grid_;
  FiberParams fiber_;
  SsfmConfig cfg_;
  std::vector<double> linear_coeff_re_;  // -alpha/2 per bin
  std::vector<double> linear_coeff_im_;  // beta2 w^2 / 2 per bin
};

SampledSignal propagate(const SampledSignal& s, const FiberParams& fiber,
                        const SsfmConfig& cfg = {});

/// |q(t, L)| samplewise, as a real signal.
SampledSignal received_magnitude(const SampledSignal& s, const FiberParams& fiber,
                                 const SsfmConfig& cfg = {});

/// Scales s so its energy equals target (noiseless amplifier).
SampledSignal amplify_to_energy(const SampledSignal& s, double target_joules);

/// Group-delay spread (s) accumulated over the fiber by a component at
/// frequency offset f (Hz): 2 pi |beta2| L f.
double dispersive_spread(const FiberParams& fiber, double f);

/// Grid for pulses of the given duration on this fiber: spacing 1/(8 w_max)
/// and a window of at least 8 durations that also holds the dispersive
/// spread of components up to 4 w_max without wrap-around. oversample
/// divides dt further (for pulses with hard edges) at the same window.
TimeGrid channel_grid(double pulse_duration, double w_max, const FiberParams& fiber,
                      int oversample = 1);

/// Largest effective duration of |q(t, z)| over n_points evenly spaced z in
/// (0, L]. Diagnostic only.
double max_duration_along_channel(const SampledSignal& s, const FiberParams& fiber,
                                  const SsfmConfig& cfg, double eps, int n_points = 16);

}  // namespace mtb
