#pragma once

// Minimum-time-broadening pulse design: for a fixed support [-t_p/2, t_p/2],
// minimize the received effective duration over real pulses of energy E whose
// spectrum keeps (1 - eps) of the energy inside |f| <= w_max/2; then search
// t_p for the fixed point where received and transmit durations coincide.

#include "mtb/basis.hpp"
#include "mtb/propagator.hpp"
#include "mtb/signal.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mtb {

enum class GradientMethod { FiniteDifference, Adjoint };

std::string to_string(GradientMethod g);

struct DesignOptions {
  /// Basis size; 0 selects default_basis_size(t_p, w_max).
  std::size_t n_funcs = 0;
  int perturbed_starts = 4;
  /// Perturbation norm relative to the coefficient norm.
  double perturbation = 0.05;
  std::uint64_t seed = 1;
  GradientMethod gradient = GradientMethod::Adjoint;
  /// Central-difference step relative to sqrt(E).
  double fd_step = 1e-4;
  /// Penalty weights applied in turn to ((1 - eps - inband)_+ / eps)^2.
  std::vector<double> penalty_weights = {1.0, 10.0, 100.0, 1000.0};
  /// BFGS iteration cap per start and penalty stage.
  int max_iterations = 40;
  /// A stage ends after two iterations with relative objective change below this.
  double tolerance = 1e-6;
  /// Worker threads for multi-starts (results are independent of it).
  int jobs = 1;
  /// Nonlinear phase per step used inside the search (0: the problem's
  /// setting). The returned design is always re-evaluated with problem.ssfm.
  double search_phase_per_step = 1e-2;
};

struct TraceRecord {
  int start = 0;
  int stage = 0;
  int iteration = 0;
  double objective = 0.0;
  double rx_duration = 0.0;
  double inband = 0.0;
  double step_norm = 0.0;
};

struct DesignProblem {
  double energy = 0.0;  // J
  double t_p = 0.0;     // s
  double w_max = 50e9;  // Hz, full width
  double eps = 1e-4;
  FiberParams fiber;
  SsfmConfig ssfm;
  DesignOptions options;
  /// Optional grid override; channel_grid(t_p, w_max, fiber) otherwise.
  std::optional<TimeGrid> grid;
  /// Extra starting pulses (same dt as the design grid; resampled by time).
  std::vector<SampledSignal> warm_starts;
  /// Called once per finished BFGS iteration (from worker threads if jobs > 1).
  std::function<void(const TraceRecord&)> on_trace;

  void validate() const;
  TimeGrid design_grid() const;
};

struct DesignResult {
  Eigen::VectorXd coeffs;
  SampledSignal pulse;
  double rx_duration = 0.0;         // s
  double tx_duration_check = 0.0;   // support width of pulse, s
  double inband = 0.0;
  bool converged = false;
  std::vector<double> objective_history;  // winning start, per iteration
  std::vector<TraceRecord> trace;         // all starts
  int start_index = -1;                   // -1: baseline pulse returned as is
  double baseline_rx = 0.0;               // 0 when there is no baseline (gamma = 0)
  double baseline_inband = 0.0;
  bool baseline_feasible = false;
  std::size_t evaluations = 0;

  DesignResult(SampledSignal p) : pulse(std::move(p)) {}
};

/// Received effective duration of a pulse on a fiber (energy restoration does
/// not change it).
double rx_duration(const SampledSignal& pulse, const FiberParams& fiber, const SsfmConfig& cfg,
                   double eps);

/// Energy-matched baseline of the design: the soliton of energy E restricted
/// to [-t_p/2, t_p/2] and rescaled to energy E. Requires gamma > 0.
SampledSignal baseline_pulse(const DesignProblem& problem, const TimeGrid& grid);

DesignResult minimize_rx_duration(const DesignProblem& problem);

/// Received effective duration of synthesize(basis, a) under the search
/// settings of problem, with its gradient in grad (method taken from
/// problem.options.gradient). Exposed for checking one gradient route
/// against the other.
double rx_duration_gradient(const DesignProblem& problem, const BasisSet& basis,
                            const Eigen::VectorXd& a, Eigen::VectorXd& grad);

struct FixedPointOptions {
  double tolerance = 1e-12;  // s, on |rx - t_p|
  double t_min = 50e-12;
  double t_max = 5000e-12;
  double growth = 1.25;
  int max_evaluations = 30;
  /// Seed of the bracket search; 0 picks sqrt(|beta2| L) ln((2 - eps)/eps),
  /// or the soliton duration if that is shorter.
  double initial = 0.0;
};

struct FixedPointSample {
  double t_p = 0.0;
  double rx_duration = 0.0;
};

struct MtbResult {
  double t_star = 0.0;
  DesignResult design;
  std::vector<FixedPointSample> history;  // evaluation order
  double bracket_left = 0.0;              // rx > t_p
  double bracket_right = 0.0;             // rx < t_p
  std::vector<std::string> diagnostics;   // monotonicity violations etc.
  bool converged = false;

  MtbResult(DesignResult d) : design(std::move(d)) {}
};

/// Fixed point rx_duration(t_p) = t_p by bracketing and Illinois regula falsi.
/// Each evaluation warm-starts from the nearest designs already found.
MtbResult find_mtb(double energy, double w_max, double eps, const FiberParams& fiber,
                   const SsfmConfig& ssfm, const DesignOptions& options = {},
                   const FixedPointOptions& fp = {},
                   const std::function<void(const FixedPointSample&)>& on_sample = {});

}  // namespace mtb
