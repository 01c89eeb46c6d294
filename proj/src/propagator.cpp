#include "mtb/propagator.hpp"

#include "mtb/errors.hpp"
#include "mtb/fft.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace mtb {

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::DispersionOnly: return "dispersion-only";
    case ChannelKind::Lossless: return "lossless";
    case ChannelKind::Lossy: return "lossy";
  }
  return "unknown";
}

void FiberParams::validate() const {
  if (!(alpha_db_per_km >= 0.0) || !std::isfinite(alpha_db_per_km))
    throw InvalidArgument("FiberParams: alpha must be >= 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw InvalidArgument("FiberParams: gamma must be >= 0");
  if (!std::isfinite(beta2)) throw InvalidArgument("FiberParams: beta2 must be finite");
  if (!(length_km > 0.0) || !std::isfinite(length_km))
    throw InvalidArgument("FiberParams: length must be > 0");
  if (gamma == 0.0 && alpha_db_per_km > 0.0)
    throw InvalidArgument("FiberParams: lossy fibers need gamma > 0 (no lossy linear model)");
}

ChannelKind FiberParams::kind() const {
  if (gamma == 0.0) return ChannelKind::DispersionOnly;
  return alpha_db_per_km == 0.0 ? ChannelKind::Lossless : ChannelKind::Lossy;
}

double FiberParams::alpha_linear() const { return alpha_db_per_km * std::log(10.0) / 10.0; }

double FiberParams::power_transmission() const { return std::exp(-alpha_linear() * length_km); }

FiberParams FiberParams::dispersion_only(double length_km) {
  return FiberParams{0.0, -21.7, 0.0, length_km};
}
FiberParams FiberParams::lossless(double length_km) {
  return FiberParams{0.0, -21.7, 1.2, length_km};
}
FiberParams FiberParams::lossy(double length_km) {
  return FiberParams{0.2, -21.7, 1.2, length_km};
}

void SsfmConfig::validate() const {
  if (!(max_nonlinear_phase_per_step > 0.0))
    throw InvalidArgument("SsfmConfig: max_nonlinear_phase_per_step must be > 0");
  if (!(max_dz > 0.0)) throw InvalidArgument("SsfmConfig: max_dz must be > 0");
  if (max_refinements < 1) throw InvalidArgument("SsfmConfig: max_refinements must be >= 1");
}

SsfmConfig SsfmConfig::refined() const {
  SsfmConfig c = *this;
  c.max_nonlinear_phase_per_step *= 0.5;
  c.max_dz *= 0.5;
  return c;
}

void PropagationTape::clear() {
  nl_dz.clear();
  pre_nonlinear.clear();
  ops.clear();
  linear_seq.clear();
}

namespace {

// Step lengths live on the ladder max_dz * r^j so transfer functions can be
// reused; the chosen rung never exceeds the nonlinear-phase bound.
constexpr double kRungRatio = 0.9170040432046712;  // 2^(-1/8)

// exp(i phi) for |phi| small; Taylor through phi^7, error < phi^8 / 8!.
inline Complex small_phase(double phi) {
  const double p2 = phi * phi;
  const double c = 1.0 - p2 * (0.5 - p2 * (1.0 / 24.0 - p2 * (1.0 / 720.0)));
  const double s = phi * (1.0 - p2 * (1.0 / 6.0 - p2 * (1.0 / 120.0 - p2 * (1.0 / 5040.0))));
  return {c, s};
}

// Applies q <- q exp(i gamma |q|^2 dz); returns max |q|^2 (unchanged by the map).
double nonlinear_step(ComplexVector& q, double gamma, double dz, double peak_hint) {
  const double k = gamma * dz;
  double peak = 0.0;
  if (k * peak_hint <= 0.05) {
    for (auto& v : q) {
      const double p = std::norm(v);
      peak = std::max(peak, p);
      v *= small_phase(k * p);
    }
  } else {
    for (auto& v : q) {
      const double p = std::norm(v);
      peak = std::max(peak, p);
      v *= std::polar(1.0, k * p);
    }
  }
  return peak;
}

double peak_power(const ComplexVector& q) {
  double peak = 0.0;
  for (const auto& v : q) peak = std::max(peak, std::norm(v));
  return peak;
}

struct Step {
  double dz;
  int rung;  // -1: off-ladder (final remainder)
};

class OpStore {
 public:
  explicit OpStore(std::vector<ComplexVector>& ops) : ops_(ops) {}

  // Transfer function for dz/2 of the given step.
  int half(const Step& s, const std::function<ComplexVector(double)>& make) {
    if (s.rung < 0) {
      ops_.push_back(make(0.5 * s.dz));
      return static_cast<int>(ops_.size()) - 1;
    }
    return lookup(half_, s.rung, 0.5 * s.dz, make);
  }
  int full(const Step& s, const std::function<ComplexVector(double)>& make) {
    return lookup(full_, s.rung, s.dz, make);
  }

 private:
  int lookup(std::map<int, int>& m, int rung, double dz,
             const std::function<ComplexVector(double)>& make) {
    auto it = m.find(rung);
    if (it != m.end()) return it->second;
    ops_.push_back(make(dz));
    const int idx = static_cast<int>(ops_.size()) - 1;
    m.emplace(rung, idx);
    return idx;
  }

  std::vector<ComplexVector>& ops_;
  std::map<int, int> half_;
  std::map<int, int> full_;
};

double l2_distance_normalized(std::span<const Complex> a, std::span<const Complex> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += std::norm(a[k] - b[k]);
    den += std::norm(b[k]);
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

}  // namespace

SplitStepPropagator::SplitStepPropagator(TimeGrid grid, FiberParams fiber, SsfmConfig cfg)
    : grid_(grid), fiber_(fiber), cfg_(cfg) {
  fiber_.validate();
  cfg_.validate();
  const std::size_t n = grid_.size();
  linear_coeff_re_.assign(n, -0.5 * fiber_.alpha_linear());
  linear_coeff_im_.resize(n);
  const double b2 = fiber_.beta2_si();
  for (std::size_t k = 0; k < n; ++k) {
    const double w = fft::angular_frequency(k, n, grid_.dt());
    linear_coeff_im_[k] = 0.5 * b2 * w * w;
  }
}

ComplexVector SplitStepPropagator::transfer(double dz) const {
  const std::size_t n = grid_.size();
  ComplexVector h(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k)
    h[k] = std::polar(std::exp(linear_coeff_re_[k] * dz) * inv_n, linear_coeff_im_[k] * dz);
  return h;
}

void SplitStepPropagator::apply_transfer(ComplexVector& field, const ComplexVector& h) const {
  const auto& plan = fft::plan(field.size());
  plan.forward(field.data(), field.data());
  for (std::size_t k = 0; k < field.size(); ++k) field[k] *= h[k];
  plan.backward(field.data(), field.data());
}

void SplitStepPropagator::linear_step(ComplexVector& field, double dz) const {
  if (field.size() != grid_.size()) throw InvalidArgument("linear_step: size mismatch");
  apply_transfer(field, transfer(dz));
}

double SplitStepPropagator::edge_fraction(std::span<const Complex> field) {
  const std::size_t n = field.size();
  double total = 0.0, edge = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = std::norm(field[k]);
    total += p;
    if (k < n / 4 || k >= n - n / 4) edge += p;
  }
  return total > 0.0 ? edge / total : 0.0;
}

void SplitStepPropagator::integrate(ComplexVector& field, double z_from, double z_to,
                                    PropagationTape* tape) const {
  if (field.size() != grid_.size()) throw InvalidArgument("integrate: size mismatch");
  const double span = z_to - z_from;
  if (tape) tape->clear();
  if (!(span > 0.0)) return;

  std::vector<ComplexVector> local_ops;
  std::vector<ComplexVector>& ops = tape ? tape->ops : local_ops;
  auto make = [this](double dz) { return transfer(dz); };
  const auto& plan = fft::plan(field.size());

  auto apply = [&](int a, int b) {
    plan.forward(field.data(), field.data());
    const ComplexVector& ha = ops[static_cast<std::size_t>(a)];
    if (b < 0) {
      for (std::size_t k = 0; k < field.size(); ++k) field[k] *= ha[k];
    } else {
      // Two stored transfers each carry 1/N; undo one.
      const ComplexVector& hb = ops[static_cast<std::size_t>(b)];
      const double nn = static_cast<double>(field.size());
      for (std::size_t k = 0; k < field.size(); ++k) field[k] *= ha[k] * hb[k] * nn;
    }
    plan.backward(field.data(), field.data());
    if (tape) tape->linear_seq.emplace_back(a, b);
  };

  if (fiber_.gamma == 0.0) {
    // Linear channel: one exact frequency-domain step.
    ops.push_back(transfer(span));
    apply(0, -1);
    return;
  }

  const double gamma = fiber_.gamma;
  const double phase = cfg_.max_nonlinear_phase_per_step;
  const double max_dz = cfg_.max_dz;
  const double end_tol = 1e-12 * span;

  auto choose = [&](double peak, double remaining) -> Step {
    double bound = max_dz;
    if (peak > 0.0) bound = std::min(bound, phase / (gamma * peak));
    int rung = 0;
    if (bound < max_dz)
      rung = static_cast<int>(std::ceil(std::log(bound / max_dz) / std::log(kRungRatio) - 1e-12));
    const double dz = max_dz * std::pow(kRungRatio, rung);
    if (dz >= remaining - end_tol) return {remaining, -1};
    return {dz, rung};
  };

  OpStore store(ops);
  double remaining = span;
  double peak = peak_power(field);
  Step step = choose(peak, remaining);
  apply(store.half(step, make), -1);

  while (true) {
    if (tape) {
      tape->pre_nonlinear.push_back(field);
      tape->nl_dz.push_back(step.dz);
    }
    peak = nonlinear_step(field, gamma, step.dz, peak);
    remaining -= step.dz;
    if (step.rung < 0 || remaining <= end_tol) {
      apply(store.half(step, make), -1);
      break;
    }
    const Step next = choose(peak, remaining);
    if (next.rung == step.rung)
      apply(store.full(step, make), -1);
    else
      apply(store.half(step, make), store.half(next, make));
    step = next;
  }
}

ComplexVector SplitStepPropagator::pullback(const PropagationTape& tape, ComplexVector g) const {
  if (g.size() != grid_.size()) throw InvalidArgument("pullback: size mismatch");
  const auto& plan = fft::plan(g.size());
  const double nn = static_cast<double>(g.size());

  auto apply_adjoint = [&](const std::pair<int, int>& op) {
    plan.forward(g.data(), g.data());
    const ComplexVector& ha = tape.ops[static_cast<std::size_t>(op.first)];
    if (op.second < 0) {
      for (std::size_t k = 0; k < g.size(); ++k) g[k] *= std::conj(ha[k]);
    } else {
      const ComplexVector& hb = tape.ops[static_cast<std::size_t>(op.second)];
      for (std::size_t k = 0; k < g.size(); ++k) g[k] *= std::conj(ha[k] * hb[k]) * nn;
    }
    plan.backward(g.data(), g.data());
  };

  const std::size_t n_nl = tape.nl_dz.size();
  if (tape.linear_seq.size() != n_nl + 1) throw InvalidArgument("pullback: malformed tape");
  apply_adjoint(tape.linear_seq[n_nl]);
  const double gamma = fiber_.gamma;
  for (std::size_t i = n_nl; i-- > 0;) {
    const ComplexVector& q = tape.pre_nonlinear[i];
    const double k = gamma * tape.nl_dz[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      const Complex e = std::polar(1.0, k * std::norm(q[j]));
      const Complex u = q[j] * e;
      const double s = -2.0 * k * (std::conj(g[j]) * u).imag();
      g[j] = std::conj(e) * g[j] + s * q[j];
    }
    apply_adjoint(tape.linear_seq[i]);
  }
  return g;
}

SampledSignal SplitStepPropagator::propagate_once(const SampledSignal& input,
                                                  const SsfmConfig& cfg) const {
  ComplexVector field(input.samples().begin(), input.samples().end());
  if (&cfg == &cfg_) {
    integrate(field, 0.0, fiber_.length_km);
  } else {
    SplitStepPropagator alt(grid_, fiber_, cfg);
    alt.integrate(field, 0.0, fiber_.length_km);
  }
  return SampledSignal(grid_, std::move(field));
}

SampledSignal SplitStepPropagator::propagate(const SampledSignal& input) const {
  if (!(input.grid() == grid_)) throw InvalidArgument("propagate: grid mismatch");
  if (cfg_.check_margins && edge_fraction(input.samples()) > cfg_.edge_tolerance)
    throw GridOverflow("propagate: input energy outside the central half of the window exceeds " +
                       std::to_string(cfg_.edge_tolerance));

  SampledSignal out = propagate_once(input, cfg_);
  if (cfg_.verify_convergence && fiber_.gamma > 0.0) {
    SsfmConfig c = cfg_;
    double dist = 0.0;
    bool converged = false;
    for (int r = 0; r < cfg_.max_refinements; ++r) {
      c = c.refined();
      SampledSignal finer = propagate_once(input, c);
      dist = l2_distance_normalized(out.samples(), finer.samples());
      out = std::move(finer);
      if (dist <= cfg_.convergence_tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream os;
      os << "propagate: step halving still changes the output by " << dist
         << " (normalized L2) after " << cfg_.max_refinements << " refinements";
      throw NonConvergence(os.str());
    }
  }
  if (cfg_.check_margins && edge_fraction(out.samples()) > cfg_.edge_tolerance)
    throw GridOverflow("propagate: output energy reached the window edges; enlarge the window");
  return out;
}

std::vector<SampledSignal> SplitStepPropagator::propagate_snapshots(
    const SampledSignal& input, std::span<const double> z_km) const {
  if (!(input.grid() == grid_)) throw InvalidArgument("propagate_snapshots: grid mismatch");
  std::vector<SampledSignal> out;
  out.reserve(z_km.size());
  ComplexVector field(input.samples().begin(), input.samples().end());
  double z = 0.0;
  for (double target : z_km) {
    if (target < z || target > fiber_.length_km * (1.0 + 1e-12))
      throw InvalidArgument("propagate_snapshots: z points must ascend within [0, L]");
    integrate(field, z, target);
    z = target;
    if (cfg_.check_margins && edge_fraction(field) > cfg_.edge_tolerance)
      throw GridOverflow("propagate_snapshots: energy reached the window edges");
    out.emplace_back(grid_, field);
  }
  return out;
}

SampledSignal propagate(const SampledSignal& s, const FiberParams& fiber, const SsfmConfig& cfg) {
  return SplitStepPropagator(s.grid(), fiber, cfg).propagate(s);
}

SampledSignal received_magnitude(const SampledSignal& s, const FiberParams& fiber,
                                 const SsfmConfig& cfg) {
  return propagate(s, fiber, cfg).magnitude();
}

SampledSignal amplify_to_energy(const SampledSignal& s, double target) {
  if (!(target >= 0.0)) throw InvalidArgument("amplify_to_energy: target must be >= 0");
  const double e = energy(s);
  if (target == 0.0) return s.scaled(0.0);
  if (!(e > 0.0)) throw InvalidArgument("amplify_to_energy: zero-energy input with nonzero target");
  if (e == target) return s;
  return s.scaled(std::sqrt(target / e));
}

double dispersive_spread(const FiberParams& fiber, double f) {
  return 2.0 * std::numbers::pi * std::abs(fiber.beta2_si()) * fiber.length_km * std::abs(f);
}

TimeGrid channel_grid(double pulse_duration, double w_max, const FiberParams& fiber, int oversample) {
  if (!(pulse_duration > 0.0) || !(w_max > 0.0))
    throw InvalidArgument("channel_grid: duration and bandwidth must be positive");
  if (oversample < 1) throw InvalidArgument("channel_grid: oversample must be >= 1");
  const double nyquist = 4.0 * w_max;
  const double dt = 1.0 / (8.0 * w_max * oversample);
  const double window = std::max(8.0 * pulse_duration,
                                 2.1 * (0.5 * pulse_duration + dispersive_spread(fiber, nyquist)));
  return make_grid(window, dt);
}

double max_duration_along_channel(const SampledSignal& s, const FiberParams& fiber,
                                  const SsfmConfig& cfg, double eps, int n_points) {
  if (n_points < 1) throw InvalidArgument("max_duration_along_channel: n_points >= 1");
  std::vector<double> z(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) z[static_cast<std::size_t>(i)] = fiber.length_km * (i + 1) / n_points;
  const auto snaps = SplitStepPropagator(s.grid(), fiber, cfg).propagate_snapshots(s, z);
  double worst = 0.0;
  for (const auto& q : snaps) worst = std::max(worst, effective_duration(q, eps));
  return worst;
}

}  // namespace mtb
