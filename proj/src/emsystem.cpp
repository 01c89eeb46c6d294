#include "mtb/emsystem.hpp"

#include "mtb/errors.hpp"
#include "mtb/soliton.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <string>

namespace mtb {

namespace {

void require_levels(int m_levels, const char* who) {
  if (m_levels < 2 || !std::has_single_bit(static_cast<unsigned>(m_levels)))
    throw InvalidArgument(std::string(who) + ": M must be a power of two >= 2");
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + " must be > 0");
}

}  // namespace

std::vector<double> energy_levels(int m_levels, double e_max) {
  require_levels(m_levels, "energy_levels");
  require_positive(e_max, "energy_levels: e_max");
  std::vector<double> e(static_cast<std::size_t>(m_levels));
  const double m1 = m_levels - 1;
  for (int m = 1; m <= m_levels; ++m) {
    const double r = (m - 1) / m1;
    e[static_cast<std::size_t>(m - 1)] = r * r * e_max;
  }
  return e;
}

double modulation_interval(std::span<const double> tx, std::span<const double> rx) {
  if (tx.empty() && rx.empty()) throw InvalidArgument("modulation_interval: no durations");
  double t = 0.0;
  for (double v : tx) t = std::max(t, v);
  for (double v : rx) t = std::max(t, v);
  return t;
}

double transmission_rate(int m_levels, double t_mod) {
  require_levels(m_levels, "transmission_rate");
  require_positive(t_mod, "transmission_rate: t_mod");
  return std::log2(static_cast<double>(m_levels)) / t_mod;
}

double spectral_efficiency(int m_levels, double t_mod, double w_eff) {
  require_positive(w_eff, "spectral_efficiency: w_eff");
  return transmission_rate(m_levels, t_mod) / w_eff;
}

double time_bandwidth_product(double t_mod, double w_eff) {
  require_positive(t_mod, "time_bandwidth_product: t_mod");
  require_positive(w_eff, "time_bandwidth_product: w_eff");
  return t_mod * w_eff;
}

EmScheme make_scheme(int m_levels, double e_max, std::vector<SampledSignal> pulses,
                     const FiberParams& fiber, const SsfmConfig& ssfm, double eps) {
  EmScheme s;
  s.m_levels = m_levels;
  s.e_max = e_max;
  s.energies = energy_levels(m_levels, e_max);
  s.eps = eps;
  if (pulses.size() != static_cast<std::size_t>(m_levels - 1))
    throw InvalidArgument("make_scheme: need one pulse per nonzero level");
  // Pulses designed on different windows are re-embedded on the largest one.
  const auto widest = std::max_element(pulses.begin(), pulses.end(),
                                       [](const auto& a, const auto& b) { return a.size() < b.size(); });
  const TimeGrid common = widest->grid();
  for (auto& p : pulses)
    if (!(p.grid() == common)) p = embed_centered(p, common);
  const SplitStepPropagator prop(pulses.front().grid(), fiber, ssfm);
  for (const auto& p : pulses) {
    const SampledSignal rx = prop.propagate(p);
    s.pulse_energies.push_back(energy(p));
    s.tx_durations.push_back(support_width(p));
    s.rx_durations.push_back(effective_duration(rx, eps));
    s.tx_bandwidths.push_back(effective_bandwidth(p, eps));
    s.rx_bandwidths.push_back(effective_bandwidth(rx, eps));
  }
  s.pulses = std::move(pulses);
  s.t_mod = modulation_interval(s.tx_durations, s.rx_durations);
  s.w_eff = std::max(*std::max_element(s.tx_bandwidths.begin(), s.tx_bandwidths.end()),
                     *std::max_element(s.rx_bandwidths.begin(), s.rx_bandwidths.end()));
  return s;
}

EmScheme soliton_scheme(int m_levels, double e_max, double w_max, double eps,
                        const FiberParams& fiber, const SsfmConfig& ssfm) {
  const auto levels = energy_levels(m_levels, e_max);
  const TimeGrid grid = soliton_grid(levels[1], eps, w_max, fiber);
  std::vector<SampledSignal> pulses;
  for (std::size_t m = 1; m < levels.size(); ++m) pulses.push_back(truncated_soliton(levels[m], eps, fiber, grid));
  return make_scheme(m_levels, e_max, std::move(pulses), fiber, ssfm, eps);
}

TrainLayout train_layout(const EmScheme& scheme, std::size_t n_slots) {
  if (n_slots < 1) throw InvalidArgument("train_layout: need at least one slot");
  const TimeGrid& pg = scheme.grid();
  const double dt = pg.dt();
  const auto slot = static_cast<std::size_t>(std::ceil(scheme.t_mod / dt * (1.0 - 1e-12)));
  const std::size_t span = (n_slots - 1) * slot;
  const std::size_t n = std::bit_ceil(span + pg.size());
  TrainLayout l{TimeGrid(n, dt), n / 2 - span / 2, slot, n_slots};
  return l;
}

PulseTrain modulate(std::span<const int> messages, const EmScheme& scheme) {
  const TrainLayout layout = train_layout(scheme, std::max<std::size_t>(messages.size(), 1));
  ComplexVector q(layout.grid.size());
  const std::size_t pn = scheme.grid().size();
  const std::size_t pc = scheme.grid().center();
  for (std::size_t k = 0; k < messages.size(); ++k) {
    const int m = messages[k];
    if (m < 1 || m > scheme.m_levels)
      throw InvalidArgument("modulate: message " + std::to_string(m) + " outside 1.." +
                            std::to_string(scheme.m_levels));
    if (m == 1) continue;
    const auto& p = scheme.pulses[static_cast<std::size_t>(m - 2)];
    const std::size_t origin = layout.first_center + k * layout.slot_samples - pc;
    for (std::size_t j = 0; j < pn; ++j) q[origin + j] += p[j];
  }
  return {SampledSignal(layout.grid, std::move(q)), layout};
}

std::vector<double> slot_energies(const SampledSignal& received, const TrainLayout& layout) {
  if (!(received.grid() == layout.grid)) throw InvalidArgument("slot_energies: grid mismatch");
  std::vector<double> e(layout.n_slots, 0.0);
  const double half = 0.5 * static_cast<double>(layout.slot_samples);
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(half + 0.5));
  const auto n = static_cast<std::ptrdiff_t>(layout.grid.size());
  for (std::size_t k = 0; k < layout.n_slots; ++k) {
    const auto c = static_cast<std::ptrdiff_t>(layout.first_center + k * layout.slot_samples);
    double acc = 0.0;
    for (std::ptrdiff_t d = -reach; d <= reach; ++d) {
      const std::ptrdiff_t i = c + d;
      if (i < 0 || i >= n) continue;
      const double lo = std::max(static_cast<double>(d) - 0.5, -half);
      const double hi = std::min(static_cast<double>(d) + 0.5, half);
      if (hi > lo) acc += (hi - lo) * std::norm(received[static_cast<std::size_t>(i)]);
    }
    e[k] = acc * layout.grid.dt();
  }
  return e;
}

int nearest_level(double energy, std::span<const double> levels) {
  if (levels.empty()) throw InvalidArgument("nearest_level: no levels");
  std::size_t best = 0;
  for (std::size_t m = 1; m < levels.size(); ++m)
    if (std::abs(energy - levels[m]) < std::abs(energy - levels[best])) best = m;
  return static_cast<int>(best) + 1;
}

std::vector<int> detect(const SampledSignal& received, const EmScheme& scheme, const TrainLayout& layout) {
  const auto e = slot_energies(received, layout);
  std::vector<int> out(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) out[k] = nearest_level(e[k], scheme.energies);
  return out;
}

LinkReport evaluate_link(const EmScheme& scheme, const FiberParams& fiber, const SsfmConfig& ssfm,
                         std::span<const int> messages) {
  if (messages.empty()) throw InvalidArgument("evaluate_link: empty message");
  const PulseTrain tx = modulate(messages, scheme);
  // The train fills most of its window by design; guard bands of half a pulse
  // window take the role of the central-half margin rule.
  SsfmConfig cfg = ssfm;
  cfg.check_margins = false;
  const SampledSignal out = propagate(tx.signal, fiber, cfg);
  const std::size_t guard = scheme.grid().size() / 2;
  const std::size_t lo = tx.layout.first_center - std::min(tx.layout.first_center, guard);
  const std::size_t hi = std::min(tx.layout.grid.size(),
                                  tx.layout.first_center + (tx.layout.n_slots - 1) * tx.layout.slot_samples + guard);
  double total = 0.0, outside = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double p = std::norm(out[i]);
    total += p;
    if (i < lo || i >= hi) outside += p;
  }
  if (total > 0.0 && outside > ssfm.edge_tolerance * total)
    throw GridOverflow("evaluate_link: propagated train reaches the window edges");

  const SampledSignal rx = amplify_to_energy(out, energy(tx.signal));
  LinkReport rep;
  rep.transmitted.assign(messages.begin(), messages.end());
  rep.slot_energies = slot_energies(rx, tx.layout);
  rep.detected.resize(messages.size());
  for (std::size_t k = 0; k < messages.size(); ++k) {
    rep.detected[k] = nearest_level(rep.slot_energies[k], scheme.energies);
    if (rep.detected[k] != messages[k]) ++rep.symbol_errors;
    const int m = messages[k];
    const double ref = m == 1 ? 0.0 : scheme.pulse_energies[static_cast<std::size_t>(m - 2)];
    rep.max_leakage = std::max(rep.max_leakage, std::abs(rep.slot_energies[k] - ref));
  }
  rep.rate = scheme.rate();
  rep.spectral_efficiency = scheme.efficiency();
  rep.tbp = time_bandwidth_product(scheme.t_mod, scheme.w_eff);
  return rep;
}

std::vector<int> random_messages(int m_levels, std::size_t count, std::uint64_t seed) {
  require_levels(m_levels, "random_messages");
  std::mt19937_64 rng(seed);
  std::vector<int> out(count);
  // Modulo reduction of a 64-bit draw: portable, bias below 2^-58 for M <= 64.
  for (auto& m : out) m = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(m_levels));
  return out;
}

double DurationCurve::at(double energy) const {
  if (energies.size() != durations.size() || energies.empty())
    throw InvalidArgument("DurationCurve: energies and durations must be non-empty and aligned");
  if (energy < energies.front() * (1.0 - 1e-9) || energy > energies.back() * (1.0 + 1e-9))
    throw InvalidArgument("DurationCurve: energy outside the sampled range");
  if (energies.size() == 1) return durations.front();
  const auto it = std::upper_bound(energies.begin(), energies.end(), energy);
  std::size_t i = static_cast<std::size_t>(it - energies.begin());
  i = std::clamp<std::size_t>(i, 1, energies.size() - 1);
  const double e0 = energies[i - 1], e1 = energies[i];
  const double w = (energy - e0) / (e1 - e0);
  return durations[i - 1] + std::clamp(w, 0.0, 1.0) * (durations[i] - durations[i - 1]);
}

LevelChoice select_levels(int m_levels, const DurationCurve& curve, double step) {
  require_levels(m_levels, "select_levels");
  require_positive(step, "select_levels: step");
  const double m1sq = (m_levels - 1.0) * (m_levels - 1.0);
  LevelChoice best;
  for (int i = 0;; ++i) {
    const double e = curve.max_energy() - i * step;
    if (e <= 0.0 || e / m1sq < curve.min_energy() * (1.0 - 1e-9)) break;
    double t = 0.0;
    for (double level : energy_levels(m_levels, e))
      if (level > 0.0) t = std::max(t, curve.at(level));
    const double r = transmission_rate(m_levels, t);
    if (r > best.rate) best = {e, t, r};
  }
  if (!(best.rate > 0.0)) throw InvalidArgument("select_levels: curve does not cover any level set");
  return best;
}

}  // namespace mtb
