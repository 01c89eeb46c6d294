#include "mtb/optimizer.hpp"

#include "mtb/errors.hpp"
#include "mtb/soliton.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace mtb {

std::string to_string(GradientMethod g) {
  return g == GradientMethod::Adjoint ? "adjoint" : "finite-difference";
}

void DesignProblem::validate() const {
  if (!(energy > 0.0)) throw InvalidArgument("DesignProblem: energy must be > 0");
  if (!(t_p > 0.0)) throw InvalidArgument("DesignProblem: t_p must be > 0");
  if (!(w_max > 0.0)) throw InvalidArgument("DesignProblem: w_max must be > 0");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("DesignProblem: eps must lie in (0, 1)");
  fiber.validate();
  ssfm.validate();
  if (options.perturbed_starts < 0) throw InvalidArgument("DesignOptions: perturbed_starts >= 0");
  if (!(options.perturbation >= 0.0)) throw InvalidArgument("DesignOptions: perturbation >= 0");
  if (!(options.fd_step > 0.0)) throw InvalidArgument("DesignOptions: fd_step > 0");
  if (options.penalty_weights.empty()) throw InvalidArgument("DesignOptions: need a penalty weight");
  for (double mu : options.penalty_weights)
    if (!(mu > 0.0)) throw InvalidArgument("DesignOptions: penalty weights must be > 0");
  if (options.max_iterations < 1) throw InvalidArgument("DesignOptions: max_iterations >= 1");
  if (options.jobs < 1) throw InvalidArgument("DesignOptions: jobs >= 1");
  if (!(options.search_phase_per_step >= 0.0))
    throw InvalidArgument("DesignOptions: search_phase_per_step >= 0");
}

TimeGrid DesignProblem::design_grid() const {
  return grid ? *grid : channel_grid(t_p, w_max, fiber);
}

double rx_duration(const SampledSignal& pulse, const FiberParams& fiber, const SsfmConfig& cfg,
                   double eps) {
  return effective_duration(propagate(pulse, fiber, cfg), eps);
}

namespace {

// rx_duration, embedding the pulse in a wider window (same dt) when its
// received spread overflows the design window. Hard-edged references such
// as a weak soliton cut to t_p spread further than any in-band design.
double reference_rx_duration(const SampledSignal& pulse, const FiberParams& fiber, const SsfmConfig& cfg,
                             double eps) {
  SampledSignal p = pulse;
  for (int widen = 0;; ++widen) {
    try {
      return rx_duration(p, fiber, cfg, eps);
    } catch (const GridOverflow&) {
      if (widen == 3) throw;
    }
    const TimeGrid& g = p.grid();
    const TimeGrid wide(2 * g.size(), g.dt());
    ComplexVector v(wide.size());
    for (std::size_t k = 0; k < g.size(); ++k) v[k + wide.center() - g.center()] = p[k];
    p = SampledSignal(wide, std::move(v));
  }
}

}  // namespace

SampledSignal baseline_pulse(const DesignProblem& problem, const TimeGrid& grid) {
  const SampledSignal s = windowed_soliton(problem.energy, problem.t_p, problem.fiber, grid);
  return amplify_to_energy(s, problem.energy);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double density_sum(const ComplexVector& q, std::vector<double>& rho) {
  rho.resize(q.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) total += (rho[i] = std::norm(q[i]));
  return total;
}

// Coefficients of the basis projection of s, matching samples by time so the
// source may live on a differently sized grid with the same spacing.
Eigen::VectorXd project_by_time(const BasisSet& basis, const SampledSignal& s) {
  const TimeGrid& g = basis.grid();
  const TimeGrid& h = s.grid();
  if (std::abs(g.dt() - h.dt()) > 1e-9 * g.dt())
    throw InvalidArgument("warm start: sample spacing differs from the design grid");
  Eigen::VectorXd x(static_cast<Eigen::Index>(basis.support_size()));
  for (std::size_t i = 0; i < basis.support_size(); ++i) {
    const auto k = static_cast<std::ptrdiff_t>(basis.support_begin() + i) -
                   static_cast<std::ptrdiff_t>(g.center()) + static_cast<std::ptrdiff_t>(h.center());
    x(static_cast<Eigen::Index>(i)) =
        (k >= 0 && k < static_cast<std::ptrdiff_t>(h.size())) ? s[static_cast<std::size_t>(k)].real() : 0.0;
  }
  return basis.support_vectors().transpose() * x * g.dt();
}

SsfmConfig search_config(const DesignProblem& pb) {
  SsfmConfig c = pb.ssfm;
  const double phase = pb.options.search_phase_per_step;
  if (phase > 0.0) c.max_nonlinear_phase_per_step = std::max(phase, c.max_nonlinear_phase_per_step);
  return c;
}

// Received effective duration of synthesize(a) and its coefficient gradient.
class Evaluator {
 public:
  Evaluator(const DesignProblem& pb, const BasisSet& basis)
      : pb_(pb), basis_(basis), prop_(basis.grid(), pb.fiber, search_config(pb)) {}

  double value(const Eigen::VectorXd& a) const {
    ++count_;
    ComplexVector q = field(a);
    prop_.integrate(q, 0.0, pb_.fiber.length_km);
    std::vector<double> rho;
    density_sum(q, rho);
    return metrology::centered_width(rho, basis_.grid().dt(), 1.0 - pb_.eps);
  }

  double value_grad(const Eigen::VectorXd& a, Eigen::VectorXd& grad) const {
    if (pb_.options.gradient == GradientMethod::Adjoint) return adjoint(a, grad);
    return finite_difference(a, grad);
  }

  std::size_t count() const { return count_.load(); }

 private:
  ComplexVector field(const Eigen::VectorXd& a) const {
    const SampledSignal p = synthesize(basis_, {a.data(), static_cast<std::size_t>(a.size())});
    return ComplexVector(p.samples().begin(), p.samples().end());
  }

  double adjoint(const Eigen::VectorXd& a, Eigen::VectorXd& grad) const {
    ++count_;
    ComplexVector q = field(a);
    PropagationTape tape;
    prop_.integrate(q, 0.0, pb_.fiber.length_km, &tape);
    std::vector<double> rho;
    density_sum(q, rho);
    std::vector<double> drho(rho.size());
    const double t = metrology::centered_width_gradient(rho, basis_.grid().dt(), 1.0 - pb_.eps, drho);
    // d rho_i = 2 Re(conj(q_i) dq_i), so the output-side gradient is 2 drho_i q_i.
    ComplexVector g(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) g[i] = 2.0 * drho[i] * q[i];
    const ComplexVector gin = prop_.pullback(tape, std::move(g));
    Eigen::VectorXd re(static_cast<Eigen::Index>(basis_.support_size()));
    for (std::size_t i = 0; i < basis_.support_size(); ++i)
      re(static_cast<Eigen::Index>(i)) = gin[basis_.support_begin() + i].real();
    grad = basis_.support_vectors().transpose() * re;
    return t;
  }

  double finite_difference(const Eigen::VectorXd& a, Eigen::VectorXd& grad) const {
    const double h = pb_.options.fd_step * std::sqrt(pb_.energy);
    const double t = value(a);
    // Reflection symmetry: at an even pulse every odd-direction partial vanishes.
    bool even = true;
    for (Eigen::Index k = 1; k < a.size(); k += 2) even = even && a(k) == 0.0;
    grad.setZero(a.size());
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      if (even && k % 2 == 1) continue;
      Eigen::VectorXd ap = a, am = a;
      ap(k) += h;
      am(k) -= h;
      grad(k) = (value(ap) - value(am)) / (2.0 * h);
    }
    return t;
  }

  const DesignProblem& pb_;
  const BasisSet& basis_;
  SplitStepPropagator prop_;
  mutable std::atomic<std::size_t> count_{0};
};

struct Candidate {
  Eigen::VectorXd x;  // unit norm
  double rx = kInf;
  double inband = 0.0;
};

struct StartOutcome {
  Candidate best_feasible;
  Candidate last;
  std::vector<double> history;
  std::vector<TraceRecord> trace;
  bool converged = false;
};

// Penalized objective on the unit sphere: rx(sqrt(E) x) / t_p plus the
// in-band penalty; tracks the best feasible point it has evaluated.
class SphereObjective {
 public:
  SphereObjective(const DesignProblem& pb, const BasisSet& basis, const Evaluator& ev, Candidate& best)
      : pb_(pb), basis_(basis), ev_(ev), best_(best), scale_(std::sqrt(pb.energy)) {}

  void set_weight(double mu) { mu_ = mu; }

  double inband(const Eigen::VectorXd& x) const {
    return x.dot(basis_.inband_gram() * x) / x.squaredNorm();
  }

  struct Eval {
    double f = 0.0;
    double rx = 0.0;
    double inband = 0.0;
  };

  Eval evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    Eval e;
    const double nx = x.norm();
    const Eigen::VectorXd a = (scale_ / nx) * x;
    Eigen::VectorXd ga;
    e.rx = grad ? ev_.value_grad(a, ga) : ev_.value(a);
    e.inband = inband(x);
    const double lack = std::max(0.0, (1.0 - pb_.eps) - e.inband) / pb_.eps;
    e.f = e.rx / pb_.t_p + mu_ * lack * lack;
    if (grad) {
      const Eigen::VectorXd u = x / nx;
      Eigen::VectorXd g = (scale_ / (nx * pb_.t_p)) * (ga - u.dot(ga) * u);
      if (lack > 0.0) {
        const Eigen::VectorXd dib = 2.0 * (basis_.inband_gram() * x - e.inband * x) / (nx * nx);
        g -= (2.0 * mu_ * lack / pb_.eps) * dib;
      }
      *grad = std::move(g);
    }
    if (e.inband >= 1.0 - pb_.eps && e.rx < best_.rx) {
      best_.x = x / nx;
      best_.rx = e.rx;
      best_.inband = e.inband;
    }
    return e;
  }

 private:
  const DesignProblem& pb_;
  const BasisSet& basis_;
  const Evaluator& ev_;
  Candidate& best_;
  double scale_;
  double mu_ = 1.0;
};

constexpr int kMaxRescues = 3;

// Coordinate pattern search on the sphere: the first of +-delta e_k that
// lowers the objective, with delta shrinking from 1e-3 to 1e-5.
bool compass_step(const SphereObjective& obj, const Eigen::VectorXd& x, const SphereObjective::Eval& cur,
                  Eigen::VectorXd& xn, SphereObjective::Eval& trial) {
  for (double delta = 1e-3; delta >= 1e-5 * (1 - 1e-9); delta *= 0.1) {
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      for (double sign : {1.0, -1.0}) {
        xn = x;
        xn(k) += sign * delta;
        xn.normalize();
        trial = obj.evaluate(xn, nullptr);
        if (trial.f < cur.f) return true;
      }
    }
  }
  return false;
}

StartOutcome run_start(int index, Eigen::VectorXd x, const DesignProblem& pb, const BasisSet& basis,
                       const Evaluator& ev) {
  const auto& opt = pb.options;
  StartOutcome out;
  SphereObjective obj(pb, basis, ev, out.best_feasible);
  x.normalize();
  const Eigen::Index n = x.size();
  bool all_converged = true;

  SphereObjective::Eval cur;
  Eigen::VectorXd g;
  for (std::size_t stage = 0; stage < opt.penalty_weights.size(); ++stage) {
    obj.set_weight(opt.penalty_weights[stage]);
    cur = obj.evaluate(x, &g);
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
    bool fresh = true;
    int quiet = 0;
    int rescues = 0;
    bool stage_converged = false;
    for (int it = 0; it < opt.max_iterations; ++it) {
      if (g.norm() < 1e-12) {
        stage_converged = true;
        break;
      }
      Eigen::VectorXd d = -hinv * g;
      double slope = g.dot(d);
      if (!(slope < 0.0)) {
        hinv.setIdentity();
        d = -g;
        slope = -g.squaredNorm();
        fresh = true;
      }
      // First step after a reset moves at most 5% of the (unit) norm.
      double alpha = fresh ? std::min(1.0, 0.05 / d.norm()) : 1.0;
      Eigen::VectorXd xn, gn;
      SphereObjective::Eval trial;
      bool accepted = false;
      for (int bt = 0; bt < 20; ++bt) {
        xn = x + alpha * d;
        xn.normalize();
        trial = obj.evaluate(xn, nullptr);
        if (trial.f <= cur.f + 1e-4 * alpha * slope) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        // The gradient gave no descent (kinks of the interpolated duration);
        // fall back to a derivative-free compass step before giving up.
        if (rescues >= kMaxRescues || !compass_step(obj, x, cur, xn, trial)) {
          stage_converged = true;  // no descent left at this resolution
          break;
        }
        ++rescues;
        hinv.setIdentity();
        fresh = true;
        trial = obj.evaluate(xn, &gn);
        const double change = std::abs(cur.f - trial.f) / std::max(1.0, std::abs(cur.f));
        const double moved = (xn - x).norm();
        x = xn;
        g = gn;
        cur = trial;
        out.history.push_back(cur.f);
        TraceRecord rec{index, static_cast<int>(stage), it, cur.f, cur.rx, cur.inband, moved};
        out.trace.push_back(rec);
        if (pb.on_trace) pb.on_trace(rec);
        quiet = change < opt.tolerance ? quiet + 1 : 0;
        continue;
      }
      trial = obj.evaluate(xn, &gn);
      const Eigen::VectorXd s = xn - x;
      const Eigen::VectorXd y = gn - g;
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        if (fresh) hinv *= sy / y.squaredNorm();
        const double rho = 1.0 / sy;
        const Eigen::VectorXd hy = hinv * y;
        hinv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
                rho * (hy * s.transpose() + s * hy.transpose());
        fresh = false;
      }
      const double change = std::abs(cur.f - trial.f) / std::max(1.0, std::abs(cur.f));
      x = xn;
      g = gn;
      cur = trial;
      out.history.push_back(cur.f);
      TraceRecord rec{index, static_cast<int>(stage), it, cur.f, cur.rx, cur.inband, s.norm()};
      out.trace.push_back(rec);
      if (pb.on_trace) pb.on_trace(rec);
      quiet = change < opt.tolerance ? quiet + 1 : 0;
      if (quiet >= 2) {
        stage_converged = true;
        break;
      }
    }
    if (stage + 1 == opt.penalty_weights.size()) all_converged = stage_converged;
  }
  out.last.x = x;
  out.last.rx = cur.rx;
  out.last.inband = cur.inband;
  out.converged = all_converged;
  return out;
}

// Moves x along the great circle toward the most concentrated basis vector
// until the in-band constraint holds.
Eigen::VectorXd restore_feasibility(const Eigen::VectorXd& x, const BasisSet& basis, double eps) {
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(x.size());
  e0(0) = x(0) < 0.0 ? -1.0 : 1.0;
  auto blend = [&](double s) { return Eigen::VectorXd(((1.0 - s) * x + s * e0).normalized()); };
  auto ok = [&](double s) { return inband_fraction(basis, {blend(s).data(), static_cast<std::size_t>(x.size())}) >= 1.0 - eps; };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return blend(hi);
}

}  // namespace

double rx_duration_gradient(const DesignProblem& problem, const BasisSet& basis,
                            const Eigen::VectorXd& a, Eigen::VectorXd& grad) {
  problem.validate();
  if (static_cast<std::size_t>(a.size()) != basis.size())
    throw InvalidArgument("rx_duration_gradient: coefficient length mismatch");
  return Evaluator(problem, basis).value_grad(a, grad);
}

DesignResult minimize_rx_duration(const DesignProblem& pb) {
  pb.validate();
  const TimeGrid grid = pb.design_grid();
  const std::size_t n_funcs = pb.options.n_funcs ? pb.options.n_funcs : default_basis_size(pb.t_p, pb.w_max);
  const BasisSet basis = build_basis(pb.t_p, pb.w_max, n_funcs, grid);
  if (basis.lambdas()(0) < 1.0 - pb.eps) {
    std::ostringstream msg;
    msg << "minimize_rx_duration: no pulse supported on t_p = " << pb.t_p * 1e12
        << " ps keeps 1 - eps of its energy in the band (best " << basis.lambdas()(0) << ")";
    throw Infeasible(msg.str());
  }
  const Evaluator ev(pb, basis);
  const std::size_t nb = basis.size();

  // Starts: projected soliton (or the most concentrated vector without a
  // soliton), warm starts, then perturbations of the first start.
  std::vector<Eigen::VectorXd> starts;
  std::optional<SampledSignal> base;
  double base_rx = 0.0, base_inband = 0.0;
  if (pb.fiber.gamma > 0.0) {
    base = baseline_pulse(pb, grid);
    base_rx = reference_rx_duration(*base, pb.fiber, pb.ssfm, pb.eps);
    base_inband = inband_fraction(*base, pb.w_max);
    starts.push_back(project_by_time(basis, *base));
  }
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb));
  e0(0) = 1.0;
  // Without a soliton, or when the cut soliton is far out of band (weak
  // pulses are much wider than t_p), start from the most concentrated vector.
  if (starts.empty() || inband_fraction(basis, {starts.front().data(), nb}) < 1.0 - pb.eps) starts.push_back(e0);
  for (const auto& w : pb.warm_starts) {
    Eigen::VectorXd c = project_by_time(basis, w);
    if (c.norm() > 0.0) starts.push_back(c);
  }
  const Eigen::VectorXd first = starts.front().normalized();
  for (int i = 0; i < pb.options.perturbed_starts; ++i) {
    std::mt19937_64 rng(pb.options.seed + static_cast<std::uint64_t>(i));
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::VectorXd r(static_cast<Eigen::Index>(nb));
    for (auto& v : r) v = nd(rng);
    starts.push_back(first + pb.options.perturbation * r.normalized());
  }

  std::vector<StartOutcome> outcomes(starts.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < starts.size();) {
      try {
        outcomes[i] = run_start(static_cast<int>(i), starts[i], pb, basis, ev);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int jobs = std::min<int>(pb.options.jobs, static_cast<int>(starts.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Deterministic reduction: best feasible rx, ties to the lowest start.
  int winner = -1;
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    if (outcomes[i].best_feasible.rx < (winner < 0 ? kInf : outcomes[static_cast<std::size_t>(winner)].best_feasible.rx))
      winner = static_cast<int>(i);

  Eigen::VectorXd x;
  if (winner >= 0) {
    x = outcomes[static_cast<std::size_t>(winner)].best_feasible.x;
  } else {
    winner = 0;
    x = restore_feasibility(outcomes[0].last.x, basis, pb.eps);
  }
  const StartOutcome& won = outcomes[static_cast<std::size_t>(winner)];

  Eigen::VectorXd a = std::sqrt(pb.energy) * x;
  SampledSignal pulse = synthesize(basis, {a.data(), nb});
  DesignResult res(pulse);
  res.coeffs = a;
  res.inband = inband_fraction(basis, {a.data(), nb});
  res.rx_duration = rx_duration(pulse, pb.fiber, pb.ssfm, pb.eps);
  res.start_index = winner;
  res.converged = won.converged;
  res.objective_history = won.history;
  for (const auto& o : outcomes) res.trace.insert(res.trace.end(), o.trace.begin(), o.trace.end());

  if (base) {
    res.baseline_rx = base_rx;
    res.baseline_inband = base_inband;
    res.baseline_feasible = base_inband >= 1.0 - pb.eps;
    if (res.baseline_feasible && base_rx < res.rx_duration) {
      // The soliton itself is better than anything found in the span.
      res.pulse = *base;
      res.coeffs = project_by_time(basis, *base);
      res.inband = base_inband;
      res.rx_duration = base_rx;
      res.start_index = -1;
    }
  }
  res.tx_duration_check = support_width(res.pulse);
  res.evaluations = ev.count();
  return res;
}

MtbResult find_mtb(double energy, double w_max, double eps, const FiberParams& fiber,
                   const SsfmConfig& ssfm, const DesignOptions& options, const FixedPointOptions& fp,
                   const std::function<void(const FixedPointSample&)>& on_sample) {
  fiber.validate();
  if (!(fp.tolerance > 0.0) || !(fp.growth > 1.0) || !(fp.t_min > 0.0) || !(fp.t_max > fp.t_min))
    throw InvalidArgument("find_mtb: invalid fixed-point options");
  if (fiber.gamma > 0.0 && energy > max_soliton_energy(w_max, eps, fiber) * (1.0 + 1e-9))
    throw InvalidArgument("find_mtb: energy exceeds the largest band-limited soliton energy");

  double t = fp.initial;
  if (!(t > 0.0)) {
    t = std::sqrt(std::abs(fiber.beta2_si()) * fiber.length_km) * sech_quantile_log(eps);
    if (fiber.gamma > 0.0) t = std::min(t, SolitonSpec::from_energy(energy, fiber).duration(eps));
  }
  t = std::clamp(t, fp.t_min, fp.t_max);

  struct Point {
    double t_p;
    DesignResult design;
  };
  std::vector<Point> done;  // kept sorted by t_p
  std::vector<FixedPointSample> history;
  std::vector<std::string> diagnostics;

  auto evaluate = [&](double tp) -> double {
    if (static_cast<int>(history.size()) >= fp.max_evaluations)
      throw NonConvergence("find_mtb: evaluation budget exhausted");
    DesignProblem pb;
    pb.energy = energy;
    pb.t_p = tp;
    pb.w_max = w_max;
    pb.eps = eps;
    pb.fiber = fiber;
    pb.ssfm = ssfm;
    pb.options = options;
    const auto above = std::lower_bound(done.begin(), done.end(), tp,
                                        [](const Point& p, double v) { return p.t_p < v; });
    if (above != done.begin()) pb.warm_starts.push_back(std::prev(above)->design.pulse);
    if (above != done.end()) pb.warm_starts.push_back(above->design.pulse);
    DesignResult r = minimize_rx_duration(pb);
    const double rx = r.rx_duration;
    for (const auto& p : done) {
      const bool violates = (p.t_p < tp && p.design.rx_duration < rx - 1e-14) ||
                            (p.t_p > tp && p.design.rx_duration > rx + 1e-14);
      if (violates) {
        std::ostringstream msg;
        msg.precision(6);
        msg << "rx duration increases with t_p: t_p " << std::fixed << p.t_p * 1e12 << " ps -> "
            << p.design.rx_duration * 1e12 << " ps, t_p " << tp * 1e12 << " ps -> " << rx * 1e12 << " ps";
        diagnostics.push_back(msg.str());
      }
    }
    done.insert(above, Point{tp, std::move(r)});
    history.push_back({tp, rx});
    if (on_sample) on_sample(history.back());
    return rx - tp;
  };

  auto finish = [&](bool converged, double left, double right) {
    // Report the evaluated point closest to a fixed point.
    std::size_t best = 0;
    for (std::size_t i = 1; i < done.size(); ++i)
      if (std::abs(done[i].design.rx_duration - done[i].t_p) <
          std::abs(done[best].design.rx_duration - done[best].t_p))
        best = i;
    MtbResult res(done[best].design);
    res.t_star = done[best].t_p;
    res.history = history;
    res.bracket_left = left;
    res.bracket_right = right;
    res.diagnostics = diagnostics;
    res.converged = converged;
    return res;
  };

  // Bracket: g > 0 on the left (broadening), g < 0 on the right. rx(t_p)
  // does not increase with t_p, so the iterate t_p <- rx(t_p) crosses the
  // fixed point in one step; geometric growth is the fallback when round-off
  // or a weaker optimum breaks that.
  double a = t, b = t;
  double ga = evaluate(t), gb = ga;
  if (std::abs(ga) <= fp.tolerance) return finish(true, t, t);
  bool first = true;
  if (ga > 0.0) {
    while (gb > 0.0) {
      a = b;
      ga = gb;
      b = first ? b + gb : std::max(b + gb, b * fp.growth);
      first = false;
      if (b > fp.t_max) throw NumericalError("find_mtb: no bracket below the upper duration limit");
      gb = evaluate(b);
      if (std::abs(gb) <= fp.tolerance) return finish(true, a, b);
    }
  } else {
    while (ga < 0.0) {
      b = a;
      gb = ga;
      a = first ? a + ga : std::min(a + ga, a / fp.growth);
      first = false;
      if (a < fp.t_min) throw NumericalError("find_mtb: no bracket above the lower duration limit");
      ga = evaluate(a);
      if (std::abs(ga) <= fp.tolerance) return finish(true, a, b);
    }
  }

  // Illinois variant of regula falsi.
  int side = 0;
  while (static_cast<int>(history.size()) < fp.max_evaluations && b - a > 1e-3 * fp.tolerance) {
    double c = (a * gb - b * ga) / (gb - ga);
    if (!(c > a && c < b)) c = 0.5 * (a + b);
    const double gc = evaluate(c);
    if (std::abs(gc) <= fp.tolerance) return finish(true, a, b);
    if (gc > 0.0) {
      a = c;
      ga = gc;
      if (side == 1) gb *= 0.5;
      side = 1;
    } else {
      b = c;
      gb = gc;
      if (side == -1) ga *= 0.5;
      side = -1;
    }
  }
  diagnostics.push_back("fixed-point tolerance not reached within the evaluation budget");
  return finish(false, a, b);
}

}  // namespace mtb
