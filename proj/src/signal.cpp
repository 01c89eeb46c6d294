#include "mtb/signal.hpp"

#include "mtb/errors.hpp"
#include "mtb/fft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace mtb {

TimeGrid::TimeGrid(std::size_t n_samples, double dt) : n_(n_samples), dt_(dt) {
  if (n_ < 2 || !std::has_single_bit(n_))
    throw InvalidArgument("TimeGrid: n_samples must be a power of two >= 2, got " +
                          std::to_string(n_));
  if (!(dt_ > 0.0) || !std::isfinite(dt_))
    throw InvalidArgument("TimeGrid: dt must be positive and finite");
}

TimeGrid make_grid(double min_window, double max_dt) {
  if (!(max_dt > 0.0) || !(min_window > 0.0))
    throw InvalidArgument("make_grid: window and spacing must be positive");
  std::size_t n = std::bit_ceil(static_cast<std::size_t>(std::ceil(min_window / max_dt)));
  n = std::max<std::size_t>(n, 2);
  return TimeGrid(n, max_dt);
}

SampledSignal::SampledSignal(TimeGrid grid) : grid_(grid), samples_(grid.size()) {}

SampledSignal::SampledSignal(TimeGrid grid, ComplexVector samples)
    : grid_(grid), samples_(std::move(samples)) {
  if (samples_.size() != grid_.size())
    throw InvalidArgument("SampledSignal: sample count does not match grid");
  for (const auto& v : samples_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw InvalidArgument("SampledSignal: non-finite sample");
}

SampledSignal SampledSignal::scaled(Complex factor) const {
  ComplexVector out(samples_.size());
  std::transform(samples_.begin(), samples_.end(), out.begin(),
                 [factor](const Complex& v) { return v * factor; });
  return SampledSignal(grid_, std::move(out));
}

SampledSignal SampledSignal::magnitude() const {
  ComplexVector out(samples_.size());
  std::transform(samples_.begin(), samples_.end(), out.begin(),
                 [](const Complex& v) { return Complex(std::abs(v), 0.0); });
  return SampledSignal(grid_, std::move(out));
}

SampledSignal SampledSignal::shifted(std::ptrdiff_t by) const {
  ComplexVector out(samples_.size());
  const auto n = static_cast<std::ptrdiff_t>(samples_.size());
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const std::ptrdiff_t src = k - by;
    if (src >= 0 && src < n) out[static_cast<std::size_t>(k)] = samples_[static_cast<std::size_t>(src)];
  }
  return SampledSignal(grid_, std::move(out));
}

SampledSignal embed_centered(const SampledSignal& s, const TimeGrid& target) {
  const TimeGrid& g = s.grid();
  if (std::abs(g.dt() - target.dt()) > 1e-9 * g.dt())
    throw InvalidArgument("embed_centered: grids differ in spacing");
  ComplexVector out(target.size());
  const auto offset = static_cast<std::ptrdiff_t>(target.center()) - static_cast<std::ptrdiff_t>(g.center());
  const auto n = static_cast<std::ptrdiff_t>(target.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(k) + offset;
    if (j >= 0 && j < n)
      out[static_cast<std::size_t>(j)] = s[k];
    else if (s[k] != Complex(0.0))
      throw InvalidArgument("embed_centered: signal does not fit the target grid");
  }
  return SampledSignal(target, std::move(out));
}

Spectrum::Spectrum(TimeGrid grid, ComplexVector samples)
    : grid_(grid), samples_(std::move(samples)) {
  if (samples_.size() != grid_.size())
    throw InvalidArgument("Spectrum: sample count does not match grid");
}

namespace {

double sum_abs2(std::span<const Complex> v) {
  double acc = 0.0;
  for (const auto& x : v) acc += std::norm(x);
  return acc;
}

std::vector<double> density_of(std::span<const Complex> v) {
  std::vector<double> rho(v.size());
  std::transform(v.begin(), v.end(), rho.begin(), [](const Complex& x) { return std::norm(x); });
  return rho;
}

void check_eps(double eps, const char* who) {
  if (!(eps > 0.0 && eps < 1.0))
    throw InvalidArgument(std::string(who) + ": eps must lie in (0, 1)");
}

}  // namespace

double energy(const SampledSignal& s) { return sum_abs2(s.samples()) * s.grid().dt(); }

double energy(const Spectrum& s) { return sum_abs2(s.samples()) * s.df(); }

Spectrum spectrum(const SampledSignal& s) {
  const std::size_t n = s.size();
  const std::size_t h = n / 2;
  ComplexVector buf(n);
  // Rotate so t = 0 sits at index 0, transform, then rotate f = 0 to the center.
  for (std::size_t m = 0; m < n; ++m) buf[m] = s[(m + h) % n];
  fft::plan(n).forward(buf.data(), buf.data());
  ComplexVector out(n);
  const double dt = s.grid().dt();
  for (std::size_t j = 0; j < n; ++j) out[j] = buf[(j + h) % n] * dt;
  return Spectrum(s.grid(), std::move(out));
}

SampledSignal inverse_spectrum(const Spectrum& sp) {
  const std::size_t n = sp.size();
  const std::size_t h = n / 2;
  ComplexVector buf(n);
  for (std::size_t m = 0; m < n; ++m) buf[m] = sp[(m + h) % n];
  fft::plan(n).backward(buf.data(), buf.data());
  ComplexVector out(n);
  const double scale = sp.df();
  for (std::size_t k = 0; k < n; ++k) out[k] = buf[(k + h) % n] * scale;
  return SampledSignal(sp.grid(), std::move(out));
}

double effective_duration(const SampledSignal& s, double eps) {
  check_eps(eps, "effective_duration");
  const auto rho = density_of(s.samples());
  return metrology::centered_width(rho, s.grid().dt(), 1.0 - eps);
}

double effective_bandwidth(const SampledSignal& s, double eps) {
  check_eps(eps, "effective_bandwidth");
  const Spectrum sp = spectrum(s);
  const auto rho = density_of(sp.samples());
  return metrology::centered_width(rho, sp.df(), 1.0 - eps);
}

double inband_fraction(const SampledSignal& s, double band) {
  if (!(band >= 0.0)) throw InvalidArgument("inband_fraction: band must be non-negative");
  const Spectrum sp = spectrum(s);
  const auto rho = density_of(sp.samples());
  double total = 0.0;
  for (double r : rho) total += r;
  if (total == 0.0) throw InvalidArgument("inband_fraction: zero-energy signal");
  return metrology::centered_energy(rho, sp.df(), 0.5 * band) / (total * sp.df());
}

double support_width(const SampledSignal& s) {
  double half = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] != Complex(0.0, 0.0)) {
      half = std::max(half, std::abs(s.grid().time(k)));
      any = true;
    }
  }
  return any ? 2.0 * half : 0.0;
}

namespace metrology {

double centered_width(std::span<const double> rho, double cell, double fraction) {
  const std::size_t n = rho.size();
  const std::size_t c = n / 2;
  double total = 0.0;
  for (double r : rho) total += r;
  const double target = fraction * total;
  if (!(target > 0.0)) return 0.0;

  // Enclosed density sum grows cell by cell outward from the center; each ring
  // j >= 1 adds cells c - j and c + j, the center cell is split in half.
  double acc = rho[c];
  if (acc >= target) return target / rho[c] * cell;
  for (std::size_t j = 1; j <= c; ++j) {
    const double right = c + j < n ? rho[c + j] : 0.0;
    const double ring = rho[c - j] + right;
    if (acc + ring >= target) {
      const double half = (static_cast<double>(j) - 0.5) * cell + (target - acc) / ring * cell;
      return 2.0 * half;
    }
    acc += ring;
  }
  return static_cast<double>(n) * cell;
}

double centered_width_gradient(std::span<const double> rho, double cell, double fraction,
                               std::span<double> grad) {
  const std::size_t n = rho.size();
  if (grad.size() != n) throw InvalidArgument("centered_width_gradient: size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t c = n / 2;
  double total = 0.0;
  for (double r : rho) total += r;
  const double target = fraction * total;
  if (!(target > 0.0)) return 0.0;

  double acc = rho[c];
  if (acc >= target) {
    const double slope = fraction * cell / rho[c];
    std::fill(grad.begin(), grad.end(), slope);
    grad[c] -= target * cell / (rho[c] * rho[c]);
    return target / rho[c] * cell;
  }
  for (std::size_t j = 1; j <= c; ++j) {
    const double right = c + j < n ? rho[c + j] : 0.0;
    const double ring = rho[c - j] + right;
    if (acc + ring >= target) {
      // width = 2 ((j - 1/2) cell + r cell), r = (target - acc) / ring
      const double r = (target - acc) / ring;
      const double k = 2.0 * cell / ring;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t d = i >= c ? i - c : c - i;
        const double inside = d < j ? 1.0 : (d == j ? r : 0.0);
        grad[i] = k * (fraction - inside);
      }
      return 2.0 * ((static_cast<double>(j) - 0.5) * cell + r * cell);
    }
    acc += ring;
  }
  return static_cast<double>(n) * cell;
}

double centered_energy(std::span<const double> rho, double cell, double half) {
  const auto w = centered_weights(rho.size(), cell, half);
  double acc = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) acc += w[k] * rho[k];
  return acc * cell;
}

std::vector<double> centered_weights(std::size_t n, double cell, double half) {
  std::vector<double> w(n, 0.0);
  const std::size_t c = n / 2;
  for (std::size_t k = 0; k < n; ++k) {
    const double centre = (static_cast<double>(k) - static_cast<double>(c)) * cell;
    const double lo = std::max(centre - 0.5 * cell, -half);
    const double hi = std::min(centre + 0.5 * cell, half);
    if (hi > lo) w[k] = (hi - lo) / cell;
  }
  return w;
}

}  // namespace metrology

}  // namespace mtb
