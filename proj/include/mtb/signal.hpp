#pragma once

// Uniform time/frequency grids, sampled complex waveforms and the
// energy / effective-duration / effective-bandwidth metrology used
// throughout the library. Units are SI: seconds, hertz, sqrt(W), joules.

#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <vector>

namespace mtb {

using Complex = std::complex<double>;

/// Allocator returning 64-byte aligned storage, so FFT plans never see
/// buffers with mismatched alignment.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using ComplexVector = std::vector<Complex, AlignedAllocator<Complex>>;

/// Uniform grid of n_samples points spaced dt apart. Sample k sits at
/// t_k = (k - n/2) dt, so t = 0 is sample n/2.
class TimeGrid {
 public:
  TimeGrid(std::size_t n_samples, double dt);

  std::size_t size() const noexcept { return n_; }
  double dt() const noexcept { return dt_; }
  double window() const noexcept { return static_cast<double>(n_) * dt_; }
  std::size_t center() const noexcept { return n_ / 2; }
  double time(std::size_t k) const noexcept {
    return (static_cast<double>(k) - static_cast<double>(n_ / 2)) * dt_;
  }
  /// Frequency spacing of the matching DFT grid.
  double df() const noexcept { return 1.0 / window(); }
  /// Centered frequency axis f_k = (k - n/2) df.
  double frequency(std::size_t k) const noexcept {
    return (static_cast<double>(k) - static_cast<double>(n_ / 2)) * df();
  }

  bool operator==(const TimeGrid& other) const noexcept = default;

 private:
  std::size_t n_;
  double dt_;
};

/// Smallest power-of-two grid with spacing at most max_dt covering at least
/// min_window seconds.
TimeGrid make_grid(double min_window, double max_dt);

/// Complex waveform q(t) on a TimeGrid. |q|^2 is instantaneous power in W.
class SampledSignal {
 public:
  explicit SampledSignal(TimeGrid grid);  // all-zero
  SampledSignal(TimeGrid grid, ComplexVector samples);

  template <typename F>
  static SampledSignal from_function(TimeGrid grid, F&& f) {
    ComplexVector s(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) s[k] = Complex(f(grid.time(k)));
    return SampledSignal(grid, std::move(s));
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  std::span<const Complex> samples() const noexcept { return samples_; }
  const Complex& operator[](std::size_t k) const noexcept { return samples_[k]; }
  std::size_t size() const noexcept { return samples_.size(); }

  SampledSignal scaled(Complex factor) const;
  /// Samplewise |q|, returned as a real (zero-imaginary) signal.
  SampledSignal magnitude() const;
  /// Copy shifted by an integer number of samples (zero fill).
  SampledSignal shifted(std::ptrdiff_t samples) const;

 private:
  TimeGrid grid_;
  ComplexVector samples_;
};

/// Unitary-scaled continuous-FT approximation P(f_k) = dt sum_n p_n e^{-2 pi i f_k t_n}
/// on the centered frequency axis; sum |P|^2 df == sum |p|^2 dt.
class Spectrum {
 public:
  Spectrum(TimeGrid grid, ComplexVector samples);

  const TimeGrid& grid() const noexcept { return grid_; }
  double df() const noexcept { return grid_.df(); }
  double frequency(std::size_t k) const noexcept { return grid_.frequency(k); }
  std::span<const Complex> samples() const noexcept { return samples_; }
  const Complex& operator[](std::size_t k) const noexcept { return samples_[k]; }
  std::size_t size() const noexcept { return samples_.size(); }

 private:
  TimeGrid grid_;
  ComplexVector samples_;
};

/// Copies s onto another grid of the same spacing, centers aligned. Samples
/// falling outside the target are dropped only if they are zero; otherwise
/// InvalidArgument.
SampledSignal embed_centered(const SampledSignal& s, const TimeGrid& target);

/// Rectangle-rule energy sum |s_k|^2 dt, in joules.
double energy(const SampledSignal& s);
double energy(const Spectrum& s);

Spectrum spectrum(const SampledSignal& s);
SampledSignal inverse_spectrum(const Spectrum& s);

/// Full width of the smallest centered window [-T/2, T/2] holding a
/// (1 - eps) share of the energy. Each sample owns a cell of width dt and the
/// enclosed energy is interpolated linearly inside cells. Zero signal -> 0.
double effective_duration(const SampledSignal& s, double eps);

/// Full width W of the smallest centered band [-W/2, W/2] holding a
/// (1 - eps) share of the spectral energy. Mirrors effective_duration.
double effective_bandwidth(const SampledSignal& s, double eps);

/// Share of the energy contained in the centered band [-band/2, band/2].
double inband_fraction(const SampledSignal& s, double band);

/// Width of the smallest centered window containing every nonzero sample,
/// measured between the outermost nonzero sample instants.
double support_width(const SampledSignal& s);

namespace metrology {

/// Core of effective_duration on a raw density centered at index n/2 with
/// the given cell width; returns the full width. Zero total -> 0.
double centered_width(std::span<const double> density, double cell, double fraction);

/// centered_width plus its derivative with respect to each density sample
/// (piecewise smooth; one-sided at cell boundaries).
double centered_width_gradient(std::span<const double> density, double cell, double fraction,
                               std::span<double> grad);

/// Energy of a density inside the centered window [-half, half] (cell rule).
double centered_energy(std::span<const double> density, double cell, double half);

/// Per-sample weight (in [0, 1]) of each cell lying inside [-half, half].
std::vector<double> centered_weights(std::size_t n, double cell, double half);

}  // namespace metrology

}  // namespace mtb
