#pragma once

// Thin wrapper over FFTW3. Plans are created once per length under a mutex
// and executed with the new-array interface, which is thread-safe.

#include "mtb/signal.hpp"

#include <cstddef>
#include <memory>

namespace mtb::fft {

class Plan {
 public:
  explicit Plan(std::size_t n);
  ~Plan();
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  std::size_t size() const noexcept { return n_; }

  /// Unnormalized X_k = sum_n x_n e^{-2 pi i k n / N}; in-place allowed.
  void forward(const Complex* in, Complex* out) const;
  /// Unnormalized x_n = sum_k X_k e^{+2 pi i k n / N}; in-place allowed.
  void backward(const Complex* in, Complex* out) const;

 private:
  struct Impl;
  std::size_t n_;
  std::unique_ptr<Impl> impl_;
};

/// Shared plan for length n (created on first use).
const Plan& plan(std::size_t n);

/// Angular frequency of unshifted DFT bin k for a grid of spacing dt.
double angular_frequency(std::size_t k, std::size_t n, double dt);

}  // namespace mtb::fft
