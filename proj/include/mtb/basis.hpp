#pragma once

// Orthonormal time-limited concentration basis: discrete prolate spheroidal
// sequences on the samples of [-t_p/2, t_p/2], the sampled counterpart of
// truncated prolate spheroidal wave functions.

#include "mtb/signal.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace mtb {

class BasisSet {
 public:
  double t_p() const noexcept { return t_p_; }
  /// Full concentration bandwidth; the band is |f| <= w/2.
  double w() const noexcept { return w_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }
  const TimeGrid& grid() const noexcept { return grid_; }

  /// First grid index of the support and its sample count.
  std::size_t support_begin() const noexcept { return begin_; }
  std::size_t support_size() const noexcept { return static_cast<std::size_t>(vectors_.rows()); }

  /// Support samples (rows) of every vector (columns), unit energy with dt weight.
  const Eigen::MatrixXd& support_vectors() const noexcept { return vectors_; }
  /// In-band energy share of each vector.
  const Eigen::VectorXd& lambdas() const noexcept { return lambdas_; }
  /// In-band energy Gram matrix: a^T G a is the in-band energy of synthesize(a).
  const Eigen::MatrixXd& inband_gram() const noexcept { return gram_; }
  /// True when the Gram matrix is diagonal within 1e-10.
  bool diagonalizes_inband() const noexcept { return diagonal_; }

  SampledSignal vector(std::size_t k) const;

 private:
  friend BasisSet build_basis(double, double, std::size_t, const TimeGrid&);
  BasisSet(TimeGrid grid) : grid_(grid) {}

  TimeGrid grid_;
  double t_p_ = 0.0;
  double w_ = 0.0;
  std::size_t begin_ = 0;
  Eigen::MatrixXd vectors_;
  Eigen::VectorXd lambdas_;
  Eigen::MatrixXd gram_;
  bool diagonal_ = false;
};

/// Default basis size: Shannon number ceil(w t_p) plus 8.
std::size_t default_basis_size(double t_p, double w);

/// Builds n_funcs sequences concentrated in |f| <= w/2 and supported on the
/// grid samples with |t_k| <= t_p/2. Vector k has parity (-1)^k; even vectors
/// have positive sum, odd vectors positive first moment.
BasisSet build_basis(double t_p, double w, std::size_t n_funcs, const TimeGrid& grid);

SampledSignal synthesize(const BasisSet& basis, std::span<const double> coeffs);

/// Coefficients of the orthogonal projection of Re(s) onto the span.
Eigen::VectorXd project(const BasisSet& basis, const SampledSignal& s);

/// In-band share of synthesize(coeffs): sum lambda_k a_k^2 / sum a_k^2 when the
/// basis diagonalizes the in-band form, a^T G a / a^T a otherwise.
double inband_fraction(const BasisSet& basis, std::span<const double> coeffs);

}  // namespace mtb
