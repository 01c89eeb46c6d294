#include "mtb/basis.hpp"

#include "mtb/errors.hpp"
#include "mtb/fft.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <string>

namespace mtb {

std::size_t default_basis_size(double t_p, double w) {
  return static_cast<std::size_t>(std::ceil(w * t_p)) + 8;
}

SampledSignal BasisSet::vector(std::size_t k) const {
  if (k >= size()) throw InvalidArgument("BasisSet::vector: index out of range");
  ComplexVector s(grid_.size());
  for (std::size_t i = 0; i < support_size(); ++i)
    s[begin_ + i] = vectors_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  return SampledSignal(grid_, std::move(s));
}

BasisSet build_basis(double t_p, double w, std::size_t n_funcs, const TimeGrid& grid) {
  if (!(t_p > 0.0) || t_p > grid.window())
    throw InvalidArgument("build_basis: t_p must be positive and fit the grid window");
  if (!(w > 0.0)) throw InvalidArgument("build_basis: w must be positive");
  if (n_funcs < 1) throw InvalidArgument("build_basis: n_funcs must be >= 1");
  const double dt = grid.dt();
  if (1.0 / dt < 4.0 * w)
    throw InvalidArgument("build_basis: grid under-resolves the band (need 1/dt >= 4 w)");

  // Support: grid samples with |t_k| <= t_p/2 (tolerant to round-off at the edge).
  const double half = 0.5 * t_p * (1.0 + 1e-12);
  const std::size_t c = grid.center();
  const auto reach = static_cast<std::size_t>(std::floor(half / dt));
  if (reach >= c) throw InvalidArgument("build_basis: t_p fills the whole window");
  const std::size_t begin = c - reach;
  const std::size_t ns = 2 * reach + 1;
  if (n_funcs > ns)
    throw InvalidArgument("build_basis: n_funcs (" + std::to_string(n_funcs) +
                          ") exceeds the number of support samples (" + std::to_string(ns) + ")");

  // Tridiagonal matrix commuting with the time-and-band limiting operator;
  // its top eigenvectors are the Slepian sequences in concentration order.
  const double wn = 0.5 * w * dt;  // half-band in cycles per sample
  const double cosw = std::cos(2.0 * std::numbers::pi * wn);
  Eigen::VectorXd diag(static_cast<Eigen::Index>(ns));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(ns - 1));
  const double nsd = static_cast<double>(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    const double x = 0.5 * (nsd - 1.0 - 2.0 * static_cast<double>(i));
    diag(static_cast<Eigen::Index>(i)) = x * x * cosw;
  }
  for (std::size_t i = 1; i < ns; ++i)
    sub(static_cast<Eigen::Index>(i - 1)) = 0.5 * static_cast<double>(i) * (nsd - static_cast<double>(i));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericalError("build_basis: eigensolver failed");

  BasisSet b(grid);
  b.t_p_ = t_p;
  b.w_ = w;
  b.begin_ = begin;
  const auto nf = static_cast<Eigen::Index>(n_funcs);
  b.vectors_.resize(static_cast<Eigen::Index>(ns), nf);
  const Eigen::Index top = static_cast<Eigen::Index>(ns) - 1;
  for (Eigen::Index k = 0; k < nf; ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(top - k);
    // Enforce exact parity (-1)^k; the eigensolver only gives it to round-off.
    const double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    const Eigen::Index m = static_cast<Eigen::Index>(ns);
    for (Eigen::Index i = 0; i < m / 2; ++i) {
      const double avg = 0.5 * (v(i) + sgn * v(m - 1 - i));
      v(i) = avg;
      v(m - 1 - i) = sgn * avg;
    }
    if (k % 2 == 1) v(m / 2) = 0.0;
    double orient = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      orient += (k % 2 == 0 ? 1.0 : static_cast<double>(i) - 0.5 * static_cast<double>(m - 1)) * v(i);
    if (orient < 0.0) v = -v;
    v /= std::sqrt(v.squaredNorm() * dt);
    b.vectors_.col(k) = v;
  }
  // Modified Gram-Schmidt pass to remove eigensolver round-off (dt-weighted).
  // Even and odd vectors are orthogonal exactly; mixing them would only
  // spoil the parity.
  for (Eigen::Index k = 0; k < nf; ++k) {
    for (Eigen::Index j = k % 2; j < k; j += 2)
      b.vectors_.col(k) -= (b.vectors_.col(j).dot(b.vectors_.col(k)) * dt) * b.vectors_.col(j);
    b.vectors_.col(k) /= std::sqrt(b.vectors_.col(k).squaredNorm() * dt);
  }

  // In-band Gram matrix on the DFT grid with the same cell weighting as
  // inband_fraction / effective_bandwidth.
  const std::size_t n = grid.size();
  const auto weights = metrology::centered_weights(n, grid.df(), 0.5 * w);
  std::vector<std::size_t> band;
  for (std::size_t j = 0; j < n; ++j)
    if (weights[j] > 0.0) band.push_back(j);
  Eigen::MatrixXcd spec(static_cast<Eigen::Index>(band.size()), nf);
  ComplexVector buf(n);
  const auto& plan = fft::plan(n);
  for (Eigen::Index k = 0; k < nf; ++k) {
    const SampledSignal v = b.vector(static_cast<std::size_t>(k));
    for (std::size_t m = 0; m < n; ++m) buf[m] = v[(m + n / 2) % n];
    plan.forward(buf.data(), buf.data());
    for (std::size_t i = 0; i < band.size(); ++i) {
      const std::size_t j = band[i];
      spec(static_cast<Eigen::Index>(i), k) = buf[(j + n / 2) % n] * dt * std::sqrt(weights[j]);
    }
  }
  b.gram_ = (spec.adjoint() * spec).real() * grid.df();
  b.gram_ = 0.5 * (b.gram_ + b.gram_.transpose()).eval();
  b.lambdas_ = b.gram_.diagonal();
  double off = 0.0;
  for (Eigen::Index i = 0; i < nf; ++i)
    for (Eigen::Index j = 0; j < nf; ++j)
      if (i != j) off = std::max(off, std::abs(b.gram_(i, j)));
  b.diagonal_ = off <= 1e-10;
  return b;
}

SampledSignal synthesize(const BasisSet& basis, std::span<const double> coeffs) {
  if (coeffs.size() != basis.size())
    throw InvalidArgument("synthesize: expected " + std::to_string(basis.size()) +
                          " coefficients, got " + std::to_string(coeffs.size()));
  const Eigen::Map<const Eigen::VectorXd> a(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  const Eigen::VectorXd p = basis.support_vectors() * a;
  ComplexVector s(basis.grid().size());
  for (Eigen::Index i = 0; i < p.size(); ++i)
    s[basis.support_begin() + static_cast<std::size_t>(i)] = p(i);
  return SampledSignal(basis.grid(), std::move(s));
}

Eigen::VectorXd project(const BasisSet& basis, const SampledSignal& s) {
  if (!(s.grid() == basis.grid())) throw InvalidArgument("project: grid mismatch");
  Eigen::VectorXd x(static_cast<Eigen::Index>(basis.support_size()));
  for (std::size_t i = 0; i < basis.support_size(); ++i)
    x(static_cast<Eigen::Index>(i)) = s[basis.support_begin() + i].real();
  return basis.support_vectors().transpose() * x * basis.grid().dt();
}

double inband_fraction(const BasisSet& basis, std::span<const double> coeffs) {
  if (coeffs.size() != basis.size()) throw InvalidArgument("inband_fraction: length mismatch");
  const Eigen::Map<const Eigen::VectorXd> a(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  const double norm2 = a.squaredNorm();
  if (!(norm2 > 0.0)) throw InvalidArgument("inband_fraction: zero coefficient vector");
  if (basis.diagonalizes_inband()) return a.cwiseAbs2().dot(basis.lambdas()) / norm2;
  return a.dot(basis.inband_gram() * a) / norm2;
}

}  // namespace mtb
