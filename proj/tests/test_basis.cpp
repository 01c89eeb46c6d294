#include "doctest.h"

#include "mtb/basis.hpp"
#include "mtb/errors.hpp"
#include "mtb/propagator.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

using namespace mtb;

namespace {

const double kTp = 285.5e-12;
const double kW = 50e9;

TimeGrid design_grid(double dt = 2.5e-12) { return TimeGrid(2048, dt); }

// Continuous in-band energy form of samples on [-t_p/2, t_p/2]: the band
// |f| <= w/2 of the DTFT gives K_ij = dt^2 sin(pi w (i-j) dt) / (pi (i-j) dt).
Eigen::MatrixXd sinc_kernel(std::size_t n, double dt, double w) {
  Eigen::MatrixXd k(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (double(i) - double(j)) * dt;
      k(i, j) = dt * dt * (i == j ? w : std::sin(std::numbers::pi * w * d) / (std::numbers::pi * d));
    }
  return k;
}

}  // namespace

TEST_CASE("basis vectors are orthonormal and time-limited") {
  for (double tp : {100e-12, kTp, 600e-12}) {
    const auto g = design_grid();
    const auto b = build_basis(tp, kW, default_basis_size(tp, kW), g);
    const Eigen::MatrixXd v = b.support_vectors();
    const Eigen::MatrixXd gram = v.transpose() * v * g.dt();
    CHECK((gram - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff() <= 1e-10);
    for (std::size_t k = 0; k < b.size(); ++k) {
      const auto s = b.vector(k);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (std::abs(g.time(i)) > tp / 2 + 1e-18) REQUIRE(s[i] == Complex(0.0));
      CHECK(support_width(s) <= tp + 1e-18);
    }
  }
}

TEST_CASE("parity, orientation and default size") {
  const auto g = design_grid();
  const auto b = build_basis(kTp, kW, default_basis_size(kTp, kW), g);
  CHECK(b.size() == 23);
  const std::size_t c = g.center();
  for (std::size_t k = 0; k < b.size(); ++k) {
    const auto s = b.vector(k);
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t d = 1; d < 60; ++d) REQUIRE(s[c + d].real() == sign * s[c - d].real());
  }
  const auto v0 = b.vector(0);
  CHECK(v0[c].real() > 0.0);
  // The most concentrated vector is unimodal: non-increasing away from the center.
  for (std::size_t d = 0; d + 1 < 58; ++d) CHECK(v0[c + d + 1].real() <= v0[c + d].real());
}

TEST_CASE("concentrations are ordered and match the continuous kernel") {
  const auto g = design_grid();
  const auto b = build_basis(kTp, kW, default_basis_size(kTp, kW), g);
  const auto& lam = b.lambdas();
  CHECK(lam[0] > 1.0 - 1e-6);
  for (Eigen::Index k = 0; k + 1 < lam.size(); ++k) {
    CHECK(lam[k + 1] <= lam[k] + 1e-12);
    if (lam[k] < 1.0 - 1e-9) CHECK(lam[k + 1] < lam[k]);
  }
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    CHECK(lam[k] >= -1e-15);
    CHECK(lam[k] <= 1.0 + 1e-12);
  }

  const std::size_t ns = b.support_size();
  const Eigen::MatrixXd kernel = sinc_kernel(ns, g.dt(), kW);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel / g.dt());
  const Eigen::VectorXd mu = es.eigenvalues().reverse();
  int above = 0, above_ours = 0;
  for (Eigen::Index k = 0; k < mu.size(); ++k) above += mu[k] > 0.5;
  for (Eigen::Index k = 0; k < lam.size(); ++k) above_ours += lam[k] > 0.5;
  CHECK(above_ours == above);
  CHECK(above_ours >= int(std::floor(kW * kTp)));
  const Eigen::MatrixXd v = b.support_vectors();
  double worst = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double q = v.col(Eigen::Index(k)).dot(kernel * v.col(Eigen::Index(k)));
    worst = std::max(worst, std::abs(q - lam[Eigen::Index(k)]));
    CHECK(std::abs(q - mu[Eigen::Index(k)]) <= 1e-6);
  }
  // The DFT-cell band measure differs from the continuous form only at the band edges.
  CHECK(worst <= 1e-3);
}

TEST_CASE("synthesis preserves energy") {
  const auto g = design_grid();
  const auto b = build_basis(kTp, kW, 20, g);
  std::vector<double> a(b.size(), 0.0);
  a[0] = 1.0;
  CHECK(energy(synthesize(b, a)) == doctest::Approx(1.0).epsilon(1e-10));
  std::fill(a.begin(), a.end(), 0.0);
  CHECK(energy(synthesize(b, a)) == 0.0);
  std::mt19937 rng(8);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    double sum = 0.0;
    for (auto& x : a) {
      x = nd(rng);
      sum += x * x;
    }
    CHECK(energy(synthesize(b, a)) == doctest::Approx(sum).epsilon(1e-10));
    const auto back = project(b, synthesize(b, a));
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(back[Eigen::Index(k)] == doctest::Approx(a[k]).epsilon(1e-10));
  }
  CHECK_THROWS_AS(synthesize(b, std::vector<double>(3)), InvalidArgument);
}

TEST_CASE("in-band fraction of coefficient vectors") {
  const auto g = design_grid();
  const auto b = build_basis(kTp, kW, 20, g);
  const auto& lam = b.lambdas();
  std::vector<double> a(b.size(), 0.0);
  a[0] = 3.0;
  CHECK(inband_fraction(b, a) == doctest::Approx(lam[0]).epsilon(1e-12));

  // Equal two-vector mix against direct integration of the sampled spectrum.
  std::fill(a.begin(), a.end(), 0.0);
  a[0] = a[1] = 1.0;
  const double mix = inband_fraction(b, a);
  CHECK(mix == doctest::Approx(0.5 * (lam[0] + lam[1])).epsilon(1e-8));
  CHECK(mix == doctest::Approx(inband_fraction(synthesize(b, a), kW)).epsilon(1e-8));

  std::mt19937 rng(2);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    for (auto& x : a) x = nd(rng);
    const double f = inband_fraction(b, a);
    CHECK(f <= lam[0] + 1e-12);
    CHECK(f >= lam[Eigen::Index(b.size() - 1)] - 1e-12);
    CHECK(f == doctest::Approx(inband_fraction(synthesize(b, a), kW)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(inband_fraction(b, std::vector<double>(b.size(), 0.0)), InvalidArgument);
}

TEST_CASE("invalid constructions are rejected") {
  const auto g = design_grid();
  CHECK_THROWS_AS(build_basis(6e-9, kW, 4, g), InvalidArgument);
  CHECK_THROWS_AS(build_basis(kTp, 0.0, 4, g), InvalidArgument);
  CHECK_THROWS_AS(build_basis(kTp, kW, 0, g), InvalidArgument);
  CHECK_THROWS_AS(build_basis(kTp, 150e9, 4, g), InvalidArgument);  // 400 GSa/s < 4 w
  CHECK_THROWS_AS(build_basis(kTp, kW, 500, g), InvalidArgument);   // only 115 support samples
  CHECK_THROWS_AS(build_basis(kTp, kW, 4, g).vector(4), InvalidArgument);
}

TEST_CASE("concentrations converge under grid refinement") {
  // Halving dt keeps the window but changes the support length by one fine
  // sample, which moves the transition-band values by a few percent.
  const auto coarse = build_basis(kTp, kW, 16, design_grid(2.5e-12));
  const auto fine = build_basis(kTp, kW, 16, TimeGrid(4096, 1.25e-12));
  for (Eigen::Index k = 0; k < 16; ++k) {
    const double a = coarse.lambdas()[k], b = fine.lambdas()[k];
    if (a > 0.99) CHECK(std::abs(a - b) <= 1e-3);
    CHECK(std::abs(a - b) <= 0.05);
  }
}

TEST_CASE("a larger basis represents bandlimited pulses better") {
  const auto g = design_grid();
  const auto target = SampledSignal::from_function(g, [](double t) {
    return std::abs(t) <= kTp / 2 ? std::pow(std::cos(std::numbers::pi * t / kTp), 2) * (1 + 3e9 * t) : 0.0;
  });
  double prev = 1e300;
  for (std::size_t n : {4, 8, 16, 23}) {
    const auto b = build_basis(kTp, kW, n, g);
    const auto a = project(b, target);
    const auto approx = synthesize(b, std::span<const double>(a.data(), std::size_t(a.size())));
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err += std::norm(approx[i] - target[i]);
    CHECK(err <= prev * (1 + 1e-12));
    prev = err;
  }
}
