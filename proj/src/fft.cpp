#include "mtb/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numbers>

namespace mtb::fft {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(const Complex* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(p));
}

}  // namespace

struct Plan::Impl {
  fftw_plan fwd_oop = nullptr;
  fftw_plan bwd_oop = nullptr;
  fftw_plan fwd_ip = nullptr;
  fftw_plan bwd_ip = nullptr;
};

Plan::Plan(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
  std::lock_guard lock(planner_mutex());
  // FFTW_ESTIMATE keeps plan selection (hence round-off) reproducible run to run.
  ComplexVector a(n), b(n);
  const int len = static_cast<int>(n);
  impl_->fwd_oop = fftw_plan_dft_1d(len, as_fftw(a.data()), as_fftw(b.data()), FFTW_FORWARD,
                                    FFTW_ESTIMATE);
  impl_->bwd_oop = fftw_plan_dft_1d(len, as_fftw(a.data()), as_fftw(b.data()), FFTW_BACKWARD,
                                    FFTW_ESTIMATE);
  impl_->fwd_ip = fftw_plan_dft_1d(len, as_fftw(a.data()), as_fftw(a.data()), FFTW_FORWARD,
                                   FFTW_ESTIMATE);
  impl_->bwd_ip = fftw_plan_dft_1d(len, as_fftw(a.data()), as_fftw(a.data()), FFTW_BACKWARD,
                                   FFTW_ESTIMATE);
}

Plan::~Plan() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->fwd_oop);
  fftw_destroy_plan(impl_->bwd_oop);
  fftw_destroy_plan(impl_->fwd_ip);
  fftw_destroy_plan(impl_->bwd_ip);
}

void Plan::forward(const Complex* in, Complex* out) const {
  fftw_execute_dft(in == out ? impl_->fwd_ip : impl_->fwd_oop, as_fftw(in), as_fftw(out));
}

void Plan::backward(const Complex* in, Complex* out) const {
  fftw_execute_dft(in == out ? impl_->bwd_ip : impl_->bwd_oop, as_fftw(in), as_fftw(out));
}

const Plan& plan(std::size_t n) {
  static std::mutex cache_mutex;
  static std::map<std::size_t, std::unique_ptr<Plan>> cache;
  std::lock_guard lock(cache_mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<Plan>(n)).first;
  return *it->second;
}

double angular_frequency(std::size_t k, std::size_t n, double dt) {
  const double idx = k < (n + 1) / 2 ? static_cast<double>(k)
                                     : static_cast<double>(k) - static_cast<double>(n);
  return 2.0 * std::numbers::pi * idx / (static_cast<double>(n) * dt);
}

}  // namespace mtb::fft
