#include "liouville/lateral.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "liouville/errors.hpp"

namespace liouville {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

LateralSynth::LateralSynth(int n_theta) : k_(n_theta) {
  if (n_theta < 4 || n_theta % 2) throw BoundsError("n_theta must be even and >= 4");
  in_ = fftw_alloc_complex(k_ / 2 + 1);
  out_ = fftw_alloc_real(k_);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_c2r_1d(k_, in_, out_, FFTW_ESTIMATE);
  }
  phase_.resize(k_ / 2 + 1);
  const double dth = 2.0 * M_PI / k_;
  for (int n = 1; n <= k_ / 2; ++n) phase_[n] = std::polar(0.5 / std::sqrt(double(n)), 0.5 * n * dth);
}

LateralSynth::~LateralSynth() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan_);
  fftw_free(in_);
  fftw_free(out_);
}

void LateralSynth::eval(const double* a, const double* b, int n_modes, double* out) {
  if (2 * n_modes >= k_) throw BoundsError("lateral synthesis needs n_theta > 2 n_modes");
  for (int n = 0; n <= k_ / 2; ++n) in_[n][0] = in_[n][1] = 0.0;
  for (int n = 1; n <= n_modes; ++n) {
    std::complex<double> c = std::complex<double>(a[n - 1], -b[n - 1]) * phase_[n];
    in_[n][0] = c.real();
    in_[n][1] = c.imag();
  }
  fftw_execute_dft_c2r(plan_, in_, out_);
  for (int j = 0; j < k_; ++j) out[j] = out_[j];
}

LateralSynth& thread_synth(int n_theta) {
  thread_local std::map<int, std::unique_ptr<LateralSynth>> cache;
  auto& p = cache[n_theta];
  if (!p) p = std::make_unique<LateralSynth>(n_theta);
  return *p;
}

void LateralModes::draw_stationary(RngStream& rng) {
  for (std::size_t i = 0; i < a_.size(); ++i) {
    a_[i] = rng.normal();
    b_[i] = rng.normal();
  }
}

void LateralModes::advance(double ds, int n_active, RngStream& rng) {
  if (ds != cached_ds_) {
    rho_.resize(a_.size());
    sig_.resize(a_.size());
    for (std::size_t i = 0; i < a_.size(); ++i) {
      rho_[i] = std::exp(-double(i + 1) * ds);
      sig_[i] = std::sqrt(-std::expm1(-2.0 * double(i + 1) * ds));
    }
    cached_ds_ = ds;
  }
  for (int i = 0; i < n_active; ++i) {
    a_[i] = rho_[i] * a_[i] + sig_[i] * rng.normal();
    b_[i] = rho_[i] * b_[i] + sig_[i] * rng.normal();
  }
}

double harmonic(int n) {
  double h = 0.0;
  for (int k = n; k >= 1; --k) h += 1.0 / k;
  return h;
}

}  // namespace liouville
