#ifndef LIOUVILLE_LATERAL_HPP_
#define LIOUVILLE_LATERAL_HPP_

#include <complex>
#include <vector>

#include <fftw3.h>

#include "liouville/rng.hpp"

namespace liouville {

// Angular synthesis of a truncated lateral field on K midpoints
// th_j = (j + 1/2) 2 pi / K:
//   out[j] = sum_{n=1}^{N} n^{-1/2} (a_n cos n th_j + b_n sin n th_j)
// with standardized coefficients a_n, b_n. Requires N < K / 2.
class LateralSynth {
 public:
  explicit LateralSynth(int n_theta);
  ~LateralSynth();
  LateralSynth(const LateralSynth&) = delete;
  LateralSynth& operator=(const LateralSynth&) = delete;

  int size() const { return k_; }
  // out must hold size() doubles.
  void eval(const double* a, const double* b, int n_modes, double* out);

 private:
  int k_;
  fftw_complex* in_;
  double* out_;
  fftw_plan plan_;
  std::vector<std::complex<double>> phase_;
};

// Per-thread synth cache keyed by K.
LateralSynth& thread_synth(int n_theta);

// Standardized Ornstein-Uhlenbeck modes: mode n has correlation exp(-n |ds|).
class LateralModes {
 public:
  explicit LateralModes(int n_modes) : a_(n_modes), b_(n_modes) {}

  int size() const { return static_cast<int>(a_.size()); }
  void draw_stationary(RngStream& rng);
  // Exact AR(1) transition over ds for modes 1..n_active.
  void advance(double ds, int n_active, RngStream& rng);

  const double* a() const { return a_.data(); }
  const double* b() const { return b_.data(); }
  double* a() { return a_.data(); }
  double* b() { return b_.data(); }

 private:
  std::vector<double> a_, b_;
  double cached_ds_ = -1.0;
  std::vector<double> rho_, sig_;
};

// Harmonic numbers H_n = sum_{k<=n} 1/k.
double harmonic(int n);

}  // namespace liouville

#endif  // LIOUVILLE_LATERAL_HPP_
