#ifndef LIOUVILLE_ESTIMATORS_HPP_
#define LIOUVILLE_ESTIMATORS_HPP_

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "liouville/dozz.hpp"
#include "liouville/engine.hpp"
#include "liouville/gmc.hpp"
#include "liouville/stats.hpp"

namespace liouville {

struct MCConfig {
  long n_samples = 1000;
  std::uint64_t master_seed = 1;
  int batch = 64;
  int workers = 1;
  CylinderGrid grid;  // fixed-grid sampler (sanity experiments)
  EngineConfig engine;
  ReflectionConfig reflection;
  LocalBallConfig local;

  void validate() const;
  // Canonical JSON of everything that influences results (workers excluded).
  std::string to_json() const;
};

struct MCEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  long n = 0;
  std::uint64_t seed = 0;
  std::string config;         // canonical JSON of quantity, inputs and MCConfig
  std::string manifest_hash;  // sha256 of `config`
  bool variance_blowup = false;
  long capped = 0;  // samples that hit the horizon cap

  double z_score(double reference) const { return (mean - reference) / stderr_; }
  double rel_stderr() const { return stderr_ / std::abs(mean); }
  std::string to_json() const;
};

// Builds an MCEstimate from per-sample values in index order.
MCEstimate summarize(const std::vector<double>& values, const std::string& quantity, const std::string& inputs_json,
                     const MCConfig& cfg);

// Per-sample variance of rho^{-s} is finite iff -2s < 4/gamma^2 and -2s < 2(Q - alpha_k)/gamma for each k.
bool three_point_variance_blowup(const std::vector<double>& weights, double s, double gamma);

// ---- three-point
// rho = int |x|_+^{gamma sum} |x|^{-gamma a1} |x-1|^{-gamma a2} dM_gamma; insertions at 0, 1, infinity.
KernelSpec three_point_kernel(const WeightTriple& w, double gamma);
MCEstimate estimate_three_point(const WeightTriple& w, const LiouvilleParams& p, const MCConfig& cfg);
// Unit-volume constant mu^s C / Gamma(s) = 2 gamma^{-1} E[rho^{-s}].
MCEstimate estimate_three_point_unit_volume(const WeightTriple& w, const LiouvilleParams& p, const MCConfig& cfg);

// ---- reflection
MCEstimate estimate_reflection_bar(double alpha, const LiouvilleParams& p, const MCConfig& cfg);
// Full R(alpha) = mu^p Gamma(-p) p Rbar(alpha), applied per sample.
MCEstimate estimate_reflection(double alpha, const LiouvilleParams& p, const MCConfig& cfg);
// Rbar from the closed form; at a pole of Gamma(-p) the symmetric limit is returned.
double r_bar_dozz(double alpha, const LiouvilleParams& p);

// ---- two-point limit: (a1 - a3 + a2) C(a1, a2, a3) -> a R(a3) as a1 -> a3 - a2, a = 4 if a2 = a3 else 2.
struct TwoPointLimitReport {
  double alpha2 = 0.0, alpha3 = 0.0;
  std::vector<double> eps;
  std::vector<MCEstimate> scaled;  // eps * C(a3 - a2 + eps, a2, a3)
  std::vector<double> dozz_scaled;
  LinearFit fit;  // weighted in 1/stderr^2, linear in eps
  double limit = 0.0, limit_se = 0.0;
  double prefactor = 4.0;
  double target = 0.0;  // prefactor * R(alpha3)
  double z_score() const { return (limit - target) / limit_se; }
  std::string to_json() const;
};
TwoPointLimitReport estimate_two_point_limit(double alpha2, double alpha3, const std::vector<double>& eps_list,
                                             const LiouvilleParams& p, const MCConfig& cfg);

// ---- four-point with degenerate insertion alpha0 at z
KernelSpec four_point_kernel(std::complex<double> z, const WeightTriple& w, double alpha0, double gamma);
MCEstimate estimate_four_point(std::complex<double> z, const WeightTriple& w, double alpha0, const LiouvilleParams& p,
                               const MCConfig& cfg);

// ---- tails
struct TailFitReport {
  double fitted_slope = 0.0;
  double slope_ci = 0.0;  // 1 sigma, block bootstrap
  double amplitude = 0.0;  // P(W > t) t^{p} at the theoretical exponent
  double amplitude_ci = 0.0;
  double theory_slope = 0.0;
  double theory_amplitude = 0.0;  // |z|^{4 alpha (alpha - Q)} F(z)^p Rbar
  double rbar = 0.0, rbar_se = 0.0;
  double x_min = 0.0, x_max = 0.0;
  int n_thresholds = 0;
  long min_exceedances = 0;
  long n = 0;
  double ratio() const { return amplitude / theory_amplitude; }
  std::string to_json() const;
};
struct TailConfig {
  double top_fraction = 0.01;
  int n_thresholds = 20;
  long min_exceedances = 30;
  int bootstrap_blocks = 20;
  int bootstrap_reps = 400;
};
// Fits log P(W > t) vs log t on the top order statistics of `w` (any order).
TailFitReport fit_tail(const std::vector<double>& w, double theory_slope, const TailConfig& tc, std::uint64_t seed);
// Samples W = int_{B(z,1)} F |x - z|^{-gamma alpha} dM and fits its tail; rbar from estimate_reflection_bar
// with `rbar_samples` paths (0: closed form).
TailFitReport fit_tail_one_insertion(double alpha, std::complex<double> z, std::function<double(std::complex<double>)> log_f,
                                     const LiouvilleParams& p, const MCConfig& cfg, long rbar_samples,
                                     const TailConfig& tc = {});

// ---- moments
struct MomentLine {
  double p = 0.0;
  std::vector<double> eps, log_moment, log_moment_se;
  LinearFit fit;
  double theory_slope = 0.0;
};
struct MomentScalingReport {
  double gamma = 0.0, alpha = 0.0;
  std::vector<MomentLine> lines;
  std::string to_json() const;
};
// log E[(int_{B(z,eps)} |x-z|^{-gamma alpha} dM)^p] against log eps, compared to gamma (Q - alpha) p - gamma^2 p^2 / 2.
// The ball centre z (|z| > 2) should sit far out so the reference density is nearly flat on B(z, 1).
MomentScalingReport moment_scaling_report(double gamma, double alpha, const std::vector<double>& p_list,
                                          const std::vector<double>& eps_list, const MCConfig& cfg,
                                          std::complex<double> z = {10.0, 0.0});

struct FreezingReport {
  double gamma = 0.0, alpha = 0.0, p = 0.0;
  std::vector<double> eps, log_moment, log_moment_se;
  LinearFit fit;
  double bound_slope = 0.0;  // (alpha - Q)^2 / 2
  std::string to_json() const;
};
// E[(int_{|x| > eps} |x|^{-gamma alpha} dM)^{-p}] for alpha > Q, Q < alpha < Q + gamma p.
FreezingReport freezing_report(double gamma, double alpha, double p, const std::vector<double>& eps_list,
                               const MCConfig& cfg);

}  // namespace liouville

#endif  // LIOUVILLE_ESTIMATORS_HPP_
