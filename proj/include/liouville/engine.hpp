#ifndef LIOUVILLE_ENGINE_HPP_
#define LIOUVILLE_ENGINE_HPP_

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liouville/gmc.hpp"
#include "liouville/rng.hpp"

namespace liouville {

// Insertion of weight `weight` at a finite non-zero point z.
struct PointInsertion {
  std::complex<double> z;
  double weight = 0.0;
};

// Integrand |x|_+^{gamma S} |x|^{-gamma alpha_zero} prod |x - z_k|^{-gamma a_k}
// against M_gamma, S = alpha_zero + alpha_inf + sum a_k.
struct KernelSpec {
  double gamma = 1.0;
  double alpha_zero = 0.0;
  double alpha_inf = 0.0;
  std::vector<PointInsertion> points;

  double Q() const { return 2.0 / gamma + gamma / 2.0; }
  // log of kernel times reference density exp(-2|s|), in cylinder coordinates.
  double log_fw(double s, double theta) const;
  // Same, at offset (ds, dth) from point k, accurate for tiny offsets.
  double log_fw_near(int k, double ds, double dth) const;
  void validate() const;
  std::string to_json() const;
};

struct EngineConfig {
  int n_modes = 32;
  int n_theta = 128;
  double ds = 2.0 * M_PI / 128;
  // Band |s| <= band_halfwidth resolved 2^band_levels times finer in s, theta and modes.
  int band_levels = 2;
  double band_halfwidth = 0.5;
  // Local disks of this radius (cylinder units) around positive-weight points.
  double ball_radius = 0.05;
  int ball_modes = 32;
  int ball_ntheta = 128;
  // Rows are streamed outward until their envelope falls this far below the running maximum.
  double envelope_drop = 30.0;
  double s_cap = 600.0;

  void validate() const;
  std::string to_json() const;
  static EngineConfig from_grid(const CylinderGrid& g);
};

struct CylinderSample {
  double log_mass = 0.0;
  double log_ball = -INFINITY;
  // Log mass restricted to s <= checkpoint, for each requested checkpoint.
  std::vector<double> log_checkpoints;
  int rows_pos = 0, rows_neg = 0;
  bool capped = false;
};

// Streaming sampler of rho = int F dM_gamma on the whole sphere.
class CylinderIntegrator {
 public:
  CylinderIntegrator(const KernelSpec& kernel, const EngineConfig& cfg, std::vector<double> checkpoints = {});
  ~CylinderIntegrator();

  CylinderSample sample(std::uint64_t seed, std::uint64_t index) const;
  // Deterministic integral of the kernel over |s| <= s_limit (disks included), i.e. E[rho] there.
  double expected_mass(double s_limit) const;
  // Checkpoints snapped to row boundaries.
  const std::vector<double>& checkpoints() const { return checkpoints_; }
  const KernelSpec& kernel() const { return kernel_; }
  const EngineConfig& config() const { return cfg_; }

  struct Row;
  struct Ball;

 private:
  KernelSpec kernel_;
  EngineConfig cfg_;
  std::vector<double> checkpoints_;
  double s_band_ = 0.0, ds_band_ = 0.0;
  int n_band_rows_ = 0, nth_band_ = 0, nm_band_ = 0;
  double s_tab_ = 40.0;
  std::vector<Row> rows_[2];  // [0]: s > 0, [1]: s < 0
  std::vector<Ball> balls_;

  Row far_row(int side, int k) const;
  void build_rows();
  void build_balls();
};

// Unit-volume reflection sampler: I = int e^{gamma B^alpha_s} Z_s ds over R.
struct ReflectionConfig {
  int n_modes = 64;
  int n_theta = 256;
  double ds = 2.0 * M_PI / 256;
  bool exact_path = true;
  double em_dt = 1e-3;
  double envelope_drop = 20.0;
  double horizon = 0.0;  // > 0: fixed horizon instead of the envelope rule
  double s_cap = 2000.0;
  void validate() const;
  std::string to_json() const;
};

struct ReflectionSample {
  double log_integral = 0.0;
  double horizon_used = 0.0;
  bool capped = false;
};

ReflectionSample sample_reflection_integral(double gamma, double alpha, const ReflectionConfig& cfg,
                                            std::uint64_t seed, std::uint64_t index);

// Exact local cylinder on B(z, 1), |z| > 2:
//   int_{u >= u_k} F(x) |x - z|^{-gamma alpha} M_gamma(d^2x),  x = z + e^{-u + i phi}.
struct LocalBallConfig {
  int n_modes = 32;
  int n_theta = 128;
  double du = M_LN2 / 16;
  double envelope_drop = 30.0;
  double u_cap = 2000.0;
  void validate() const;
};

class LocalBallSampler {
 public:
  // log_f: optional smooth log F(x); nullptr means F = 1.
  LocalBallSampler(double gamma, double alpha, std::complex<double> z, const LocalBallConfig& cfg,
                   std::vector<double> u_marks = {0.0}, double u_max = 0.0,
                   std::function<double(std::complex<double>)> log_f = nullptr);
  // Log mass of {u >= u_marks[i]} (i.e. |x - z| <= e^{-u_marks[i]}) for each mark.
  // with_far = false drops the independent far-field Gaussian (sd far_sd()) from every mark.
  std::vector<double> sample(std::uint64_t seed, std::uint64_t index, bool with_far = true) const;
  double far_sd() const { return eta_sd_; }
  // Annulus masses between consecutive marks are differences of these.
  const std::vector<double>& marks() const { return marks_; }
  double expected_mass(int mark) const;

 private:
  double gamma_, alpha_;
  std::complex<double> z_;
  LocalBallConfig cfg_;
  std::vector<double> marks_;
  double u_max_;
  std::vector<double> lambda_c_, lambda_s_;
  double eta_sd_;
  int n_tab_;
  std::vector<double> row_logc_, row_log_e_;
  std::vector<std::vector<double>> row_w_;
  double far_logc0_ = 0.0, far_slope_ = 0.0;
  double row_logc(int k, std::vector<double>* w) const;
};

}  // namespace liouville

#endif  // LIOUVILLE_ENGINE_HPP_
