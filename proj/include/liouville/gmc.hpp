#ifndef LIOUVILLE_GMC_HPP_
#define LIOUVILLE_GMC_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liouville/rng.hpp"

namespace liouville {

struct RefineAnchor {
  double s0 = 0.0, theta0 = 0.0;
  int levels = 0;
};

// Log-polar grid: x = exp(-s + i theta), s = -ln|x|.
struct CylinderGrid {
  double s_min = -12.0, s_max = 12.0;
  int n_s = 480;
  int n_theta = 128;
  int n_modes = 32;
  std::vector<RefineAnchor> refine;

  double ds() const { return (s_max - s_min) / n_s; }
  double dtheta() const;
  double s_mid(int i) const { return s_min + (i + 0.5) * ds(); }
  double theta_mid(int j) const { return (j + 0.5) * dtheta(); }
  int max_levels() const;
  void validate() const;
  std::string to_json() const;
};

struct SeedManifest {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
};

// Field X(e^{-s+i theta}) = B_s + sum_n n^{-1/2}(a_n(s) cos n theta + b_n(s) sin n theta),
// sampled at cell midpoints. Mode paths are stored standardized.
struct CylinderField {
  CylinderGrid grid;
  std::vector<double> radial;             // B at s_mid(i)
  std::vector<std::vector<double>> a, b;  // [mode-1][i]
  SeedManifest seed;

  double lateral(int i, int j) const;
  double value(int i, int j) const { return radial[i] + lateral(i, j); }
  // Variance of value(i, j): |s| + H_{n_modes}.
  double variance(int i) const;
};

struct ChaosMeasure {
  CylinderGrid grid;
  double gamma = 0.0;
  std::vector<double> cell_mass;  // row-major [i * n_theta + j]
  int n_modes = 0;
  SeedManifest seed;

  double total() const;
  double mass(int i, int j) const { return cell_mass[std::size_t(i) * grid.n_theta + j]; }
};

// Two-sided path on a symmetric grid s = -horizon .. horizon.
struct ConditionedPath {
  std::vector<double> s;
  std::vector<double> values;
  double nu = 0.0;
  // Linear interpolation at time t.
  double at(double t) const;
};

CylinderField sample_field(const CylinderGrid& grid, RngStream& rng);
// Reference weight exp(-2|s|) integrated over each cell.
ChaosMeasure build_chaos(const CylinderField& field, double gamma);
// Closed-form E[total mass] over the truncated grid: 2 pi (1 - (e^{-2 s_max} + e^{2 s_min}) / 2).
double expected_truncated_mass(const CylinderGrid& grid);

// Kernel evaluated at (s, theta). Cells of refinement anchors are split
// 2^levels times per direction and contribute at their finer midpoints.
using CylinderKernel = std::function<double(double s, double theta)>;
double integrate_kernel(const ChaosMeasure& m, const CylinderKernel& kernel);

// Euler-Maruyama for the nu-coth diffusion started at sqrt(dt), negated; steps
// that would cross 0 are redrawn.
ConditionedPath sample_conditioned_bm(double nu, double horizon, double dt, RngStream& rng);
// Exact law on the same grid: the norm of a 3D Brownian motion with drift of size nu.
ConditionedPath sample_conditioned_bm_exact(double nu, double horizon, double dt, RngStream& rng);
// Post-maximum segment of a drifted Brownian motion B_s - nu s on step dt,
// shifted so that it starts at 0. Returned one-sided, values at s = k dt.
std::vector<double> williams_post_max_path(double nu, double length, double dt, RngStream& rng);
// M = sup_s (B_s - nu s) ~ Exp(2 nu).
double sample_max_drifted_bm(double nu, RngStream& rng);

// One-sided Z process: Z on each of n_cells cells of height ds, theta-integrated.
std::vector<double> sample_Z_process(int n_cells, double ds, int n_modes, int n_theta, double gamma,
                                     RngStream& rng);

// Incremental samplers for -(nu-coth diffusion), the negative conditioned path.
class BesselDriftPath {
 public:
  explicit BesselDriftPath(double nu) : nu_(nu) {}
  // Advances by dt and returns the new value (<= 0).
  double step(double dt, RngStream& rng);
  double value() const;

 private:
  double nu_;
  double p_[3] = {0.0, 0.0, 0.0};
};

class CothEulerPath {
 public:
  CothEulerPath(double nu, double dt);
  double step(double ds, RngStream& rng);
  double value() const { return -x_; }

 private:
  double nu_, dt_, x_;
};

// Dense exact sampler on the n x n midpoint grid of a square with corner
// (x0, y0) and side `side`, covariance G, diagonal set to the cell average of G.
class DenseOracle {
 public:
  DenseOracle(int n, double x0, double y0, double side, double jitter = 1e-10);
  int n() const { return n_; }
  double cell_area() const { return h_ * h_; }
  const Eigen::VectorXd& variance() const { return var_; }
  Eigen::Vector2d point(int k) const;
  double covariance(int i, int j) const;
  Eigen::VectorXd sample(RngStream& rng) const;
  // Chaos mass of the square with reference weight |x|_+^{-4}.
  double chaos_mass(const Eigen::VectorXd& field, double gamma) const;

 private:
  int n_;
  double x0_, y0_, side_, h_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd var_;
};

// GFF covariance G(x, y) = ln 1/|x-y| + ln|x|_+ + ln|y|_+.
double gff_covariance(double x1, double y1, double x2, double y2);
// Mean of ln(1/|x - y|) over independent uniform x, y in a square of side h.
double self_log_average(double h);

// Binary dump: "LVCM" magic, u32 version, u32 header length, JSON header,
// then row-major float64 little-endian masses.
void dump_chaos_measure(const ChaosMeasure& m, const std::string& path, const std::string& extra_json = "{}");
ChaosMeasure load_chaos_measure(const std::string& path);

}  // namespace liouville

#endif  // LIOUVILLE_GMC_HPP_
