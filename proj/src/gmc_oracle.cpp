#include <cmath>

#include <gsl/gsl_integration.h>

#include "liouville/errors.hpp"
#include "liouville/gmc.hpp"

namespace liouville {

double gff_covariance(double x1, double y1, double x2, double y2) {
  auto lp = [](double x, double y) { return std::max(0.0, 0.5 * std::log(x * x + y * y)); };
  return -0.5 * std::log((x1 - x2) * (x1 - x2) + (y1 - y2) * (y1 - y2)) + lp(x1, y1) + lp(x2, y2);
}

double self_log_average(double h) {
  // Difference of two uniform points has density (1-|u|)(1-|v|); integrate
  // 4 (1-u)(1-v) ln|(u,v)| over [0,1]^2 in polar coordinates (two triangles).
  static const double c = [] {
    gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(64);
    double acc = 0.0;
    for (int i = 0; i < 64; ++i) {
      double phi, wphi;
      gsl_integration_glfixed_point(0.0, M_PI / 4, i, &phi, &wphi, t);
      const double rmax = 1.0 / std::cos(phi), lr = std::log(rmax);
      // int_0^R r^n ln r dr = R^{n+1} (ln R / (n+1) - 1 / (n+1)^2)
      auto moment = [&](int n) { return std::pow(rmax, n + 1) * (lr / (n + 1) - 1.0 / ((n + 1) * (n + 1))); };
      const double cs = std::cos(phi), sn = std::sin(phi);
      const double inner = moment(1) - (cs + sn) * moment(2) + cs * sn * moment(3);
      acc += wphi * inner;
    }
    gsl_integration_glfixed_table_free(t);
    return 8.0 * acc;
  }();
  return -std::log(h) - c;
}

DenseOracle::DenseOracle(int n, double x0, double y0, double side, double jitter)
    : n_(n), x0_(x0), y0_(y0), side_(side), h_(side / n) {
  if (n < 1 || n > 64) throw BoundsError("dense oracle: need 1 <= n <= 64");
  if (!(side > 0.0)) throw BoundsError("dense oracle: need side > 0");
  const int m = n * n;
  cov_.resize(m, m);
  var_.resize(m);
  for (int i = 0; i < m; ++i) {
    const Eigen::Vector2d pi = point(i);
    for (int j = 0; j < i; ++j) {
      const Eigen::Vector2d pj = point(j);
      cov_(i, j) = cov_(j, i) = gff_covariance(pi.x(), pi.y(), pj.x(), pj.y());
    }
    const double lp = std::max(0.0, std::log(pi.norm()));
    cov_(i, i) = self_log_average(h_) + 2.0 * lp;
    var_(i) = cov_(i, i);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd c = cov_;
    c.diagonal().array() += jitter;
    llt.compute(c);
    if (llt.info() != Eigen::Success) throw FactorizationError("dense oracle: covariance is not positive definite");
  }
  chol_ = llt.matrixL();
}

Eigen::Vector2d DenseOracle::point(int k) const {
  const int i = k / n_, j = k % n_;
  return {x0_ + (i + 0.5) * h_, y0_ + (j + 0.5) * h_};
}

double DenseOracle::covariance(int i, int j) const { return cov_(i, j); }

Eigen::VectorXd DenseOracle::sample(RngStream& rng) const {
  Eigen::VectorXd z(n_ * n_);
  for (int k = 0; k < z.size(); ++k) z(k) = rng.normal();
  return chol_.triangularView<Eigen::Lower>() * z;
}

double DenseOracle::chaos_mass(const Eigen::VectorXd& field, double gamma) const {
  // reference weight |x|_+^{-4} integrated per cell with 4x4 Gauss-Legendre
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  double total = 0.0;
  for (int k = 0; k < field.size(); ++k) {
    const Eigen::Vector2d c = point(k);
    double w = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        const double x = c.x() + 0.5 * h_ * gx[a], y = c.y() + 0.5 * h_ * gx[b];
        const double r2 = x * x + y * y;
        w += gw[a] * gw[b] * (r2 > 1.0 ? 1.0 / (r2 * r2) : 1.0);
      }
    w *= 0.25 * h_ * h_;
    total += w * std::exp(gamma * field(k) - 0.5 * gamma * gamma * var_(k));
  }
  return total;
}

}  // namespace liouville
