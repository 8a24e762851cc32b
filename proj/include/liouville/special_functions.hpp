#ifndef LIOUVILLE_SPECIAL_FUNCTIONS_HPP_
#define LIOUVILLE_SPECIAL_FUNCTIONS_HPP_

#include <complex>

#include "liouville/errors.hpp"

namespace liouville {

using cplx = std::complex<double>;

// Gamma arguments closer than this to a non-positive integer are poles.
inline constexpr double kPoleTol = 1e-12;

struct QuadResult {
  cplx value{0.0, 0.0};
  double err_bound = 0.0;
  int shifts = 0;      // continuation steps applied (upsilon only)
  int zero_order = 0;  // > 0 when the value is an exact zero
};

// gamma may also be given in the dual range gamma > 2: the function only
// depends on the unordered pair {gamma/2, 2/gamma}.
struct UpsilonConfig {
  double gamma = 1.0;
  double t_cut = 80.0;
  int n_nodes = 1600;
  double series_eps = 1e-3;
  double tol = 1e-12;

  double Q() const { return 2.0 / gamma + gamma / 2.0; }
  // min(gamma, 4/gamma): the continuation step is half of it.
  double gamma_hat() const;
  // Quadrature is used only where the integrand decays at least like exp(-kappa_min t),
  // i.e. kappa_min <= Re z <= Q - kappa_min.
  double kappa_min() const;
  // Throws DomainError when the invariants do not hold.
  void validate() const;
  // Analytic bound on the integral of |integrand| over [t_cut, inf) for w = Q/2 - z.
  double tail_bound(cplx w) const;
  // Config with t_cut and n_nodes sized for gamma.
  static UpsilonConfig for_gamma(double gamma, double tol = 1e-12);
};

struct HypParams {
  cplx a, b, c;
};

// If z is within kPoleTol of a non-positive integer, returns that integer's
// magnitude n (z ~ -n); otherwise returns -1.
int gamma_pole_index(cplx z);

// Principal log Gamma(z). Imaginary part is the phase reduced to (-pi, pi].
cplx log_gamma(cplx z);
cplx gamma_fn(cplx z);
// 1/Gamma(z), zero at the poles of Gamma.
cplx rgamma_fn(cplx z);

// l(x) = Gamma(x) / Gamma(1 - x). PoleError at x in -N, ZeroError at x in {1, 2, ...}.
cplx l_func(cplx x);

QuadResult upsilon(cplx z, const UpsilonConfig& cfg);
// Quadrature of ln Upsilon inside the strip 0 < Re z < Q, no continuation.
QuadResult log_upsilon_strip(cplx z, const UpsilonConfig& cfg);
// Upsilon'(0) = Upsilon(gamma/2), cross-checked by a centred difference.
QuadResult upsilon_prime_zero(const UpsilonConfig& cfg);
// Centred difference (Upsilon(h) - Upsilon(-h)) / 2h, err_bound holds the truncation estimate.
QuadResult upsilon_prime_zero_fd(const UpsilonConfig& cfg, double h = 1e-4);

QuadResult hyp2f1(const HypParams& p, cplx z, double tol = 1e-15, int max_terms = 200000);

struct BpzBasis {
  QuadResult f_minus, f_plus, g_minus, g_plus;
};
BpzBasis bpz_basis(const HypParams& p, cplx z);

// F_- = mm G_- + mp G_+,  F_+ = pm G_- + pp G_+.
struct ConnectionCoefficients {
  cplx mm, mp, pm, pp;
};
ConnectionCoefficients connection_coefficients(const HypParams& p);

double relative_residual(cplx lhs, cplx rhs);

struct CheckResult {
  QuadResult numeric;
  cplx closed_form;
  double residual = 0.0;  // relative
};

CheckResult lemma_integral_check(double p, double a);
double lemma_integral_rhs(double p, double a);

enum class PlanarIdentity { kHolomorphic, kMixed };
cplx planar_identity_rhs(double gamma, double alpha1, PlanarIdentity which);
CheckResult planar_identity_check(double gamma, double alpha1, PlanarIdentity which);

}  // namespace liouville

#endif  // LIOUVILLE_SPECIAL_FUNCTIONS_HPP_
