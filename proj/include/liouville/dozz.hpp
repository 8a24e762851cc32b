#ifndef LIOUVILLE_DOZZ_HPP_
#define LIOUVILLE_DOZZ_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "liouville/special_functions.hpp"

namespace liouville {

struct LiouvilleParams {
  double gamma = 1.0;
  double mu = 1.0;

  double Q() const { return 2.0 / gamma + gamma / 2.0; }
  // pi mu l(gamma^2/4): the positive base of every cosmological-constant power.
  double scale() const;
  // (mu pi l(g^2/4))^{4/g^2} / (pi l(4/g^2)); +inf when 4/g^2 is a positive integer.
  double mu_dual() const;
  // Parameters (4/gamma, mu_dual). Valid even when mu_dual is infinite: only scale() is used.
  LiouvilleParams dual() const;
  bool is_dual() const { return dual_scale_ > 0.0; }
  void validate() const;
  UpsilonConfig upsilon_config(double tol = 1e-12) const;

 private:
  double dual_scale_ = 0.0;
};

struct WeightTriple {
  cplx a1, a2, a3;

  cplx sum() const { return a1 + a2 + a3; }
  cplx s(const LiouvilleParams& p) const { return (sum() - 2.0 * p.Q()) / p.gamma; }
  bool is_real() const;
  // sum > 2Q and each alpha < Q (real weights only).
  bool seiberg_ok(const LiouvilleParams& p) const;
  // -s < 4/gamma^2 ^ min_k 2(Q - alpha_k)/gamma and each alpha < Q.
  bool extended_ok(const LiouvilleParams& p) const;
  bool gamma_pole(const LiouvilleParams& p) const;
  std::string to_string() const;
};

cplx conformal_weight(cplx alpha, const LiouvilleParams& p);

QuadResult c_dozz(const WeightTriple& w, const LiouvilleParams& p, const UpsilonConfig& cfg);
// Unit-volume value mu^s C / Gamma(s).
QuadResult c_dozz_unit_volume(const WeightTriple& w, const LiouvilleParams& p, const UpsilonConfig& cfg);

cplx r_dozz(cplx alpha, const LiouvilleParams& p);
// Inverse of R = mu^{p} Gamma(-p) p R-bar with p = 2(Q - alpha)/gamma.
cplx r_bar_from_r(cplx alpha, const LiouvilleParams& p);
cplx r_from_r_bar(cplx alpha, cplx r_bar, const LiouvilleParams& p);

// The product of l-factors A(chi), chi in {gamma/2, 2/gamma}.
cplx shift_coefficient_A(double chi, const WeightTriple& w, const LiouvilleParams& p);
// Factor F with C(a1 + chi, .) = F C(a1 - chi, .), i.e. -A(chi)/(pi mu_chi) where
// mu_chi = mu for chi = gamma/2 and mu_dual for chi = 2/gamma. The l(-chi^2)/mu_chi
// combination is evaluated through l(x) l(-x) = -1/x^2 so it stays finite when mu_dual is not.
cplx shift_factor_C(bool dual_step, const WeightTriple& w, const LiouvilleParams& p);

cplx b_coefficient(cplx alpha, const LiouvilleParams& p);

struct CrossingT {
  cplx T;
  cplx T_bar;
};
CrossingT crossing_T(cplx alpha_p, cplx eps, cplx alpha, const LiouvilleParams& p);
cplx crossing_T_tilde(cplx alpha, cplx eps, cplx alpha_p, const LiouvilleParams& p);

struct CrossingABC {
  cplx a, b, c;
};
CrossingABC crossing_T_abc(cplx alpha_p, cplx eps, cplx alpha, const LiouvilleParams& p);
CrossingABC crossing_T_tilde_abc(cplx alpha, cplx eps, cplx alpha_p, const LiouvilleParams& p);

// L(eps, alpha, alpha') = l(c-1) l(c-a-b+1) / (l(c-a) l(c-b)).
cplx l_coefficient(cplx eps, cplx alpha, cplx alpha_p, const LiouvilleParams& p);
// Factored form at eps = g/2 + e1, alpha = g/2 + e2, alpha' = 2/g + e3.
cplx l_coefficient_factored(cplx e1, cplx e2, cplx e3, const LiouvilleParams& p);

// lim_{eps -> g/2} (eps - g/2) T-bar(alpha, eps, alpha).
cplx t_bar_residue(cplx alpha, const LiouvilleParams& p);
// R-bar(alpha) = t_bar_residue * C-bar(alpha, gamma, alpha) * gamma / (4 (Q - alpha)).
cplx r_bar_from_structure_constant(cplx alpha, const LiouvilleParams& p, const UpsilonConfig& cfg);

// Both sides of c_gamma = (g^2/4) mu pi R(gamma) = (mu pi l(g^2/4))^{4/g^2} / l(4/g^2),
// multiplied through by l(4/g^2) so that they stay finite when 4/g^2 is an integer.
struct CGammaSides {
  cplx lhs, rhs;
  bool cleared;  // true when the l(4/g^2) factor cancelled a pole analytically
};
CGammaSides c_gamma_relation(const LiouvilleParams& p);

// Hypergeometric parameters of the degenerate four-point function.
HypParams bpz_params(double alpha0, const WeightTriple& w, const LiouvilleParams& p);
// A_gamma: ratio of the |F_+|^2 and |F_-|^2 coefficients fixed by single-valuedness.
cplx a_gamma_coefficient(const HypParams& h);

struct FourPointRhs {
  QuadResult value;
  bool reflection = false;
  cplx coef_minus, coef_plus;
  BpzBasis basis;
};
FourPointRhs four_point_rhs(cplx z, const WeightTriple& w, double alpha0, const LiouvilleParams& p,
                            const UpsilonConfig& cfg);

struct IdentityReport {
  std::string name;
  std::string point;
  cplx lhs, rhs;
  double residual = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string note;

  std::string to_json() const;
};

IdentityReport make_report(const std::string& name, const std::string& point, cplx lhs, cplx rhs,
                           double tol, const std::string& note = "");

std::vector<IdentityReport> identity_suite(const LiouvilleParams& p, int n_points, std::uint64_t seed,
                                           double tol);
std::vector<IdentityReport> specfun_suite(double gamma, int n_points, std::uint64_t seed, double tol);

}  // namespace liouville

#endif  // LIOUVILLE_DOZZ_HPP_
