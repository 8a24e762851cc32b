#include "liouville/dozz.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace liouville {

namespace {

constexpr double kPi = 3.14159265358979323846;

// l(x) with zeros returned as 0 rather than thrown.
cplx l_num(cplx x) {
  try {
    return l_func(x);
  } catch (const ZeroError&) {
    return 0.0;
  }
}

// 1/l(x) = l(1-x): finite at poles of l, PoleError at its zeros.
cplx l_inv(cplx x) { return l_num(1.0 - x); }

bool near_int(double x) { return std::abs(x - std::round(x)) < kPoleTol; }

void check_cfg(const UpsilonConfig& cfg, const LiouvilleParams& p) {
  if (std::abs(cfg.gamma - p.gamma) > 1e-14 * p.gamma)
    throw DomainError("upsilon config gamma does not match Liouville parameters");
}

std::string fmt_c(cplx z) {
  std::ostringstream os;
  os.precision(17);
  if (z.imag() == 0.0)
    os << z.real();
  else
    os << "(" << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i)";
  return os.str();
}

// Multiplies in an upsilon value, tracking relative error. Returns false on a zero.
bool mul_ups(cplx z, const UpsilonConfig& cfg, cplx& acc, double& rel, bool denominator) {
  QuadResult u = upsilon(z, cfg);
  if (u.zero_order > 0 || u.value == 0.0) {
    if (denominator)
      throw PoleError("upsilon zero in denominator at z = " + fmt_c(z), u.zero_order > 0 ? u.zero_order : 1);
    acc = 0.0;
    return false;
  }
  acc = denominator ? acc / u.value : acc * u.value;
  rel += u.err_bound / std::abs(u.value);
  return true;
}

}  // namespace

double LiouvilleParams::scale() const {
  if (dual_scale_ > 0.0) return dual_scale_;
  return kPi * mu * l_func(gamma * gamma / 4.0).real();
}

double LiouvilleParams::mu_dual() const {
  double x = 4.0 / (gamma * gamma);
  double ls = l_num(x).real();
  double num = std::pow(scale(), x);
  if (ls == 0.0) return std::numeric_limits<double>::infinity();
  return num / (kPi * ls);
}

LiouvilleParams LiouvilleParams::dual() const {
  LiouvilleParams d;
  d.gamma = 4.0 / gamma;
  const double sc = std::pow(scale(), 4.0 / (gamma * gamma));
  if (d.gamma < 2.0) {
    d.mu = sc / (kPi * l_func(d.gamma * d.gamma / 4.0).real());
  } else {
    d.dual_scale_ = sc;
    d.mu = mu_dual();
  }
  return d;
}

void LiouvilleParams::validate() const {
  if (!(std::isfinite(gamma) && gamma > 0.0)) throw DomainError("gamma must be positive");
  if (!is_dual() && !(gamma < 2.0)) throw DomainError("gamma must lie in (0,2)");
  if (!(mu > 0.0)) throw DomainError("mu must be positive");
  if (!(scale() > 0.0 && std::isfinite(scale()))) throw DomainError("cosmological scale must be finite and positive");
}

UpsilonConfig LiouvilleParams::upsilon_config(double tol) const { return UpsilonConfig::for_gamma(gamma, tol); }

bool WeightTriple::is_real() const { return a1.imag() == 0.0 && a2.imag() == 0.0 && a3.imag() == 0.0; }

bool WeightTriple::seiberg_ok(const LiouvilleParams& p) const {
  if (!is_real()) return false;
  double q = p.Q();
  return sum().real() > 2 * q && a1.real() < q && a2.real() < q && a3.real() < q;
}

bool WeightTriple::extended_ok(const LiouvilleParams& p) const {
  if (!is_real()) return false;
  double q = p.Q(), g = p.gamma;
  if (!(a1.real() < q && a2.real() < q && a3.real() < q)) return false;
  double m = 4.0 / (g * g);
  for (cplx a : {a1, a2, a3}) m = std::min(m, 2.0 * (q - a.real()) / g);
  return -s(p).real() < m;
}

bool WeightTriple::gamma_pole(const LiouvilleParams& p) const {
  cplx sv = s(p);
  return std::abs(sv.imag()) < kPoleTol && sv.real() < kPoleTol && near_int(sv.real());
}

std::string WeightTriple::to_string() const {
  return "[" + fmt_c(a1) + "," + fmt_c(a2) + "," + fmt_c(a3) + "]";
}

cplx conformal_weight(cplx alpha, const LiouvilleParams& p) { return alpha / 2.0 * (p.Q() - alpha / 2.0); }

QuadResult c_dozz(const WeightTriple& w, const LiouvilleParams& p, const UpsilonConfig& cfg) {
  check_cfg(cfg, p);
  const double g = p.gamma, q = p.Q();
  const cplx ab = w.sum();
  QuadResult out;
  double rel = 0.0;
  cplx acc = 1.0;
  // Denominators first so a pole is reported even when a numerator vanishes.
  cplx den[4] = {(ab - 2.0 * q) / 2.0, ab / 2.0 - w.a1, ab / 2.0 - w.a2, ab / 2.0 - w.a3};
  for (cplx z : den) mul_ups(z, cfg, acc, rel, true);
  for (cplx z : {w.a1, w.a2, w.a3})
    if (!mul_ups(z, cfg, acc, rel, false)) {
      out.zero_order = 1;
      return out;
    }
  QuadResult up = upsilon_prime_zero(cfg);
  acc *= up.value;
  rel += up.err_bound / std::abs(up.value);
  double base = p.scale() * std::pow(g / 2.0, 2.0 - g * g / 2.0);
  cplx pref = std::exp((2.0 * q - ab) / g * std::log(base));
  out.value = pref * acc;
  out.err_bound = std::abs(out.value) * (rel + 64 * std::numeric_limits<double>::epsilon());
  return out;
}

QuadResult c_dozz_unit_volume(const WeightTriple& w, const LiouvilleParams& p, const UpsilonConfig& cfg) {
  if (!std::isfinite(p.mu)) throw DomainError("unit volume constant needs a finite mu");
  cplx sv = w.s(p);
  QuadResult c = c_dozz(w, p, cfg);
  cplx f = std::exp(sv * std::log(p.mu)) * rgamma_fn(sv);
  c.value *= f;
  c.err_bound *= std::abs(f);
  return c;
}

cplx r_dozz(cplx alpha, const LiouvilleParams& p) {
  const double g = p.gamma;
  const cplx nu = p.Q() - alpha;
  // Gamma(-x) / Gamma(x) = -Gamma(1 - x) / Gamma(1 + x), regular at alpha = Q
  const cplx x1 = g * nu / 2.0, x2 = 2.0 * nu / g;
  for (cplx x : {x1, x2})
    if (gamma_pole_index(1.0 - x) >= 0) throw PoleError("R pole at alpha = " + fmt_c(alpha));
  cplx pw = std::exp(2.0 * nu / g * std::log(p.scale()));
  return -pw * gamma_fn(1.0 - x1) * rgamma_fn(1.0 + x1) * gamma_fn(1.0 - x2) * rgamma_fn(1.0 + x2);
}

cplx r_bar_from_r(cplx alpha, const LiouvilleParams& p) {
  cplx e = 2.0 * (p.Q() - alpha) / p.gamma;
  if (gamma_pole_index(-e) >= 0) throw PoleError("Gamma(-2(Q-alpha)/gamma) pole");
  return r_dozz(alpha, p) / (std::exp(e * std::log(p.mu)) * gamma_fn(-e) * e);
}

cplx r_from_r_bar(cplx alpha, cplx r_bar, const LiouvilleParams& p) {
  cplx e = 2.0 * (p.Q() - alpha) / p.gamma;
  if (gamma_pole_index(-e) >= 0) throw PoleError("Gamma(-2(Q-alpha)/gamma) pole");
  return std::exp(e * std::log(p.mu)) * gamma_fn(-e) * e * r_bar;
}

namespace {

// A(chi) / l(-chi^2).
cplx a_rest(double chi, const WeightTriple& w, const LiouvilleParams& p) {
  const cplx ab = w.sum();
  const double q = p.Q(), c2 = chi * chi;
  return l_num(chi * w.a1) * l_num(chi * w.a1 - c2) * l_num(chi / 2.0 * (ab - 2.0 * w.a1 - chi)) *
         l_inv(chi / 2.0 * (ab - chi - 2.0 * q)) * l_inv(chi / 2.0 * (ab - 2.0 * w.a3 - chi)) *
         l_inv(chi / 2.0 * (ab - 2.0 * w.a2 - chi));
}

double step_chi(bool dual_step, const LiouvilleParams& p) { return dual_step ? 2.0 / p.gamma : p.gamma / 2.0; }

}  // namespace

cplx shift_coefficient_A(double chi, const WeightTriple& w, const LiouvilleParams& p) {
  if (std::abs(chi - p.gamma / 2.0) > 1e-14 && std::abs(chi - 2.0 / p.gamma) > 1e-14)
    throw DomainError("chi must be gamma/2 or 2/gamma");
  return l_func(-chi * chi) * a_rest(chi, w, p);
}

cplx shift_factor_C(bool dual_step, const WeightTriple& w, const LiouvilleParams& p) {
  const double chi = step_chi(dual_step, p);
  // pi mu_chi l(chi^2) is scale for chi = gamma/2 and scale^{4/gamma^2} for chi = 2/gamma.
  const double sc = dual_step ? std::pow(p.scale(), 4.0 / (p.gamma * p.gamma)) : p.scale();
  return a_rest(chi, w, p) / (std::pow(chi, 4) * sc);
}

cplx b_coefficient(cplx alpha, const LiouvilleParams& p) {
  const double g = p.gamma, g2 = g * g / 4.0;
  return p.scale() * g2 * g2 * l_inv(g * alpha / 2.0) * l_inv(2.0 + g2 - g * alpha / 2.0);
}

CrossingABC crossing_T_abc(cplx ap, cplx e, cplx a, const LiouvilleParams& p) {
  const double g = p.gamma, q = p.Q();
  return {g / 4.0 * (ap + a + e - q - g) - 0.5, g / 4.0 * (ap - a + e - q) + 0.5, 1.0 - g / 2.0 * (q - ap)};
}

CrossingT crossing_T(cplx ap, cplx e, cplx a, const LiouvilleParams& p) {
  const double g = p.gamma, g2 = g * g / 4.0, q = p.Q();
  CrossingABC h = crossing_T_abc(ap, e, a, p);
  // -mu pi / l(-g^2/4) = scale g^4/16.
  cplx t = p.scale() * g2 * g2 * l_num(h.a) * l_num(h.b) * l_inv(h.c) * l_inv(h.a + h.b - h.c) * l_inv(g * e / 2.0) *
           l_inv(2.0 + g2 - g * e / 2.0);
  CrossingT out{t, 0.0};
  if (std::isfinite(p.mu)) {
    cplx up = (a + ap + e + g / 2.0 - 2.0 * q) / g, dn = (a + ap + e - g / 2.0 - 2.0 * q) / g;
    if (gamma_pole_index(up) >= 0) throw PoleError("T-bar numerator Gamma pole");
    out.T_bar = t / p.mu * gamma_fn(up) * rgamma_fn(dn);
  }
  return out;
}

CrossingABC crossing_T_tilde_abc(cplx a, cplx e, cplx ap, const LiouvilleParams& p) {
  const double g = p.gamma, q = p.Q();
  return {(ap + a + e - q - 4.0 / g) / g - 0.5, (a - ap + e - q) / g + 0.5, 1.0 - 2.0 / g * (q - a)};
}

cplx crossing_T_tilde(cplx a, cplx e, cplx ap, const LiouvilleParams& p) {
  CrossingABC h = crossing_T_tilde_abc(a, e, ap, p);
  return l_num(h.a) * l_num(h.b) * l_inv(h.c) * l_inv(h.a + h.b - h.c);
}

cplx l_coefficient(cplx e, cplx a, cplx ap, const LiouvilleParams& p) {
  const double g = p.gamma, q = p.Q();
  cplx ca = (ap + a + e - q - 4.0 / g) / g - 0.5;
  cplx cb = (a - ap + e - q) / g + 0.5;
  cplx cc = 1.0 - 2.0 / g * (q - e);
  return l_num(cc - 1.0) * l_num(cc - ca - cb + 1.0) * l_inv(cc - ca) * l_inv(cc - cb);
}

cplx l_coefficient_factored(cplx e1, cplx e2, cplx e3, const LiouvilleParams& p) {
  const double g = p.gamma, x = 4.0 / (g * g);
  return l_num(2.0 * e1 / g - x) * l_num(1.0 + x - 2.0 * e2 / g) * l_inv(1.0 + (e1 - e2 - e3) / g) *
         l_inv((e3 - e2 + e1) / g);
}

cplx t_bar_residue(cplx alpha, const LiouvilleParams& p) {
  const double g = p.gamma, g2 = g * g / 4.0, q = p.Q();
  cplx lr = l_num(g / 2.0 * alpha - g2 - 1.0) * l_inv(1.0 + g / 2.0 * (alpha - q)) * l_inv(-g2) * l_inv(g2);
  return 8.0 * kPi * (q - alpha) / (g * g) * lr;
}

cplx r_bar_from_structure_constant(cplx alpha, const LiouvilleParams& p, const UpsilonConfig& cfg) {
  QuadResult cb = c_dozz_unit_volume({alpha, p.gamma, alpha}, p, cfg);
  return t_bar_residue(alpha, p) * cb.value * p.gamma / (4.0 * (p.Q() - alpha));
}

CGammaSides c_gamma_relation(const LiouvilleParams& p) {
  const double g = p.gamma, g2 = g * g / 4.0, x = 4.0 / (g * g);
  const double sc = p.scale();
  const double mupi = sc / l_func(g2).real();
  CGammaSides out;
  out.cleared = near_int(x);
  if (!out.cleared) {
    out.lhs = g2 * mupi * r_dozz(g, p);
    out.rhs = std::pow(sc, x) / l_func(x);
    return out;
  }
  // R(gamma) l(x) = -scale^{x-1} Gamma(g^2/4 - 1)/Gamma(1 - g^2/4) (x - 1), and rhs l(x) = scale^x.
  out.lhs = g2 * mupi * (-std::pow(sc, x - 1.0)) * gamma_fn(g2 - 1.0) * rgamma_fn(1.0 - g2) * (x - 1.0);
  out.rhs = std::pow(sc, x);
  return out;
}

HypParams bpz_params(double a0, const WeightTriple& w, const LiouvilleParams& p) {
  const double q = p.Q();
  return {a0 / 2.0 * (q - 2.0 * a0 - w.a1 - w.a2 - w.a3) - 0.5, a0 / 2.0 * (q - w.a1 - w.a2 + w.a3) + 0.5,
          1.0 + a0 * (q - w.a1)};
}

cplx a_gamma_coefficient(const HypParams& h) {
  const cplx a = h.a, b = h.b, c = h.c;
  cplx num = gamma_fn(c) * gamma_fn(c) * gamma_fn(1.0 - a) * gamma_fn(1.0 - b) * gamma_fn(a - c + 1.0) *
             gamma_fn(b - c + 1.0);
  cplx den_inv = rgamma_fn(2.0 - c) * rgamma_fn(2.0 - c) * rgamma_fn(c - a) * rgamma_fn(c - b) * rgamma_fn(a) *
                 rgamma_fn(b);
  return -num * den_inv;
}

FourPointRhs four_point_rhs(cplx z, const WeightTriple& w, double a0, const LiouvilleParams& p,
                            const UpsilonConfig& cfg) {
  const double g = p.gamma, q = p.Q();
  const bool half = std::abs(a0 + g / 2.0) < 1e-14;
  const bool dual = std::abs(a0 + 2.0 / g) < 1e-14;
  if (!half && !dual) throw DomainError("alpha0 must be -gamma/2 or -2/gamma");
  if (!w.is_real()) throw RegimeError("four-point theorems need real weights");
  const double a1 = w.a1.real(), a2 = w.a2.real(), a3 = w.a3.real();
  const double chi = -a0;
  if (!(a1 < q && a2 < q && a3 < q && a1 + a2 + a3 > 2.0 * q + chi))
    throw RegimeError("weights violate the Seiberg bounds with the degenerate insertion");
  FourPointRhs out;
  if (half) {
    if (a1 <= g / 2.0) throw RegimeError("alpha1 must exceed gamma/2");
    out.reflection = a1 >= 2.0 / g;
  } else {
    out.reflection = true;
  }
  QuadResult cm = c_dozz({w.a1 - chi, w.a2, w.a3}, p, cfg);
  QuadResult cp;
  cplx f;
  if (out.reflection) {
    cp = c_dozz({2.0 * q - w.a1 - chi, w.a2, w.a3}, p, cfg);
    f = r_dozz(w.a1, p);
  } else {
    cp = c_dozz({w.a1 + chi, w.a2, w.a3}, p, cfg);
    f = b_coefficient(w.a1, p);
  }
  out.coef_minus = cm.value;
  out.coef_plus = f * cp.value;
  out.basis = bpz_basis(bpz_params(a0, w, p), z);
  const QuadResult& fm = out.basis.f_minus;
  const QuadResult& fp = out.basis.f_plus;
  out.value.value = out.coef_minus * std::norm(fm.value) + out.coef_plus * std::norm(fp.value);
  out.value.err_bound = cm.err_bound * std::norm(fm.value) + std::abs(f) * cp.err_bound * std::norm(fp.value) +
                        std::abs(out.coef_minus) * 2.0 * std::abs(fm.value) * fm.err_bound +
                        std::abs(out.coef_plus) * 2.0 * std::abs(fp.value) * fp.err_bound;
  return out;
}

}  // namespace liouville
