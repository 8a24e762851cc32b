#include "liouville/special_functions.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_gamma.h>

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

namespace liouville {

namespace {

constexpr double kPi = std::numbers::pi;

struct GslQuiet {
  GslQuiet() { gsl_set_error_handler_off(); }
};
const GslQuiet gsl_quiet;

std::string fmt_c(cplx z) {
  std::ostringstream os;
  os.precision(17);
  os << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i";
  return os.str();
}

enum class LKind { kRegular, kPole, kZero };

struct LValue {
  cplx value;
  LKind kind;
};

// l(x) without throwing, for the continuation loop.
LValue l_classified(cplx x) {
  if (gamma_pole_index(x) >= 0) return {cplx(0.0), LKind::kPole};
  if (gamma_pole_index(1.0 - x) >= 0) return {cplx(0.0), LKind::kZero};
  return {std::exp(log_gamma(x) - log_gamma(1.0 - x)), LKind::kRegular};
}

// Upsilon(z + g/2) = factor(z) Upsilon(z), g = gamma_hat.
LValue shift_factor(cplx z, double g) {
  LValue v = l_classified(g * z / 2.0);
  if (v.kind == LKind::kRegular) v.value *= std::exp((1.0 - g * z) * std::log(g / 2.0));
  return v;
}

template <int N>
cplx gauss_panel(const auto& f, double lo, double hi) {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  const double c = 0.5 * (lo + hi);
  const double r = 0.5 * (hi - lo);
  cplx sum(0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      sum += w[i] * f(c);
    } else {
      sum += w[i] * (f(c - r * x[i]) + f(c + r * x[i]));
    }
  }
  return sum * r;
}

}  // namespace

int gamma_pole_index(cplx z) {
  if (std::abs(z.imag()) > kPoleTol) return -1;
  const double re = z.real();
  if (re > kPoleTol) return -1;
  const double n = std::round(re);
  if (std::abs(re - n) <= kPoleTol && n <= 0.0) return static_cast<int>(-n);
  return -1;
}

cplx log_gamma(cplx z) {
  if (gamma_pole_index(z) >= 0) throw PoleError("log_gamma: pole of Gamma at " + fmt_c(z));
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw DomainError("log_gamma: non-finite argument");
  }
  if (z.imag() == 0.0) {
    gsl_sf_result r;
    double sgn = 1.0;
    if (gsl_sf_lngamma_sgn_e(z.real(), &r, &sgn) != GSL_SUCCESS) {
      throw PrecisionError("log_gamma: GSL failure at " + fmt_c(z));
    }
    return {r.val, sgn < 0 ? kPi : 0.0};
  }
  gsl_sf_result lnr, arg;
  if (gsl_sf_lngamma_complex_e(z.real(), z.imag(), &lnr, &arg) != GSL_SUCCESS) {
    throw PrecisionError("log_gamma: GSL failure at " + fmt_c(z));
  }
  return {lnr.val, arg.val};
}

cplx gamma_fn(cplx z) { return std::exp(log_gamma(z)); }

cplx rgamma_fn(cplx z) {
  if (gamma_pole_index(z) >= 0) return cplx(0.0);
  return std::exp(-log_gamma(z));
}

cplx l_func(cplx x) {
  const LValue v = l_classified(x);
  if (v.kind == LKind::kPole) throw PoleError("l: pole at x = " + fmt_c(x), 1);
  if (v.kind == LKind::kZero) throw ZeroError("l: zero at x = " + fmt_c(x), 1);
  return v.value;
}

double relative_residual(cplx lhs, cplx rhs) {
  const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  return std::abs(lhs - rhs) / scale;
}

// ---------------------------------------------------------------- Upsilon

double UpsilonConfig::gamma_hat() const { return std::min(gamma, 4.0 / gamma); }

double UpsilonConfig::kappa_min() const { return std::min(1.0, 0.5 / gamma_hat()); }

void UpsilonConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("UpsilonConfig: gamma must be > 0");
  if (!(t_cut > 0.0)) throw DomainError("UpsilonConfig: t_cut must be > 0");
  if (n_nodes < 16) throw DomainError("UpsilonConfig: n_nodes must be >= 16");
  if (!(series_eps > 0.0 && series_eps < 0.05)) {
    throw DomainError("UpsilonConfig: series_eps must lie in (0, 0.05)");
  }
  if (!(tol > 0.0)) throw DomainError("UpsilonConfig: tol must be > 0");
  const double worst = tail_bound(cplx(Q() / 2.0 - kappa_min(), 0.0));
  if (!(worst < tol)) {
    std::ostringstream os;
    os << "UpsilonConfig: t_cut = " << t_cut << " leaves tail bound " << worst << " >= tol " << tol;
    throw DomainError(os.str());
  }
}

UpsilonConfig UpsilonConfig::for_gamma(double gamma, double tol) {
  UpsilonConfig c;
  c.gamma = gamma;
  c.tol = tol;
  const double k = c.kappa_min();
  c.t_cut = std::max(40.0, std::ceil((std::log(1.0 / tol) + 6.0) / k));
  c.n_nodes = 20 * static_cast<int>(std::ceil(c.t_cut));
  return c;
}

double UpsilonConfig::tail_bound(cplx w) const {
  const double a = gamma / 4.0;
  const double b = 1.0 / gamma;
  const double kappa = a + b - std::abs(w.real());
  if (kappa <= 0.0) return std::numeric_limits<double>::infinity();
  const double T = t_cut;
  const double den = (1.0 - std::exp(-2.0 * a * T)) * (1.0 - std::exp(-2.0 * b * T));
  const double first = std::norm(w) * std::exp(-T) / T;
  const double second = 4.0 * std::exp(-kappa * T) / (kappa * T * den);
  return first + second;
}

QuadResult log_upsilon_strip(cplx z, const UpsilonConfig& cfg) {
  const double g = cfg.gamma;
  const double a = g / 4.0;
  const double b = 1.0 / g;
  const cplx w = cfg.Q() / 2.0 - z;
  const cplx w2 = w * w;

  auto integrand = [&](double t) -> cplx {
    const cplx sh = std::sinh(w * (t / 2.0));
    return (w2 * std::exp(-t) - sh * sh / (std::sinh(a * t) * std::sinh(b * t))) / t;
  };

  // Small-t expansion of the integrand: g0 + g1 t + g2 t^2 + g3 t^3.
  const double a2 = a * a, a4 = a2 * a2, a6 = a4 * a2, a8 = a4 * a4;
  const cplx g0 = -w2;
  const cplx g1 = -w2 * (-16.0 * a4 + 8.0 * a2 * w2 - 48.0 * a2 - 1.0) / (96.0 * a2);
  const cplx g2 = -w2 / 6.0;
  const cplx g3 = -w2 *
                  (1792.0 * a8 - 1280.0 * a6 * w2 + 256.0 * a4 * w2 * w2 - 3680.0 * a4 -
                   80.0 * a2 * w2 + 7.0) /
                  (92160.0 * a4);
  const double e = cfg.series_eps;
  const cplx series = e * (g0 + e * (g1 / 2.0 + e * (g2 / 3.0 + e * g3 / 4.0)));
  const double series_err = std::abs(g3) * e * e * e * e / 4.0;

  const int panels = std::max(1, cfg.n_nodes / 20);
  const double width = (cfg.t_cut - e) / panels;
  cplx fine(0.0), coarse(0.0);
  for (int k = 0; k < panels; ++k) {
    const double lo = e + k * width;
    const double hi = (k + 1 == panels) ? cfg.t_cut : lo + width;
    fine += gauss_panel<20>(integrand, lo, hi);
    coarse += gauss_panel<10>(integrand, lo, hi);
  }
  QuadResult r;
  r.value = series + fine;
  r.err_bound = std::abs(fine - coarse) + series_err + cfg.tail_bound(w) +
                64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(r.value));
  return r;
}

QuadResult upsilon(cplx z, const UpsilonConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw DomainError("upsilon: non-finite argument");
  }
  const double g = cfg.gamma_hat();
  const double h = g / 2.0;
  const double lo = cfg.kappa_min();
  const double hi = cfg.Q() - cfg.kappa_min();

  QuadResult out;
  cplx y = z;
  cplx pref(1.0);

  auto zero = [&]() {
    out.value = 0.0;
    out.err_bound = 0.0;
    out.zero_order = 1;
    return out;
  };

  while (y.real() < lo) {
    const LValue f = shift_factor(y, g);
    if (f.kind == LKind::kPole) return zero();
    if (f.kind == LKind::kZero) throw ContinuationError("upsilon: 0/0 in shift at " + fmt_c(y));
    pref /= f.value;
    y += h;
    ++out.shifts;
  }
  while (y.real() > hi) {
    const LValue f = shift_factor(y - h, g);
    if (f.kind == LKind::kZero) return zero();
    if (f.kind == LKind::kPole) throw ContinuationError("upsilon: pole in shift at " + fmt_c(y));
    pref *= f.value;
    y -= h;
    ++out.shifts;
  }

  const QuadResult ln = log_upsilon_strip(y, cfg);
  const cplx inner = std::exp(ln.value);
  out.value = pref * inner;
  const double prefactor_rel = 8.0 * std::numeric_limits<double>::epsilon() * out.shifts;
  out.err_bound = std::abs(out.value) * (std::expm1(ln.err_bound) + prefactor_rel);
  if (!std::isfinite(out.value.real()) || !std::isfinite(out.value.imag())) {
    throw PrecisionError("upsilon: overflow at " + fmt_c(z));
  }
  return out;
}

QuadResult upsilon_prime_zero_fd(const UpsilonConfig& cfg, double h) {
  const QuadResult p1 = upsilon(h, cfg);
  const QuadResult m1 = upsilon(-h, cfg);
  const QuadResult p2 = upsilon(2.0 * h, cfg);
  const QuadResult m2 = upsilon(-2.0 * h, cfg);
  const cplx d1 = (p1.value - m1.value) / (2.0 * h);
  const cplx d2 = (p2.value - m2.value) / (4.0 * h);
  QuadResult r;
  r.value = d1;
  r.err_bound = std::abs(d2 - d1) / 3.0 + (p1.err_bound + m1.err_bound) / (2.0 * h);
  return r;
}

QuadResult upsilon_prime_zero(const UpsilonConfig& cfg) {
  QuadResult primary = upsilon(cfg.gamma / 2.0, cfg);
  const QuadResult fd = upsilon_prime_zero_fd(cfg);
  const double combined = 10.0 * (primary.err_bound + fd.err_bound) + 1e-12;
  if (std::abs(primary.value - fd.value) > combined) {
    std::ostringstream os;
    os.precision(17);
    os << "upsilon_prime_zero: shift value " << primary.value.real() << " vs difference quotient "
       << fd.value.real() << " (allowed " << combined << ")";
    throw ConsistencyError(os.str());
  }
  return primary;
}

// ---------------------------------------------------------------- 2F1

QuadResult hyp2f1(const HypParams& p, cplx z, double tol, int max_terms) {
  if (gamma_pole_index(p.c) >= 0) throw DivergenceError("hyp2f1: c is a non-positive integer: " + fmt_c(p.c));
  const double az = std::abs(z);
  if (!(az < 1.0)) throw DomainError("hyp2f1: series needs |z| < 1, got |z| = " + std::to_string(az));
  const double A = std::abs(p.a), B = std::abs(p.b), C = std::abs(p.c);
  const double kmin = 2.0 * (A + B + C) + 2.0;
  cplx term(1.0), sum(1.0);
  for (int k = 0; k < max_terms; ++k) {
    const double kk = static_cast<double>(k);
    term *= (p.a + kk) * (p.b + kk) / ((p.c + kk) * (kk + 1.0)) * z;
    sum += term;
    if (term == 0.0) return {sum, 0.0};
    const double next = kk + 1.0;
    if (next > kmin) {
      const double f = (next + A) * (next + B) / ((next - C) * (next + 1.0));
      const double rho = az * std::max(f, 1.0);
      if (rho < 1.0) {
        const double tail = std::abs(term) * rho / (1.0 - rho);
        if (tail <= tol * std::max(1.0, std::abs(sum))) {
          QuadResult r;
          r.value = sum;
          r.err_bound = tail + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(sum);
          return r;
        }
      }
    }
  }
  throw PrecisionError("hyp2f1: tail bound not met after " + std::to_string(max_terms) + " terms");
}

BpzBasis bpz_basis(const HypParams& p, cplx z) {
  if (std::abs(z.imag()) == 0.0 && (z.real() <= 0.0 || z.real() >= 1.0)) {
    throw BranchError("bpz_basis: z on a branch cut: " + fmt_c(z));
  }
  const cplx a = p.a, b = p.b, c = p.c;
  const cplx cp = 1.0 + a + b - c;
  const cplx w = 1.0 - z;
  // Series beyond this radius converge too slowly; the pair is then taken from the other side.
  constexpr double kNear = 0.9;
  const bool at_zero = std::abs(z) <= kNear, at_one = std::abs(w) <= kNear;
  if (!at_zero && !at_one) throw DomainError("bpz_basis: z too far from 0 and 1: " + fmt_c(z));
  BpzBasis out;
  if (at_zero) {
    out.f_minus = hyp2f1({a, b, c}, z);
    QuadResult fp = hyp2f1({1.0 + a - c, 1.0 + b - c, 2.0 - c}, z);
    const cplx zf = std::exp((1.0 - c) * std::log(z));
    out.f_plus = {fp.value * zf, fp.err_bound * std::abs(zf)};
  }
  if (at_one) {
    out.g_minus = hyp2f1({a, b, cp}, w);
    QuadResult gp = hyp2f1({1.0 + a - cp, 1.0 + b - cp, 2.0 - cp}, w);
    const cplx wf = std::exp((1.0 - cp) * std::log(w));
    out.g_plus = {gp.value * wf, gp.err_bound * std::abs(wf)};
  }
  if (at_zero && at_one) return out;
  const ConnectionCoefficients k = connection_coefficients(p);
  if (!at_zero) {
    out.f_minus = {k.mm * out.g_minus.value + k.mp * out.g_plus.value,
                   std::abs(k.mm) * out.g_minus.err_bound + std::abs(k.mp) * out.g_plus.err_bound};
    out.f_plus = {k.pm * out.g_minus.value + k.pp * out.g_plus.value,
                  std::abs(k.pm) * out.g_minus.err_bound + std::abs(k.pp) * out.g_plus.err_bound};
  } else {
    const cplx det = k.mm * k.pp - k.mp * k.pm;
    if (!(std::abs(det) > 0.0) || !std::isfinite(std::abs(det)))
      throw DivergenceError("bpz_basis: singular connection matrix");
    const double scale = (std::abs(k.pp) + std::abs(k.mp) + std::abs(k.pm) + std::abs(k.mm)) / std::abs(det);
    const double e = out.f_minus.err_bound + out.f_plus.err_bound;
    out.g_minus = {(k.pp * out.f_minus.value - k.mp * out.f_plus.value) / det, scale * e};
    out.g_plus = {(k.mm * out.f_plus.value - k.pm * out.f_minus.value) / det, scale * e};
  }
  return out;
}

ConnectionCoefficients connection_coefficients(const HypParams& p) {
  const cplx a = p.a, b = p.b, c = p.c;
  auto ratio = [](cplx n1, cplx n2, cplx d1, cplx d2) {
    return gamma_fn(n1) * gamma_fn(n2) * rgamma_fn(d1) * rgamma_fn(d2);
  };
  ConnectionCoefficients k;
  k.mm = ratio(c, c - a - b, c - a, c - b);
  k.mp = ratio(c, a + b - c, a, b);
  k.pm = ratio(2.0 - c, c - a - b, 1.0 - a, 1.0 - b);
  k.pp = ratio(2.0 - c, a + b - c, a - c + 1.0, b - c + 1.0);
  return k;
}

// ---------------------------------------------------------------- quadrature self-tests

double lemma_integral_rhs(double p, double a) {
  const cplx v = log_gamma(1.0 - a) + log_gamma(p + a - 1.0) - log_gamma(p);
  return std::exp(v).real();
}

CheckResult lemma_integral_check(double p, double a) {
  if (!(p > 0.0)) throw DomainError("lemma_integral_check: p must be > 0");
  if (!(a > 1.0 && a < 2.0)) throw DomainError("lemma_integral_check: a must lie in (1,2)");
  auto f = [p, a](double v) {
    if (v <= 0.0) return 0.0;
    return (std::expm1(-p * std::log1p(v)) / v) * std::pow(v, 1.0 - a);
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  double e1 = 0.0, e2 = 0.0, l1 = 0.0, l2 = 0.0;
  const double head = ts.integrate(f, 0.0, 1.0, 1e-13, &e1, &l1);
  const double tail = es.integrate(f, 1.0, std::numeric_limits<double>::infinity(), 1e-13, &e2, &l2);
  CheckResult r;
  r.numeric.value = head + tail;
  r.numeric.err_bound = (e1 * l1 + e2 * l2) + 1e-15 * (std::abs(head) + std::abs(tail));
  r.closed_form = lemma_integral_rhs(p, a);
  r.residual = relative_residual(r.numeric.value, r.closed_form);
  if (!(r.numeric.err_bound < 1e-8 * std::max(1.0, std::abs(r.closed_form.real())))) {
    throw PrecisionError("lemma_integral_check: quadrature error estimate too large");
  }
  return r;
}

cplx planar_identity_rhs(double gamma, double alpha1, PlanarIdentity which) {
  const double g2 = gamma * gamma / 4.0;
  const double u = g2 + 1.0 - gamma * alpha1 / 2.0;
  const double coef = which == PlanarIdentity::kMixed ? u * u : u * (g2 - gamma * alpha1 / 2.0);
  if (coef == 0.0) return 0.0;
  const cplx den = l_func(gamma * alpha1 / 2.0) * l_func(-g2) * l_func(2.0 - gamma * alpha1 / 2.0 + g2);
  return coef * kPi / den;
}

namespace {

// Integral over the plane of |u-1|^{g^2/2-2} k(arg) |u|^{-g a1}, in polar coordinates about u=1.
// k = cos(2 phi) (holomorphic case, real part) or 1 (mixed case).
double planar_integral(double gamma, double alpha1, PlanarIdentity which, double tol) {
  const double beta = gamma * alpha1;
  const double rexp = gamma * gamma / 2.0 - 1.0;  // r^{g^2/2 - 2} * r
  boost::math::quadrature::tanh_sinh<double> ts(15);
  boost::math::quadrature::exp_sinh<double> es(12);

  // Angular average in psi = pi - phi; |1 + r e^{i phi}|^2 = (1-r)^2 + 4 r sin^2(psi/2),
  // singular only at (r, psi) = (1, 0), an endpoint.
  auto angular = [&](double r) {
    auto f = [&](double psi) {
      const double sh = std::sin(psi / 2.0);
      const double m2 = (1.0 - r) * (1.0 - r) + 4.0 * r * sh * sh;
      if (m2 <= 0.0) return 0.0;
      const double k = which == PlanarIdentity::kMixed ? 1.0 : std::cos(2.0 * psi);
      return k * std::pow(m2, -beta / 2.0);
    };
    return 2.0 * ts.integrate(f, 0.0, kPi, tol);
  };
  auto radial = [&](double r) {
    if (r <= 0.0) return 0.0;
    return std::pow(r, rexp) * angular(r);
  };
  const double inner = ts.integrate(radial, 0.0, 1.0, tol);
  const double mid = ts.integrate(radial, 1.0, 2.0, tol);
  const double outer = es.integrate(radial, 2.0, std::numeric_limits<double>::infinity(), tol);
  return inner + mid + outer;
}

}  // namespace

CheckResult planar_identity_check(double gamma, double alpha1, PlanarIdentity which) {
  if (!(gamma > 0.0 && gamma < 2.0)) throw DomainError("planar_identity_check: gamma in (0,2)");
  if (!(alpha1 > gamma / 2.0 && alpha1 < 2.0 / gamma)) {
    throw DomainError("planar_identity_check: need gamma/2 < alpha1 < 2/gamma");
  }
  const double g2 = gamma * gamma / 4.0;
  const double pre = which == PlanarIdentity::kMixed ? g2 * g2 : g2 * (g2 - 1.0);
  // Two accuracy levels: the difference is the Richardson-style check.
  const double coarse = pre * planar_integral(gamma, alpha1, which, 1e-5);
  const double fine = pre * planar_integral(gamma, alpha1, which, 1e-7);
  CheckResult r;
  r.numeric.value = fine;
  r.numeric.err_bound = std::abs(fine - coarse);
  r.closed_form = planar_identity_rhs(gamma, alpha1, which);
  r.residual = relative_residual(r.numeric.value, r.closed_form);
  if (r.numeric.err_bound > 1e-4 * std::max(1.0, std::abs(fine))) {
    throw PrecisionError("planar_identity_check: refinement levels disagree");
  }
  return r;
}

}  // namespace liouville
