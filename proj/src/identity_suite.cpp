#include <cmath>
#include <functional>
#include <random>

#include <json.hpp>

#include "liouville/dozz.hpp"

namespace liouville {

namespace {

constexpr double kPi = 3.14159265358979323846;

nlohmann::json cjson(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

class PointGen {
 public:
  PointGen(std::uint64_t seed, const std::string& name) : eng_(seed ^ std::hash<std::string>{}(name)) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(eng_() >> 11) * 0x1.0p-53); }
  // Real on even draws, small imaginary part on odd ones.
  cplx weight(double lo, double hi) {
    double re = uniform(lo, hi);
    double im = (count_++ % 2 == 1) ? uniform(-0.4, 0.4) : 0.0;
    return {re, im};
  }
  void reset_parity() { count_ = 0; }

 private:
  std::mt19937_64 eng_;
  unsigned count_ = 0;
};

struct Sides {
  cplx lhs, rhs;
  std::string point;
  std::string note;
};

bool usable(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()) && std::abs(z) > 1e-250 && std::abs(z) < 1e250; }

// Draws admissible points until n reports are collected; points that land on a pole or zero are redrawn.
void collect(std::vector<IdentityReport>& out, const std::string& name, int n, double tol,
             const std::function<Sides(PointGen&)>& draw, std::uint64_t seed) {
  PointGen gen(seed, name);
  int got = 0;
  for (int attempt = 0; got < n && attempt < 50 * n + 50; ++attempt) {
    Sides s;
    try {
      s = draw(gen);
    } catch (const PreconditionError&) {
      continue;
    }
    if (!usable(s.lhs) || !usable(s.rhs)) continue;
    out.push_back(make_report(name, s.point, s.lhs, s.rhs, tol, s.note));
    ++got;
  }
  if (got < n) {
    IdentityReport r;
    r.name = name;
    r.point = "{}";
    r.tol = tol;
    r.residual = std::numeric_limits<double>::infinity();
    r.note = "could not draw enough admissible points";
    out.push_back(r);
  }
}

std::string pt(std::initializer_list<std::pair<const char*, cplx>> kv, const LiouvilleParams& p) {
  nlohmann::json j;
  j["gamma"] = p.gamma;
  j["mu"] = p.mu;
  for (auto& [k, v] : kv) j[k] = v.imag() == 0.0 ? nlohmann::json(v.real()) : cjson(v);
  return j.dump();
}

// f(h) = f0 + c1 h + O(h^2) evaluated at h and h/2, extrapolated.
cplx richardson(const std::function<cplx(double)>& f, double h) { return 2.0 * f(h / 2.0) - f(h); }

// Two Richardson levels, error O(h^3).
cplx richardson2(const std::function<cplx(double)>& f, double h) {
  return (8.0 * f(h / 4.0) - 6.0 * f(h / 2.0) + f(h)) / 3.0;
}

// Distance from alpha to the poles and zeros of R and to Q.
double r_singular_distance(double a, double g) {
  const double q = 2.0 / g + g / 2.0;
  double d = std::abs(a - q);
  for (int k = 0; k < 40; ++k)
    for (double pole : {2.0 / g - k * g / 2.0, g / 2.0 - k * 2.0 / g}) {
      d = std::min(d, std::abs(a - pole));
      d = std::min(d, std::abs(a - (2.0 * q - pole)));
    }
  return d;
}

}  // namespace

std::string IdentityReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["inputs"] = nlohmann::json::parse(point.empty() ? "{}" : point);
  j["lhs"] = cjson(lhs);
  j["rhs"] = cjson(rhs);
  j["residual"] = std::isfinite(residual) ? nlohmann::json(residual) : nlohmann::json(nullptr);
  j["tol"] = tol;
  j["pass"] = pass;
  if (!note.empty()) j["note"] = note;
  return j.dump();
}

IdentityReport make_report(const std::string& name, const std::string& point, cplx lhs, cplx rhs, double tol,
                           const std::string& note) {
  IdentityReport r;
  r.name = name;
  r.point = point;
  r.lhs = lhs;
  r.rhs = rhs;
  r.residual = relative_residual(lhs, rhs);
  r.tol = tol;
  r.pass = r.residual <= tol;
  r.note = note;
  return r;
}

std::vector<IdentityReport> identity_suite(const LiouvilleParams& p, int n, std::uint64_t seed, double tol) {
  p.validate();
  std::vector<IdentityReport> out;
  const double g = p.gamma, q = p.Q(), g2 = g * g / 4.0, x = 4.0 / (g * g);
  const UpsilonConfig cfg = p.upsilon_config();
  const bool degenerate = std::abs(x - std::round(x)) < kPoleTol;
  auto C = [&](cplx a1, cplx a2, cplx a3) { return c_dozz({a1, a2, a3}, p, cfg).value; };
  auto Cbar = [&](cplx a1, cplx a2, cplx a3) { return c_dozz_unit_volume({a1, a2, a3}, p, cfg).value; };
  auto R = [&](cplx a) { return r_dozz(a, p); };

  collect(out, "dozz_shift_gamma_half", n, tol, [&](PointGen& r) {
    WeightTriple w{r.weight(-0.5, q + 1.0), r.weight(-0.5, q + 1.0), r.weight(-0.5, q + 1.0)};
    cplx lhs = C(w.a1 + g / 2.0, w.a2, w.a3);
    cplx rhs = -1.0 / (kPi * p.mu) * shift_coefficient_A(g / 2.0, w, p) * C(w.a1 - g / 2.0, w.a2, w.a3);
    return Sides{lhs, rhs, pt({{"alpha1", w.a1}, {"alpha2", w.a2}, {"alpha3", w.a3}}, p), ""};
  }, seed);

  collect(out, "dozz_shift_dual", n, tol, [&](PointGen& r) {
    WeightTriple w{r.weight(-0.5, q + 1.0), r.weight(-0.5, q + 1.0), r.weight(-0.5, q + 1.0)};
    cplx lhs = C(w.a1 + 2.0 / g, w.a2, w.a3);
    cplx f;
    std::string note;
    if (degenerate) {
      f = shift_factor_C(true, w, p);
      note = "4/gamma^2 integer: mu_dual infinite, l(-chi^2)/mu_dual cleared";
    } else {
      f = -1.0 / (kPi * p.mu_dual()) * shift_coefficient_A(2.0 / g, w, p);
    }
    cplx rhs = f * C(w.a1 - 2.0 / g, w.a2, w.a3);
    return Sides{lhs, rhs, pt({{"alpha1", w.a1}, {"alpha2", w.a2}, {"alpha3", w.a3}}, p), note};
  }, seed);

  collect(out, "reflection", n, tol, [&](PointGen& r) {
    WeightTriple w{r.weight(0.2, q + 1.0), r.weight(0.2, q), r.weight(0.2, q)};
    cplx lhs = C(w.a1, w.a2, w.a3);
    cplx rhs = R(w.a1) * C(2.0 * q - w.a1, w.a2, w.a3);
    return Sides{lhs, rhs, pt({{"alpha1", w.a1}, {"alpha2", w.a2}, {"alpha3", w.a3}}, p), ""};
  }, seed);

  collect(out, "b_vs_r", n, tol, [&](PointGen& r) {
    cplx a = r.weight(-1.0, q + 1.0);
    return Sides{b_coefficient(a, p), R(a) / R(a + g / 2.0), pt({{"alpha", a}}, p), ""};
  }, seed);

  collect(out, "r_shift_gamma_half", n, tol, [&](PointGen& r) {
    cplx a = r.weight(-1.0, q + 1.0);
    cplx rhs = -p.mu * kPi * R(a) /
               (l_func(-g2) * l_func(g * a / 2.0 - g2) * l_func(2.0 + 2.0 * g2 - g * a / 2.0));
    return Sides{R(a - g / 2.0), rhs, pt({{"alpha", a}}, p), ""};
  }, seed);

  collect(out, "r_shift_dual", n, tol, [&](PointGen& r) {
    cplx a = r.weight(-1.0, q + 1.0);
    const double sx = std::pow(p.scale(), x);
    cplx inner = R(a + 2.0 / g) / (l_func(2.0 * a / g) * l_func(2.0 + x - 2.0 * a / g));
    if (degenerate)
      return Sides{R(a), x * x * sx * inner, pt({{"alpha", a}}, p), "cleared with l(x)l(-x) = -1/x^2"};
    return Sides{R(a), -sx / l_func(x) / l_func(-x) * inner, pt({{"alpha", a}}, p), ""};
  }, seed);

  collect(out, "r_inversion", n, tol, [&](PointGen& r) {
    cplx a = r.weight(-1.0, q + 1.5);
    return Sides{R(a) * R(2.0 * q - a), 1.0, pt({{"alpha", a}}, p), ""};
  }, seed);

  collect(out, "crossing_T", n, tol, [&](PointGen& r) {
    cplx ap = r.weight(0.5, q), e = r.weight(0.1, 2.0 / g), a = r.weight(0.5, q);
    cplx lhs = C(ap - g / 2.0, e, a);
    cplx rhs = crossing_T(ap, e, a, p).T * C(ap, e + g / 2.0, a);
    return Sides{lhs, rhs, pt({{"alpha_p", ap}, {"eps", e}, {"alpha", a}}, p), ""};
  }, seed);

  collect(out, "crossing_T_bar", n, tol, [&](PointGen& r) {
    cplx ap = r.weight(0.5, q), e = r.weight(0.1, 2.0 / g), a = r.weight(0.5, q);
    cplx lhs = Cbar(ap - g / 2.0, e, a);
    cplx rhs = crossing_T(ap, e, a, p).T_bar * Cbar(ap, e + g / 2.0, a);
    return Sides{lhs, rhs, pt({{"alpha_p", ap}, {"eps", e}, {"alpha", a}}, p), ""};
  }, seed);

  collect(out, "crossing_T_tilde", n, tol, [&](PointGen& r) {
    cplx a = r.weight(q - 0.6, q), e = r.weight(q - 0.6, q), ap = r.weight(q - 0.6, q);
    cplx lhs = C(a - 2.0 / g, e, ap);
    cplx rhs = crossing_T_tilde(a, e, ap, p) * R(e) * C(a, 2.0 * q - e - 2.0 / g, ap);
    return Sides{lhs, rhs, pt({{"alpha", a}, {"eps", e}, {"alpha_p", ap}}, p), ""};
  }, seed);

  collect(out, "key_equation_L", n, tol, [&](PointGen& r) {
    cplx e = r.weight(q - 0.6, q), a = r.weight(q - 0.6, q), ap = r.weight(q - 0.6, q);
    cplx lhs = R(e) * C(2.0 * q - e - 2.0 / g, a, ap);
    cplx rhs = l_coefficient(e, a, ap, p) * R(a) * C(e, 2.0 * q - a - 2.0 / g, ap);
    return Sides{lhs, rhs, pt({{"eps", e}, {"alpha", a}, {"alpha_p", ap}}, p), ""};
  }, seed);

  collect(out, "l_coefficient_factored", n, 1e-10, [&](PointGen& r) {
    cplx e1 = r.weight(-0.3, 0.3), e2 = r.weight(-0.3, 0.3), e3 = r.weight(-0.3, 0.3);
    cplx lhs = l_coefficient(g / 2.0 + e1, g / 2.0 + e2, 2.0 / g + e3, p);
    return Sides{lhs, l_coefficient_factored(e1, e2, e3, p), pt({{"eta_eps", e1}, {"eta_alpha", e2}, {"eta_alpha_p", e3}}, p), ""};
  }, seed);

  collect(out, "duality", n, tol, [&](PointGen& r) {
    WeightTriple w{r.weight(-0.5, q + 1.0), r.weight(-0.5, q + 1.0), r.weight(-0.5, q + 1.0)};
    LiouvilleParams d = p.dual();
    cplx rhs = c_dozz(w, d, d.upsilon_config()).value;
    return Sides{C(w.a1, w.a2, w.a3), rhs, pt({{"alpha1", w.a1}, {"alpha2", w.a2}, {"alpha3", w.a3}}, p),
                 degenerate ? "dual mu infinite, dual scale used" : ""};
  }, seed);

  collect(out, "permutation", n, tol, [&](PointGen& r) {
    WeightTriple w{r.weight(-0.5, q + 1.0), r.weight(-0.5, q + 1.0), r.weight(-0.5, q + 1.0)};
    return Sides{C(w.a1, w.a2, w.a3), C(w.a3, w.a1, w.a2),
                 pt({{"alpha1", w.a1}, {"alpha2", w.a2}, {"alpha3", w.a3}}, p), ""};
  }, seed);

  collect(out, "two_point_limit", n, 1e-3, [&](PointGen& r) {
    cplx a(r.uniform(g / 2.0 + 0.1, q + 0.5), 0.0);
    if (r_singular_distance(a.real(), g) < std::min(0.2, g / 6.0)) throw DomainError("too close to a singular point of R");
    const double e = 1e-5;
    return Sides{e * C(e, a, a), 4.0 * R(a), pt({{"alpha", a}, {"eps", e}}, p), ""};
  }, seed);

  collect(out, "two_point_rate", n, 0.05, [&](PointGen& r) {
    cplx a(r.uniform(g / 2.0 + 0.1, q + 0.5), 0.0);
    if (r_singular_distance(a.real(), g) < std::min(0.2, g / 6.0)) throw DomainError("too close to a singular point of R");
    cplx ref = 4.0 * R(a);
    // Least-squares slope of log residual against log eps; first order means slope 1.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double e : {1e-4, 1e-5, 1e-6}) {
      double lx = std::log(e), ly = std::log(std::abs(e * C(e, a, a) - ref));
      sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    return Sides{slope, 1.0, pt({{"alpha", a}}, p), "log-log slope over eps in {1e-4,1e-5,1e-6}"};
  }, seed);

  collect(out, "t_bar_residue", n, tol, [&](PointGen& r) {
    cplx a(r.uniform(g / 2.0 + 0.05, q - 0.05), r.uniform(-0.2, 0.2));
    auto f = [&](double h) { return h * crossing_T(a, g / 2.0 + h, a, p).T_bar; };
    return Sides{richardson(f, 1e-5), t_bar_residue(a, p), pt({{"alpha", a}}, p), ""};
  }, seed);

  collect(out, "r_bar_from_structure_constant", n, tol, [&](PointGen& r) {
    cplx a(r.uniform(g / 2.0 + 0.05, q - 0.05), 0.0);
    return Sides{r_bar_from_structure_constant(a, p, cfg), r_bar_from_r(a, p), pt({{"alpha", a}}, p), ""};
  }, seed);

  // Limits eps -> 2Q - alpha with alpha' = 2/gamma; delta = 2Q - alpha - eps.
  for (int which = 0; which < 3; ++which) {
    static const char* names[3] = {"inversion_limit_a", "inversion_limit_b", "inversion_limit_c"};
    collect(out, names[which], n, std::max(tol, 1e-6), [&](PointGen& r) {
      double eta = r.uniform(0.05, 0.4);
      cplx a(q - (r.uniform(0.0, 1.0) < 0.5 ? -eta : eta), 0.0);
      auto f = [&](double d) -> cplx {
        CrossingABC h = crossing_T_tilde_abc(a, 2.0 * q - a - d, 2.0 / g, p);
        if (which == 0) return d * l_func(h.a);
        if (which == 1) return l_func(h.b) / d;
        return l_func(h.c) * l_func(h.a + h.b - h.c);
      };
      // Step scaled to the distance of the l arguments from the integers (zeros and poles of l).
      const CrossingABC h0 = crossing_T_tilde_abc(a, 2.0 * q - a, 2.0 / g, p);
      double dist = 1.0;
      for (cplx x : {h0.c, h0.a + h0.b - h0.c}) dist = std::min(dist, std::abs(x - std::round(x.real())));
      if (dist < 1e-3) throw DomainError("too close to a singular point of l");
      const cplx target[3] = {-g, 1.0 / g, 1.0};
      return Sides{richardson2(f, std::min(1e-4, dist / 200.0)), target[which], pt({{"alpha", a}}, p), ""};
    }, seed);
  }

  for (int k = 0; k < 2; ++k) {
    const double a0 = k == 0 ? -g / 2.0 : -2.0 / g;
    collect(out, k == 0 ? "a_gamma_half" : "a_gamma_dual", n, tol, [&](PointGen& r) {
      WeightTriple w;
      if (k == 0) {
        w.a1 = r.uniform(g / 2.0 + 0.05, q - 0.02);
        double lo = std::max(0.0, (2.0 * q + g / 2.0 - w.a1.real()) / 2.0 + 0.01);
        w.a2 = r.uniform(lo, q - 0.005);
        w.a3 = r.uniform(std::max(lo, 2.0 * q + g / 2.0 - w.a1.real() - w.a2.real() + 0.005), q - 0.001);
      } else {
        const double eta = g / 6.0 * 0.95;
        w = {r.uniform(q - eta, q - 1e-3), r.uniform(q - eta, q - 1e-3), r.uniform(q - eta, q - 1e-3)};
      }
      FourPointRhs f = four_point_rhs(0.3, w, a0, p, cfg);
      return Sides{f.coef_plus / f.coef_minus, a_gamma_coefficient(bpz_params(a0, w, p)),
                   pt({{"alpha0", a0}, {"alpha1", w.a1}, {"alpha2", w.a2}, {"alpha3", w.a3}}, p),
                   f.reflection ? "reflection form" : "B form"};
    }, seed);
  }

  CGammaSides cg = c_gamma_relation(p);
  out.push_back(make_report("c_gamma", pt({}, p), cg.lhs, cg.rhs, tol,
                            cg.cleared ? "both sides multiplied by l(4/gamma^2)" : ""));
  return out;
}

std::vector<IdentityReport> specfun_suite(double g, int n, std::uint64_t seed, double tol) {
  std::vector<IdentityReport> out;
  const UpsilonConfig cfg = UpsilonConfig::for_gamma(g);
  const UpsilonConfig dual_cfg = UpsilonConfig::for_gamma(4.0 / g);
  const double q = cfg.Q(), k = cfg.kappa_min();
  LiouvilleParams p;
  p.gamma = g;
  auto U = [&](cplx z) { return upsilon(z, cfg).value; };
  auto strip = [&](PointGen& r, double lo, double hi) { return cplx(r.uniform(lo, hi), r.uniform(-1.0, 1.0)); };

  collect(out, "upsilon_symmetry", n, tol, [&](PointGen& r) {
    cplx z = strip(r, k, q - k);
    return Sides{U(z), U(q - z), pt({{"z", z}}, p), ""};
  }, seed);
  collect(out, "upsilon_shift_gamma_half", n, tol, [&](PointGen& r) {
    cplx z = strip(r, k, q - k - g / 2.0);
    cplx rhs = l_func(g * z / 2.0) * std::exp((1.0 - g * z) * std::log(g / 2.0)) * U(z);
    return Sides{U(z + g / 2.0), rhs, pt({{"z", z}}, p), ""};
  }, seed);
  collect(out, "upsilon_shift_dual", n, tol, [&](PointGen& r) {
    cplx z = strip(r, k, q - k);
    cplx rhs = l_func(2.0 * z / g) * std::exp((4.0 * z / g - 1.0) * std::log(g / 2.0)) * U(z);
    return Sides{U(z + 2.0 / g), rhs, pt({{"z", z}}, p), ""};
  }, seed);
  collect(out, "upsilon_duality", n, tol, [&](PointGen& r) {
    cplx z = strip(r, -1.0, q + 1.0);
    return Sides{U(z), upsilon(z, dual_cfg).value, pt({{"z", z}}, p), ""};
  }, seed);
  collect(out, "l_reflection", n, 1e-11, [&](PointGen& r) {
    cplx x = strip(r, -3.0, 3.0);
    return Sides{l_func(x) * l_func(1.0 - x), 1.0, pt({{"x", x}}, p), ""};
  }, seed);
  collect(out, "l_inverse_pair", n, 1e-11, [&](PointGen& r) {
    cplx x = strip(r, -3.0, 3.0);
    return Sides{l_func(x) * l_func(-x), -1.0 / (x * x), pt({{"x", x}}, p), ""};
  }, seed);
  collect(out, "hyp2f1_bruteforce", n, 1e-11, [&](PointGen& r) {
    HypParams h{strip(r, -2.0, 2.0), strip(r, -2.0, 2.0), strip(r, 0.2, 3.0)};
    double rad = r.uniform(0.0, 0.7), th = r.uniform(-kPi, kPi);
    cplx z = std::polar(rad, th);
    std::complex<long double> term = 1.0L, sum = 1.0L;
    const std::complex<long double> a(h.a), b(h.b), c(h.c), zz(z);
    for (int j = 0; j < 10000; ++j) {
      long double jj = j;
      term *= (a + jj) * (b + jj) / ((c + jj) * (jj + 1.0L)) * zz;
      sum += term;
    }
    nlohmann::json j{{"a", cjson(h.a)}, {"b", cjson(h.b)}, {"c", cjson(h.c)}, {"z", cjson(z)}};
    return Sides{hyp2f1(h, z).value, cplx(sum), j.dump(), ""};
  }, seed);
  collect(out, "connection_formula", n, 1e-10, [&](PointGen& r) {
    HypParams h{r.uniform(-1.5, 1.5), r.uniform(-1.5, 1.5), r.uniform(0.2, 1.8)};
    double z = r.uniform(0.2, 0.8);
    BpzBasis bb = bpz_basis(h, z);
    ConnectionCoefficients cc = connection_coefficients(h);
    bool minus = r.uniform(0.0, 1.0) < 0.5;
    cplx lhs = minus ? bb.f_minus.value : bb.f_plus.value;
    cplx rhs = minus ? cc.mm * bb.g_minus.value + cc.mp * bb.g_plus.value
                     : cc.pm * bb.g_minus.value + cc.pp * bb.g_plus.value;
    nlohmann::json j{{"a", h.a.real()}, {"b", h.b.real()}, {"c", h.c.real()}, {"z", z}, {"basis", minus ? "F-" : "F+"}};
    return Sides{lhs, rhs, j.dump(), ""};
  }, seed);
  return out;
}

}  // namespace liouville
