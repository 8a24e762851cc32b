#include "liouville/estimators.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "liouville/errors.hpp"
#include "liouville/manifest.hpp"
#include "liouville/parallel.hpp"
#include "liouville/special_functions.hpp"

namespace liouville {

using nlohmann::json;

void MCConfig::validate() const {
  if (n_samples < 2) throw BoundsError("mc: need n_samples >= 2");
  if (batch < 1) throw BoundsError("mc: batch must be >= 1");
  if (workers < 1) throw BoundsError("mc: workers must be >= 1");
  engine.validate();
  reflection.validate();
  local.validate();
}

std::string MCConfig::to_json() const {
  json loc = {{"n_modes", local.n_modes},
              {"n_theta", local.n_theta},
              {"du", local.du},
              {"envelope_drop", local.envelope_drop},
              {"u_cap", local.u_cap}};
  json j = {{"n_samples", n_samples},
            {"master_seed", master_seed},
            {"batch", batch},
            {"grid", json::parse(grid.to_json())},
            {"engine", json::parse(engine.to_json())},
            {"reflection", json::parse(reflection.to_json())},
            {"local", loc}};
  return j.dump();
}

std::string MCEstimate::to_json() const {
  return json{{"mean", mean},
              {"stderr", stderr_},
              {"n", n},
              {"seed", seed},
              {"variance_blowup", variance_blowup},
              {"capped", capped},
              {"manifest_hash", manifest_hash},
              {"config", json::parse(config)}}
      .dump();
}

MCEstimate summarize(const std::vector<double>& values, const std::string& quantity, const std::string& inputs_json,
                     const MCConfig& cfg) {
  MCEstimate e;
  for (double v : values)
    if (!std::isfinite(v)) throw PrecisionError(quantity + ": non-finite sample value");
  const MeanSE ms = mean_stderr(values);
  e.mean = ms.mean;
  e.stderr_ = ms.stderr_;
  e.n = long(ms.n);
  e.seed = cfg.master_seed;
  e.config = json{{"quantity", quantity}, {"inputs", json::parse(inputs_json)}, {"mc", json::parse(cfg.to_json())}}.dump();
  e.manifest_hash = sha256_hex(e.config);
  return e;
}

namespace {

double real_gamma(double s) {
  if (gamma_pole_index(s) >= 0) throw PoleError("Gamma(s) pole at s = " + std::to_string(s));
  return gamma_fn(s).real();
}

void check_three_point(const std::vector<double>& a, double s, double gamma) {
  const double q = 2.0 / gamma + gamma / 2.0;
  for (double x : a)
    if (!(x < q)) throw BoundsError("Seiberg: alpha_k >= Q");
  if (gamma_pole_index(s) >= 0) throw PoleError("three-point: s is a pole of Gamma (correlation infinite)");
  if (s < 0.0) {
    double lim = 4.0 / (gamma * gamma);
    for (double x : a) lim = std::min(lim, 2.0 * (q - x) / gamma);
    if (!(-s < lim)) throw BoundsError("Seiberg: -s >= min(4/gamma^2, 2(Q-alpha_k)/gamma)");
  }
}

std::string weights_json(const WeightTriple& w, const LiouvilleParams& p) {
  return json{{"gamma", p.gamma}, {"mu", p.mu}, {"alphas", {w.a1.real(), w.a2.real(), w.a3.real()}}}.dump();
}

std::vector<double> real_weights(const WeightTriple& w) {
  if (!w.is_real()) throw RegimeError("Monte Carlo needs real weights");
  return {w.a1.real(), w.a2.real(), w.a3.real()};
}

MCEstimate run_cylinder(const KernelSpec& k, double s, double log_pre, double sign, const MCConfig& cfg,
                        const std::string& quantity, const std::string& inputs) {
  cfg.validate();
  CylinderIntegrator integ(k, cfg.engine);
  std::vector<int> capped(cfg.n_samples, 0);
  auto vals = parallel_map<double>(cfg.n_samples, cfg.workers, cfg.batch, [&](std::int64_t i) {
    const CylinderSample smp = integ.sample(cfg.master_seed, std::uint64_t(i));
    capped[i] = smp.capped;
    return sign * std::exp(log_pre - s * smp.log_mass);
  });
  MCEstimate e = summarize(vals, quantity, inputs, cfg);
  for (int c : capped) e.capped += c;
  return e;
}

}  // namespace

bool three_point_variance_blowup(const std::vector<double>& weights, double s, double gamma) {
  if (s >= 0.0) return false;
  const double q = 2.0 / gamma + gamma / 2.0;
  double lim = 4.0 / (gamma * gamma);
  for (double x : weights) lim = std::min(lim, 2.0 * (q - x) / gamma);
  return !(-2.0 * s < lim);
}

KernelSpec three_point_kernel(const WeightTriple& w, double gamma) {
  const auto a = real_weights(w);
  KernelSpec k;
  k.gamma = gamma;
  k.alpha_zero = a[0];
  k.alpha_inf = a[2];
  k.points = {{{1.0, 0.0}, a[1]}};
  return k;
}

MCEstimate estimate_three_point(const WeightTriple& w, const LiouvilleParams& p, const MCConfig& cfg) {
  const auto a = real_weights(w);
  const double s = w.s(p).real();
  check_three_point(a, s, p.gamma);
  const double g = real_gamma(s);
  const double log_pre = std::log(2.0 / p.gamma * std::abs(g)) - s * std::log(p.mu);
  MCEstimate e = run_cylinder(three_point_kernel(w, p.gamma), s, log_pre, g < 0 ? -1.0 : 1.0, cfg, "three-point",
                              weights_json(w, p));
  e.variance_blowup = three_point_variance_blowup(a, s, p.gamma);
  return e;
}

MCEstimate estimate_three_point_unit_volume(const WeightTriple& w, const LiouvilleParams& p, const MCConfig& cfg) {
  const auto a = real_weights(w);
  const double s = w.s(p).real();
  check_three_point(a, s, p.gamma);
  MCEstimate e = run_cylinder(three_point_kernel(w, p.gamma), s, std::log(2.0 / p.gamma), 1.0, cfg,
                              "three-point-unit-volume", weights_json(w, p));
  e.variance_blowup = three_point_variance_blowup(a, s, p.gamma);
  return e;
}

// ---------------------------------------------------------------- reflection

namespace {

double reflection_exponent(double alpha, const LiouvilleParams& p) {
  const double g = p.gamma, q = p.Q();
  if (!(alpha > g / 2.0 && alpha < q)) throw BoundsError("reflection: need gamma/2 < alpha < Q");
  const double e = 2.0 * (q - alpha) / g;
  if (!(e < 4.0 / (g * g))) throw BoundsError("reflection: need 2(Q-alpha)/gamma < 4/gamma^2");
  return e;
}

MCEstimate run_reflection(double alpha, const LiouvilleParams& p, const MCConfig& cfg, double scale,
                          const std::string& quantity) {
  cfg.validate();
  const double e = reflection_exponent(alpha, p);
  std::vector<int> capped(cfg.n_samples, 0);
  auto vals = parallel_map<double>(cfg.n_samples, cfg.workers, cfg.batch, [&](std::int64_t i) {
    const ReflectionSample r = sample_reflection_integral(p.gamma, alpha, cfg.reflection, cfg.master_seed, std::uint64_t(i));
    capped[i] = r.capped;
    return scale * std::exp(e * r.log_integral);
  });
  MCEstimate est = summarize(vals, quantity, json{{"gamma", p.gamma}, {"mu", p.mu}, {"alpha", alpha}}.dump(), cfg);
  for (int c : capped) est.capped += c;
  return est;
}

}  // namespace

MCEstimate estimate_reflection_bar(double alpha, const LiouvilleParams& p, const MCConfig& cfg) {
  return run_reflection(alpha, p, cfg, 1.0, "reflection-bar");
}

MCEstimate estimate_reflection(double alpha, const LiouvilleParams& p, const MCConfig& cfg) {
  const double e = reflection_exponent(alpha, p);
  if (gamma_pole_index(-e) >= 0) throw PoleError("reflection: Gamma(-2(Q-alpha)/gamma) pole");
  const double scale = std::pow(p.mu, e) * gamma_fn(-e).real() * e;
  return run_reflection(alpha, p, cfg, scale, "reflection");
}

double r_bar_dozz(double alpha, const LiouvilleParams& p) {
  try {
    return r_bar_from_r(alpha, p).real();
  } catch (const PoleError&) {
    const double h = 1e-6;
    return 0.5 * (r_bar_from_r(alpha + h, p).real() + r_bar_from_r(alpha - h, p).real());
  }
}

// ---------------------------------------------------------------- two-point limit

std::string TwoPointLimitReport::to_json() const {
  json est = json::array();
  for (std::size_t i = 0; i < scaled.size(); ++i)
    est.push_back({{"eps", eps[i]},
                   {"mean", scaled[i].mean},
                   {"stderr", scaled[i].stderr_},
                   {"n", scaled[i].n},
                   {"variance_blowup", scaled[i].variance_blowup},
                   {"dozz", dozz_scaled[i]},
                   {"manifest_hash", scaled[i].manifest_hash}});
  return json{{"alpha2", alpha2},
              {"alpha3", alpha3},
              {"estimates", est},
              {"limit", limit},
              {"limit_stderr", limit_se},
              {"slope", fit.slope},
              {"chi2", fit.chi2},
              {"prefactor", prefactor},
              {"target", target},
              {"z_score", z_score()}}
      .dump();
}

TwoPointLimitReport estimate_two_point_limit(double alpha2, double alpha3, const std::vector<double>& eps_list,
                                             const LiouvilleParams& p, const MCConfig& cfg) {
  const double g = p.gamma;
  if (!(g / 2.0 < alpha2 && alpha2 <= alpha3 && alpha3 < p.Q())) throw BoundsError("two-point: need gamma/2 < alpha2 <= alpha3 < Q");
  if (eps_list.size() < 2) throw BoundsError("two-point: need at least two eps values");
  TwoPointLimitReport r;
  r.alpha2 = alpha2;
  r.alpha3 = alpha3;
  r.prefactor = alpha2 == alpha3 ? 4.0 : 2.0;
  r.target = r.prefactor * r_dozz(alpha3, p).real();
  const auto ucfg = p.upsilon_config();
  std::vector<double> x, y, w;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    const double eps = eps_list[i];
    if (!(eps > 0.0)) throw BoundsError("two-point: eps must be positive");
    const WeightTriple wt{alpha3 - alpha2 + eps, alpha2, alpha3};
    MCConfig c = cfg;
    c.master_seed = derive_stream(stream_tag::kSuite, cfg.master_seed * 131 + i);
    MCEstimate e = estimate_three_point(wt, p, c);
    e.mean *= eps;
    e.stderr_ *= eps;
    r.eps.push_back(eps);
    r.dozz_scaled.push_back(eps * c_dozz(wt, p, ucfg).value.real());
    x.push_back(eps);
    y.push_back(e.mean);
    w.push_back(1.0 / (e.stderr_ * e.stderr_));
    r.scaled.push_back(std::move(e));
  }
  r.fit = weighted_linear_fit(x, y, w);
  r.limit = r.fit.intercept;
  r.limit_se = r.fit.se_intercept;
  return r;
}

// ---------------------------------------------------------------- four-point

KernelSpec four_point_kernel(std::complex<double> z, const WeightTriple& w, double alpha0, double gamma) {
  const auto a = real_weights(w);
  KernelSpec k;
  k.gamma = gamma;
  k.alpha_zero = a[0];
  k.alpha_inf = a[2];
  k.points = {{z, alpha0}, {{1.0, 0.0}, a[1]}};
  return k;
}

MCEstimate estimate_four_point(std::complex<double> z, const WeightTriple& w, double alpha0, const LiouvilleParams& p,
                               const MCConfig& cfg) {
  const double g = p.gamma, q = p.Q();
  if (std::abs(alpha0 + g / 2.0) > 1e-14 && std::abs(alpha0 + 2.0 / g) > 1e-14)
    throw RegimeError("four-point: alpha0 must be -gamma/2 or -2/gamma");
  const auto a = real_weights(w);
  for (double x : a)
    if (!(x < q)) throw BoundsError("Seiberg: alpha_k >= Q");
  if (!(a[0] + a[1] + a[2] > 2.0 * q - alpha0)) throw BoundsError("Seiberg: sum(alpha) <= 2Q + |alpha0|");
  if (!(std::abs(z) <= 0.9) || !(std::abs(z) >= 1e-3) || !(std::abs(z - 1.0) >= 0.05))
    throw BoundsError("four-point: need 1e-3 <= |z| <= 0.9 and |z - 1| >= 0.05");
  const double s = (alpha0 + a[0] + a[1] + a[2] - 2.0 * q) / g;
  const double gm = real_gamma(s);
  const double log_pre = std::log(2.0 / g * std::abs(gm)) - s * std::log(p.mu);
  const std::string inputs = json{{"gamma", g},
                                  {"mu", p.mu},
                                  {"alphas", {a[0], a[1], a[2]}},
                                  {"alpha0", alpha0},
                                  {"z", {z.real(), z.imag()}}}
                                 .dump();
  return run_cylinder(four_point_kernel(z, w, alpha0, g), s, log_pre, gm < 0 ? -1.0 : 1.0, cfg, "four-point", inputs);
}

}  // namespace liouville
