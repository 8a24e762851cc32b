#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "liouville/errors.hpp"
#include "liouville/estimators.hpp"
#include "liouville/parallel.hpp"

namespace liouville {

using nlohmann::json;

namespace {

struct TailStats {
  double slope = 0.0, amplitude = 0.0, x_min = 0.0, x_max = 0.0;
  long min_exc = 0;
};

// `desc` sorted in decreasing order.
TailStats tail_stats(const std::vector<double>& desc, double theory_slope, const TailConfig& tc) {
  const long n = long(desc.size());
  const long k = long(std::floor(tc.top_fraction * n));
  if (k <= tc.min_exceedances || tc.n_thresholds < 2)
    throw InsufficientTailError("tail: top order statistics hold fewer than the required exceedances");
  const double lo = desc[k], hi = desc[tc.min_exceedances];
  if (!(lo > 0.0) || !(hi > lo)) throw InsufficientTailError("tail: degenerate threshold range");
  std::vector<double> x, y;
  long min_exc = n;
  for (int i = 0; i < tc.n_thresholds; ++i) {
    const double t = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (tc.n_thresholds - 1));
    const long cnt = long(std::upper_bound(desc.begin(), desc.end(), t, std::greater<double>()) - desc.begin());
    if (cnt < tc.min_exceedances) throw InsufficientTailError("tail: too few exceedances at the top threshold");
    min_exc = std::min(min_exc, cnt);
    x.push_back(std::log(t));
    y.push_back(std::log(double(cnt) / n));
  }
  TailStats s;
  s.slope = linear_fit(x, y).slope;
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += y[i] - theory_slope * x[i];
  s.amplitude = std::exp(acc / x.size());
  s.x_min = lo;
  s.x_max = hi;
  s.min_exc = min_exc;
  return s;
}

double sd(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace

std::string TailFitReport::to_json() const {
  return json{{"fitted_slope", fitted_slope},
              {"slope_ci", slope_ci},
              {"theory_slope", theory_slope},
              {"amplitude", amplitude},
              {"amplitude_ci", amplitude_ci},
              {"theory_amplitude", theory_amplitude},
              {"ratio", ratio()},
              {"rbar", rbar},
              {"rbar_stderr", rbar_se},
              {"x_range", {x_min, x_max}},
              {"n_thresholds", n_thresholds},
              {"min_exceedances", min_exceedances},
              {"n", n}}
      .dump();
}

TailFitReport fit_tail(const std::vector<double>& w, double theory_slope, const TailConfig& tc, std::uint64_t seed) {
  std::vector<double> desc(w);
  std::sort(desc.begin(), desc.end(), std::greater<double>());
  const TailStats base = tail_stats(desc, theory_slope, tc);
  TailFitReport r;
  r.fitted_slope = base.slope;
  r.amplitude = base.amplitude;
  r.theory_slope = theory_slope;
  r.x_min = base.x_min;
  r.x_max = base.x_max;
  r.n_thresholds = tc.n_thresholds;
  r.min_exceedances = base.min_exc;
  r.n = long(w.size());
  // block bootstrap over contiguous index blocks
  const int nb = tc.bootstrap_blocks;
  const std::size_t n = w.size();
  RngStream rng(seed, derive_stream(stream_tag::kBootstrap, 0));
  std::vector<double> slopes, amps;
  for (int rep = 0; rep < tc.bootstrap_reps; ++rep) {
    std::vector<double> res;
    res.reserve(n);
    for (int b = 0; b < nb; ++b) {
      const int pick = std::min(nb - 1, int(rng.uniform() * nb));
      res.insert(res.end(), w.begin() + pick * n / nb, w.begin() + (pick + 1) * n / nb);
    }
    std::sort(res.begin(), res.end(), std::greater<double>());
    try {
      const TailStats s = tail_stats(res, theory_slope, tc);
      slopes.push_back(s.slope);
      amps.push_back(s.amplitude);
    } catch (const InsufficientTailError&) {
    }
  }
  if (slopes.size() < 2) throw InsufficientTailError("tail: bootstrap replicates lack exceedances");
  r.slope_ci = sd(slopes);
  r.amplitude_ci = sd(amps);
  return r;
}

TailFitReport fit_tail_one_insertion(double alpha, std::complex<double> z, std::function<double(std::complex<double>)> log_f,
                                     const LiouvilleParams& p, const MCConfig& cfg, long rbar_samples, const TailConfig& tc) {
  cfg.validate();
  const double g = p.gamma, q = p.Q();
  if (!(alpha > g / 2.0 && alpha < q)) throw BoundsError("tail: need gamma/2 < alpha < Q");
  if (!(std::abs(z) > 2.0)) throw BoundsError("tail: need |z| > 2");
  const double pexp = 2.0 * (q - alpha) / g;
  LocalBallSampler sampler(g, alpha, z, cfg.local, {0.0}, 0.0, log_f);
  auto vals = parallel_map<double>(cfg.n_samples, cfg.workers, cfg.batch, [&](std::int64_t i) {
    return std::exp(sampler.sample(cfg.master_seed, std::uint64_t(i))[0]);
  });
  TailFitReport r = fit_tail(vals, -pexp, tc, cfg.master_seed);
  if (rbar_samples > 0) {
    MCConfig rc = cfg;
    rc.n_samples = rbar_samples;
    rc.master_seed = derive_stream(stream_tag::kSuite, cfg.master_seed);
    const MCEstimate e = estimate_reflection_bar(alpha, p, rc);
    r.rbar = e.mean;
    r.rbar_se = e.stderr_;
  } else {
    r.rbar = r_bar_dozz(alpha, p);
  }
  const double lf = log_f ? log_f(z) : 0.0;
  r.theory_amplitude = std::pow(std::abs(z), 4.0 * alpha * (alpha - q)) * std::exp(pexp * lf) * r.rbar;
  return r;
}

// ---------------------------------------------------------------- moments

std::string MomentScalingReport::to_json() const {
  json ls = json::array();
  for (const auto& l : lines)
    ls.push_back({{"p", l.p},
                  {"eps", l.eps},
                  {"log_moment", l.log_moment},
                  {"log_moment_stderr", l.log_moment_se},
                  {"slope", l.fit.slope},
                  {"slope_stderr", l.fit.se_slope},
                  {"theory_slope", l.theory_slope}});
  return json{{"gamma", gamma}, {"alpha", alpha}, {"lines", ls}}.dump();
}

namespace {

void log_moments(const std::vector<std::vector<double>>& logs, std::size_t col, double p, double* lm, double* se) {
  std::vector<double> v;
  v.reserve(logs.size());
  for (const auto& row : logs) v.push_back(p * row[col]);
  const double m = *std::max_element(v.begin(), v.end());
  for (double& x : v) x = std::exp(x - m);
  const MeanSE ms = mean_stderr(v);
  *lm = m + std::log(ms.mean);
  *se = ms.stderr_ / ms.mean;
}

}  // namespace

MomentScalingReport moment_scaling_report(double gamma, double alpha, const std::vector<double>& p_list,
                                          const std::vector<double>& eps_list, const MCConfig& cfg,
                                          std::complex<double> z) {
  cfg.validate();
  const double q = 2.0 / gamma + gamma / 2.0;
  for (double p : p_list) {
    if (!(p < 4.0 / (gamma * gamma))) throw BoundsError("moments: need p < 4/gamma^2");
    if (alpha != 0.0 && p > 0.0 && !(p < 2.0 * (q - alpha) / gamma)) throw BoundsError("moments: need p < 2(Q-alpha)/gamma");
  }
  if (eps_list.size() < 2) throw BoundsError("moments: need at least two radii");
  std::vector<double> marks;
  for (double e : eps_list) {
    if (!(e > 0.0 && e <= 1.0)) throw BoundsError("moments: radii must lie in (0, 1]");
    marks.push_back(-std::log(e));
  }
  LocalBallSampler sampler(gamma, alpha, z, cfg.local, marks);
  auto logs = parallel_map<std::vector<double>>(cfg.n_samples, cfg.workers, cfg.batch, [&](std::int64_t i) {
    return sampler.sample(cfg.master_seed, std::uint64_t(i), false);
  });
  const double far_var = gamma * gamma * sampler.far_sd() * sampler.far_sd();
  MomentScalingReport r;
  r.gamma = gamma;
  r.alpha = alpha;
  for (double p : p_list) {
    MomentLine l;
    l.p = p;
    l.theory_slope = gamma * (q - alpha) * p - 0.5 * gamma * gamma * p * p;
    std::vector<double> x, w;
    for (std::size_t i = 0; i < sampler.marks().size(); ++i) {
      double lm, se;
      log_moments(logs, i, p, &lm, &se);
      lm += 0.5 * p * p * far_var;
      l.eps.push_back(std::exp(-sampler.marks()[i]));
      l.log_moment.push_back(lm);
      l.log_moment_se.push_back(se);
      x.push_back(-sampler.marks()[i]);
      w.push_back(1.0 / (se * se));
    }
    l.fit = weighted_linear_fit(x, l.log_moment, w);
    r.lines.push_back(std::move(l));
  }
  return r;
}

std::string FreezingReport::to_json() const {
  return json{{"gamma", gamma},
              {"alpha", alpha},
              {"p", p},
              {"eps", eps},
              {"log_moment", log_moment},
              {"log_moment_stderr", log_moment_se},
              {"slope", fit.slope},
              {"slope_stderr", fit.se_slope},
              {"bound_slope", bound_slope}}
      .dump();
}

FreezingReport freezing_report(double gamma, double alpha, double p, const std::vector<double>& eps_list,
                               const MCConfig& cfg) {
  cfg.validate();
  const double q = 2.0 / gamma + gamma / 2.0;
  if (!(alpha > q) || !(p > 0.0) || !(alpha - q < gamma * p)) throw BoundsError("freezing: need alpha > Q, p > 0, alpha - Q < gamma p");
  if (eps_list.size() < 2) throw BoundsError("freezing: need at least two radii");
  std::vector<double> cks;
  for (double e : eps_list) {
    if (!(e > 0.0 && e < 1.0)) throw BoundsError("freezing: radii must lie in (0, 1)");
    cks.push_back(-std::log(e));
  }
  KernelSpec k;
  k.gamma = gamma;
  k.alpha_zero = alpha;
  k.alpha_inf = -alpha;
  CylinderIntegrator integ(k, cfg.engine, cks);
  auto logs = parallel_map<std::vector<double>>(cfg.n_samples, cfg.workers, cfg.batch, [&](std::int64_t i) {
    return integ.sample(cfg.master_seed, std::uint64_t(i)).log_checkpoints;
  });
  FreezingReport r;
  r.gamma = gamma;
  r.alpha = alpha;
  r.p = p;
  r.bound_slope = 0.5 * (alpha - q) * (alpha - q);
  std::vector<double> x, w;
  for (std::size_t i = 0; i < integ.checkpoints().size(); ++i) {
    double lm, se;
    log_moments(logs, i, -p, &lm, &se);
    r.eps.push_back(std::exp(-integ.checkpoints()[i]));
    r.log_moment.push_back(lm);
    r.log_moment_se.push_back(se);
    x.push_back(-integ.checkpoints()[i]);
    w.push_back(1.0 / (se * se));
  }
  r.fit = weighted_linear_fit(x, r.log_moment, w);
  return r;
}

}  // namespace liouville
