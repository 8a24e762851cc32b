// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...]   (default: 1-8 and 10)

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "liouville/dozz.hpp"
#include "liouville/estimators.hpp"
#include "liouville/gmc.hpp"
#include "liouville/stats.hpp"

#ifndef LIOUVILLE_CLI
#define LIOUVILLE_CLI "liouville"
#endif

using namespace liouville;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + what + (ok ? "" : " [FAIL]");
  }
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

LiouvilleParams P(double g, double mu = 1.0) {
  LiouvilleParams p;
  p.gamma = g;
  p.mu = mu;
  return p;
}

MCConfig mc(long n, std::uint64_t seed) {
  MCConfig c;
  c.n_samples = n;
  c.master_seed = seed;
  return c;
}

// ---------------------------------------------------------------- 1
Outcome identities() {
  Outcome o;
  int total = 0, failed = 0;
  double worst = 0.0;
  std::string first_fail;
  for (double g : {0.7, 1.0, 1.4}) {
    std::vector<IdentityReport> reps = specfun_suite(g, 50, 2024, 1e-8);
    for (double mu : {1.0, 2.5}) {
      const auto d = identity_suite(P(g, mu), 50, 2024, 1e-8);
      reps.insert(reps.end(), d.begin(), d.end());
    }
    for (const auto& r : reps) {
      ++total;
      worst = std::max(worst, r.residual);
      if (!r.pass) {
        ++failed;
        if (first_fail.empty()) first_fail = r.name + " at " + r.point;
      }
    }
  }
  o.check(failed == 0, fmt("%d identity checks, %d failed, max residual %.2e (tol 1e-8)%s", total, failed, worst,
                           first_fail.empty() ? "" : (" first: " + first_fail).c_str()));
  return o;
}

// ---------------------------------------------------------------- 2
Outcome upsilon_values() {
  Outcome o;
  for (double g : {0.7, 1.0, 1.4}) {
    const UpsilonConfig c = UpsilonConfig::for_gamma(g);
    const QuadResult h = upsilon(c.Q() / 2.0, c);
    o.check(std::abs(h.value - 1.0) <= std::max(h.err_bound, 1e-15), fmt("g=%.1f |U(Q/2)-1|=%.1e", g, std::abs(h.value - 1.0)));
    double zmax = 0.0;
    for (cplx z : {cplx(0.0), cplx(-g / 2), cplx(-2.0 / g), cplx(-g), cplx(c.Q()), cplx(c.Q() + g / 2), cplx(c.Q() + 2.0 / g)})
      zmax = std::max(zmax, std::abs(upsilon(z, c).value));
    o.check(zmax <= 1e-6, fmt("g=%.1f max|U(zero)|=%.1e", g, zmax));
  }
  RngStream rng(2, 0);
  int bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double g = 0.5 + 1.3 * rng.uniform();
    const UpsilonConfig c = UpsilonConfig::for_gamma(g);
    const cplx z(-1.5 + (c.Q() + 3.0) * rng.uniform(), -1.5 + 3.0 * rng.uniform());
    const QuadResult a = upsilon(z, c), b = upsilon(c.Q() - z, c);
    const double eb = std::max(a.err_bound, b.err_bound);
    const double d = std::abs(a.value - b.value);
    worst = std::max(worst, d / std::max(eb, 1e-300));
    if (!(d <= 2.0 * eb || d <= 1e-15 * std::abs(a.value))) ++bad;
  }
  o.check(bad == 0, fmt("U(z)=U(Q-z) on 200 points: %d outside 2 err_bound", bad));
  double dp = 0.0;
  for (double g : {0.7, 1.0, 1.4}) {
    const UpsilonConfig c = UpsilonConfig::for_gamma(g);
    dp = std::max(dp, std::abs(upsilon_prime_zero(c).value - upsilon_prime_zero_fd(c).value));
  }
  o.check(dp <= 1e-6, fmt("U'(0) two methods differ by %.1e", dp));
  return o;
}

// ---------------------------------------------------------------- 3
// tests/oracle/gmc_oracle.py
constexpr double kAnnulusSecondMoment = 5.87231345517555;

Outcome gmc_sanity() {
  Outcome o;
  const int n = 10000;
  {
    CylinderGrid g;  // default truncated grid, s in [-12, 12]
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) {
      RngStream r(301, derive_stream(stream_tag::kField, i));
      v[i] = build_chaos(sample_field(g, r), 1.0).total();
    }
    const MeanSE m = mean_stderr(v);
    const double ex = expected_truncated_mass(g);
    o.check(std::abs(m.mean - ex) <= 3 * m.stderr_, fmt("E[mass] %.4f+-%.4f vs %.4f", m.mean, m.stderr_, ex));
  }
  {
    CylinderGrid g;
    g.s_min = -std::log(2.0);
    g.s_max = std::log(2.0) / 14;
    g.n_s = 15;
    g.n_modes = 32;
    g.n_theta = 128;
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) {
      RngStream r(302, derive_stream(stream_tag::kField, i));
      const double t = integrate_kernel(build_chaos(sample_field(g, r), 0.5), [](double s, double) { return s < 0 ? 1.0 : 0.0; });
      v[i] = t * t;
    }
    const MeanSE m = mean_stderr(v);
    o.check(std::abs(m.mean - kAnnulusSecondMoment) <= 3 * m.stderr_,
            fmt("annulus E[M^2] %.4f+-%.4f vs quadrature %.4f", m.mean, m.stderr_, kAnnulusSecondMoment));
  }
  {
    // unit square [0.5, 1.5] x [-0.5, 0.5], gamma = 1
    const double gamma = 1.0;
    DenseOracle dense(32, 0.5, -0.5, 1.0);
    CylinderGrid g;
    g.s_min = -1.0;
    g.s_max = 1.0;
    g.n_s = 160;
    g.n_modes = 64;
    g.n_theta = 512;
    auto in_square = [](double s, double th) {
      const double r = std::exp(-s), x = r * std::cos(th), y = r * std::sin(th);
      return (x >= 0.5 && x <= 1.5 && y >= -0.5 && y <= 0.5) ? 1.0 : 0.0;
    };
    const int nd = 4000;
    std::vector<double> a(nd), b(nd);
    for (int i = 0; i < nd; ++i) {
      RngStream r1(303, derive_stream(stream_tag::kOracle, i)), r2(304, derive_stream(stream_tag::kField, i));
      a[i] = dense.chaos_mass(dense.sample(r1), gamma);
      b[i] = integrate_kernel(build_chaos(sample_field(g, r2), gamma), in_square);
    }
    const MeanSE ma = mean_stderr(a), mb = mean_stderr(b);
    o.check(std::abs(ma.mean - mb.mean) <= 3 * std::hypot(ma.stderr_, mb.stderr_),
            fmt("square mass dense %.4f+-%.4f vs cylinder %.4f+-%.4f", ma.mean, ma.stderr_, mb.mean, mb.stderr_));
  }
  return o;
}

// ---------------------------------------------------------------- 4
Outcome exact_laws() {
  Outcome o;
  const double nu = 0.75;
  std::vector<double> x(100000);
  RngStream r(401, 0);
  for (auto& v : x) v = sample_max_drifted_bm(nu, r);
  const KSResult k = ks_one_sample(x, [nu](double t) { return t <= 0 ? 0.0 : -std::expm1(-2 * nu * t); });
  o.check(k.p_value > 0.01, fmt("max ~ Exp(2nu): KS p=%.3f (n=1e5)", k.p_value));
  const int n = 10000;
  const double nu2 = 0.5, dt = 1e-3;
  std::vector<double> fwd(n), rev(n);
  for (int i = 0; i < n; ++i) {
    RngStream a(402, i), b(403, i);
    fwd[i] = sample_conditioned_bm(nu2, 1.0, dt, a).at(1.0);
    rev[i] = williams_post_max_path(nu2, 1.0, dt, b).back();
  }
  const KSResult k2 = ks_two_sample(fwd, rev);
  o.check(k2.p_value > 0.01, fmt("conditioned path vs time reversal at s=1: KS p=%.3f (n=%d)", k2.p_value, n));
  return o;
}

// ---------------------------------------------------------------- 5
Outcome tail() {
  Outcome o;
  MCConfig c = mc(100000, 501);
  const TailFitReport r = fit_tail_one_insertion(2.0, 3.0, nullptr, P(1.0), c, 0);
  o.check(std::abs(r.fitted_slope + 1.0) <= 0.1, fmt("slope %.3f+-%.3f (target -1.0+-0.1)", r.fitted_slope, r.slope_ci));
  o.check(r.ratio() >= 0.7 && r.ratio() <= 1.3, fmt("amplitude/theory %.3f (in [0.7,1.3])", r.ratio()));
  return o;
}

// ---------------------------------------------------------------- 6
Outcome three_point() {
  Outcome o;
  struct Pt {
    double g, a;
  };
  for (Pt pt : {Pt{1.0, 1.8}, Pt{0.8, 2.4}}) {
    const auto p = P(pt.g);
    const WeightTriple w{pt.a, pt.a, pt.a};
    const MCEstimate e = estimate_three_point(w, p, mc(5000, 601));
    const double ref = c_dozz(w, p, p.upsilon_config()).value.real();
    o.check(std::abs(e.z_score(ref)) <= 3 && e.rel_stderr() <= 0.10,
            fmt("g=%.1f a=%.1f: %.6g+-%.2g vs DOZZ %.6g z=%.2f rel=%.3f", pt.g, pt.a, e.mean, e.stderr_, ref,
                e.z_score(ref), e.rel_stderr()));
  }
  return o;
}

// ---------------------------------------------------------------- 7
Outcome reflection() {
  Outcome o;
  const auto p = P(1.0);
  for (double a : {1.9, 2.1}) {
    const MCEstimate e = estimate_reflection(a, p, mc(20000, 701));
    const double ref = r_dozz(a, p).real();
    o.check(std::abs(e.z_score(ref)) <= 3 && e.rel_stderr() <= 0.10,
            fmt("a=%.1f: R %.6g+-%.2g vs DOZZ %.6g z=%.2f rel=%.3f", a, e.mean, e.stderr_, ref, e.z_score(ref), e.rel_stderr()));
  }
  return o;
}

// ---------------------------------------------------------------- 8
Outcome two_point() {
  Outcome o;
  // finite-variance side: per-sample variance is finite iff eps > 0.4
  const TwoPointLimitReport r = estimate_two_point_limit(2.1, 2.1, {0.45, 0.55, 0.7}, P(1.0), mc(20000, 801));
  std::string pts;
  for (std::size_t i = 0; i < r.eps.size(); ++i)
    pts += fmt(" eps=%.2f:%.3g+-%.2g(DOZZ %.3g)", r.eps[i], r.scaled[i].mean, r.scaled[i].stderr_, r.dozz_scaled[i]);
  o.check(std::abs(r.z_score()) <= 3,
          fmt("limit %.4g+-%.2g vs 4R %.4g z=%.1f;%s", r.limit, r.limit_se, r.target, r.z_score(), pts.c_str()));
  return o;
}

// ---------------------------------------------------------------- 9
Outcome four_point() {
  Outcome o;
  const auto p = P(1.0);
  for (double a1 : {1.8, 2.2}) {
    const WeightTriple w{a1, 1.9, 1.9};
    const MCEstimate e = estimate_four_point(0.3, w, -0.5, p, mc(4000, 901));
    const FourPointRhs rhs = four_point_rhs(0.3, w, -0.5, p, p.upsilon_config());
    const double ref = rhs.value.value.real();
    o.check(std::abs(e.z_score(ref)) <= 3 && e.rel_stderr() <= 0.15,
            fmt("a1=%.1f%s: %.6g+-%.2g vs %.6g z=%.2f rel=%.3f", a1, rhs.reflection ? " (reflection)" : "", e.mean,
                e.stderr_, ref, e.z_score(ref), e.rel_stderr()));
  }
  return o;
}

// ---------------------------------------------------------------- 10
std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run(const std::string& args) {
  const std::string cmd = std::string(LIOUVILLE_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Outcome reproducibility() {
  Outcome o;
  const std::string dir = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/liouville_acc_" +
                          std::to_string(::getpid());
  std::system(("mkdir -p " + dir).c_str());
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"three-point", "--gamma 1 --alphas 1.8,1.8,1.8 --samples 200 --seed 11"},
      {"reflection", "--gamma 1 --alpha 2.1 --samples 400 --seed 3"},
      {"two-point-limit", "--gamma 1 --alpha 2.1 --eps 0.45,0.55,0.7 --samples 100 --seed 5"},
      {"tail", "--gamma 1 --alpha 2 --z 3,0 --samples 20000 --seed 7"},
      {"four-point", "--gamma 1 --alphas 1.8,1.9,1.9 --z 0.3,0 --samples 100 --seed 9"},
      {"moments", "--gamma 0.8 --samples 2000 --seed 13"},
  };
  for (const auto& [exp, args] : runs) {
    const std::string a = dir + "/" + exp + "_w1", b = dir + "/" + exp + "_w4", c = dir + "/" + exp + "_replay";
    const int r1 = run("mc " + exp + " " + args + " --workers 1 --out " + a);
    const int r4 = run("mc " + exp + " " + args + " --workers 4 --out " + b);
    const int rr = run("mc --replay " + a + ".manifest.json --workers 2 --out " + c);
    const std::string ja = slurp(a + ".jsonl");
    const bool ok = r1 == 0 && r4 == 0 && rr == 0 && !ja.empty() && ja == slurp(b + ".jsonl") &&
                    ja == slurp(c + ".jsonl") && slurp(a + ".csv") == slurp(c + ".csv");
    o.check(ok, fmt("%s replay+workers{1,4} %s", exp.c_str(), ok ? "identical" : fmt("differ (exit %d/%d/%d)", r1, r4, rr).c_str()));
  }
  std::system(("rm -rf " + dir).c_str());
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> crit = {
      {1, {"analytic identity suite", identities}},
      {2, {"upsilon point values", upsilon_values}},
      {3, {"GMC sanity", gmc_sanity}},
      {4, {"exact laws", exact_laws}},
      {5, {"tail exponent", tail}},
      {6, {"three-point vs DOZZ", three_point}},
      {7, {"reflection coefficient", reflection}},
      {8, {"two-point limit", two_point}},
      {9, {"four-point fusion", four_point}},
      {10, {"reproducibility", reproducibility}},
  };
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8, 10};
  bool all = true;
  for (int k : which) {
    const auto it = crit.find(k);
    if (it == crit.end()) {
      std::printf("criterion %d: unknown\n", k);
      all = false;
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %-24s %s  (%.0f s)  %s\n", k, it->second.first.c_str(), o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
