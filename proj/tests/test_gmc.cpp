#include <cmath>
#include <cstdio>
#include <numeric>

#include <gtest/gtest.h>

#include "liouville/engine.hpp"
#include "liouville/errors.hpp"
#include "liouville/gmc.hpp"
#include "liouville/lateral.hpp"
#include "liouville/stats.hpp"

using namespace liouville;

namespace {

// tests/oracle/gmc_oracle.py, Gauss-Legendre with node doubling.
constexpr double kAnnulusSecondMoment = 5.87231345517555;  // gamma = 0.5
// scipy dblquad of the three-point kernel (gamma 0.5, alphas 1.8) against |x|_+^{-4}
constexpr double kKernelMass = 12.96251938019683;
constexpr double kSelfLogAverage1 = 0.805086721950087;

// Grid on the annulus 1 <= |x| <= 2 plus one row past s = 0 (the grid must straddle 0).
CylinderGrid annulus_grid(int n_modes, int rows) {
  CylinderGrid g;
  g.s_min = -std::log(2.0);
  g.s_max = std::log(2.0) / rows;
  g.n_s = rows + 1;
  g.n_modes = n_modes;
  g.n_theta = 4 * n_modes;
  return g;
}

double annulus_mass(const ChaosMeasure& m) {
  return integrate_kernel(m, [](double s, double) { return s < 0.0 ? 1.0 : 0.0; });
}

MeanSE moments(int n, std::uint64_t seed, const std::function<double(RngStream&)>& draw) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    RngStream r(seed, derive_stream(stream_tag::kField, i));
    v[i] = draw(r);
  }
  return mean_stderr(v);
}

}  // namespace

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  RngStream a(3, 10), b(3, 10), c(3, 11);
  for (int i = 0; i < 5; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    EXPECT_NE(x, c.normal());
  }
  EXPECT_NE(derive_stream(stream_tag::kField, 0), derive_stream(stream_tag::kPath, 0));
  RngStream u(1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(Stats, Basics) {
  EXPECT_DOUBLE_EQ(compensated_sum({1e16, 1.0, -1e16}), 1.0);
  const MeanSE m = mean_stderr({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.stderr_, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_NEAR(kolmogorov_sf(1.3581), 0.05, 5e-4);
  EXPECT_NEAR(kolmogorov_sf(1.6276), 0.01, 1e-4);
  const LinearFit f = weighted_linear_fit({0, 1, 2, 3}, {1, 3, 5, 7}, {1, 2, 1, 2});
  EXPECT_NEAR(f.intercept, 1.0, 1e-13);
  EXPECT_NEAR(f.slope, 2.0, 1e-13);
  const LinearFit o = linear_fit({0, 1, 2, 3}, {0.1, 0.9, 2.1, 2.9});
  EXPECT_NEAR(o.slope, 0.96, 1e-12);
}

TEST(Stats, KsDetectsShift) {
  RngStream r(1, 1);
  std::vector<double> a(2000), b(2000);
  for (auto& x : a) x = r.normal();
  for (auto& x : b) x = r.normal() + 0.3;
  EXPECT_LT(ks_two_sample(a, b).p_value, 1e-6);
  EXPECT_LT(ks_one_sample(b, [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }).p_value, 1e-6);
}

TEST(Lateral, LogSeriesIdentity) {
  // ln 1/|e^{i th} - r e^{i th'}| = sum r^n cos(n (th - th')) / n
  for (double r : {0.2, 0.7, 0.95})
    for (double d : {0.1, 1.3, 3.0}) {
      double s = 0.0;
      for (int n = 1; n < 4000; ++n) s += std::pow(r, n) * std::cos(n * d) / n;
      const double lhs = -std::log(std::abs(std::polar(1.0, d) - r));
      EXPECT_NEAR(lhs, s, 1e-12) << r << " " << d;
    }
}

TEST(Lateral, SynthMatchesDirectSum) {
  const int K = 64, N = 12;
  std::vector<double> a(N), b(N), out(K);
  RngStream r(2, 2);
  for (int n = 0; n < N; ++n) a[n] = r.normal(), b[n] = r.normal();
  LateralSynth syn(K);
  syn.eval(a.data(), b.data(), N, out.data());
  for (int j = 0; j < K; ++j) {
    const double th = (j + 0.5) * 2 * M_PI / K;
    double s = 0.0;
    for (int n = 1; n <= N; ++n) s += (a[n - 1] * std::cos(n * th) + b[n - 1] * std::sin(n * th)) / std::sqrt(double(n));
    EXPECT_NEAR(out[j], s, 1e-12);
  }
}

TEST(Lateral, CovarianceMatchesTruncatedSeries) {
  // Cov(Y(0, 0), Y(ds, dth)) = sum_{n <= N} cos(n dth) e^{-n ds} / n
  const int N = 16, K = 64, n = 6000;
  const double ds = 0.05;
  const int jj = 5;
  std::vector<double> x(n), y(n);
  std::vector<double> v0(K), v1(K);
  for (int i = 0; i < n; ++i) {
    RngStream r(9, i);
    LateralModes m(N);
    m.draw_stationary(r);
    thread_synth(K).eval(m.a(), m.b(), N, v0.data());
    m.advance(ds, N, r);
    thread_synth(K).eval(m.a(), m.b(), N, v1.data());
    x[i] = v0[0];
    y[i] = v1[jj];
  }
  double c = 0.0;
  for (int i = 0; i < n; ++i) c += x[i] * y[i];
  c /= n;
  double exact = 0.0, var = 0.0;
  for (int k = 1; k <= N; ++k) {
    exact += std::cos(k * jj * 2 * M_PI / K) * std::exp(-k * ds) / k;
    var += 1.0 / k;
  }
  // sd of a product of two unit-variance-ish Gaussians with correlation rho
  const double se = std::sqrt((var * var + exact * exact) / n);
  EXPECT_LT(std::abs(c - exact), 3.0 * se);
}

TEST(Field, SeedDeterminism) {
  CylinderGrid g = annulus_grid(8, 8);
  RngStream r1(4, 7), r2(4, 7), r3(4, 8);
  const auto a = sample_field(g, r1), b = sample_field(g, r2), c = sample_field(g, r3);
  EXPECT_EQ(a.radial, b.radial);
  EXPECT_EQ(a.a, b.a);
  EXPECT_NE(a.radial, c.radial);
}

TEST(Field, VarianceFormula) {
  CylinderGrid g;
  g.n_modes = 16;
  const auto f = [&] {
    RngStream r(1, 1);
    return sample_field(g, r);
  }();
  EXPECT_NEAR(f.variance(0), std::abs(g.s_mid(0)) + harmonic(16), 1e-12);
}

TEST(Chaos, GammaZeroIsReferenceMeasure) {
  CylinderGrid g;
  g.n_modes = 8;
  g.n_theta = 32;
  g.n_s = 96;
  RngStream r(1, 1);
  const ChaosMeasure m = build_chaos(sample_field(g, r), 0.0);
  EXPECT_NEAR(m.total(), expected_truncated_mass(g), 1e-12);
  EXPECT_NEAR(2 * M_PI * (1 - std::exp(-24.0)), expected_truncated_mass(CylinderGrid{}), 1e-15);
}

TEST(Chaos, MartingaleInTruncation) {
  // E[total] does not depend on n_modes
  std::vector<MeanSE> ms;
  for (int nm : {8, 16, 32}) {
    CylinderGrid g;
    g.s_min = -3.0;
    g.s_max = 3.0;
    g.n_s = 96;
    g.n_modes = nm;
    g.n_theta = 4 * nm;
    ms.push_back(moments(1500, 21, [&](RngStream& r) { return build_chaos(sample_field(g, r), 1.0).total(); }));
    EXPECT_LT(std::abs(ms.back().mean - expected_truncated_mass(g)), 3.0 * ms.back().stderr_) << nm;
  }
  for (std::size_t i = 1; i < ms.size(); ++i)
    EXPECT_LT(std::abs(ms[i].mean - ms[0].mean), 3.0 * std::hypot(ms[i].stderr_, ms[0].stderr_));
}

TEST(Chaos, AnnulusSecondMoment) {
  const CylinderGrid g = annulus_grid(32, 14);
  const auto m = moments(4000, 5, [&](RngStream& r) {
    const double t = annulus_mass(build_chaos(sample_field(g, r), 0.5));
    return t * t;
  });
  EXPECT_LT(std::abs(m.mean - kAnnulusSecondMoment), 3.0 * m.stderr_) << m.mean << " +- " << m.stderr_;
}

TEST(Chaos, SingularKernelRaises) {
  CylinderGrid g = annulus_grid(8, 8);
  RngStream r(1, 1);
  const ChaosMeasure m = build_chaos(sample_field(g, r), 0.5);
  EXPECT_THROW(integrate_kernel(m, [](double, double) { return INFINITY; }), SingularCellError);
  EXPECT_NEAR(integrate_kernel(m, [](double, double) { return 1.0; }), m.total(), 1e-12 * m.total());
}

TEST(Chaos, DumpRoundTrip) {
  CylinderGrid g = annulus_grid(8, 8);
  RngStream r(1, 1);
  const ChaosMeasure m = build_chaos(sample_field(g, r), 0.5);
  const std::string path = testing::TempDir() + "chaos_dump.bin";
  dump_chaos_measure(m, path);
  const ChaosMeasure b = load_chaos_measure(path);
  EXPECT_EQ(b.cell_mass, m.cell_mass);
  EXPECT_EQ(b.grid.n_s, g.n_s);
  EXPECT_DOUBLE_EQ(b.gamma, 0.5);
  std::remove(path.c_str());
}

TEST(ZProcess, UnitExpectation) {
  const auto m = moments(3000, 3, [](RngStream& r) {
    const auto z = sample_Z_process(64, 1.0 / 64, 16, 64, 1.0, r);
    return std::accumulate(z.begin(), z.end(), 0.0);
  });
  EXPECT_LT(std::abs(m.mean - 2 * M_PI), 3.0 * m.stderr_);
}

TEST(ZProcess, Stationarity) {
  std::vector<double> a, b;
  for (int i = 0; i < 3000; ++i) {
    RngStream r(8, i);
    const auto z = sample_Z_process(128, 1.0 / 64, 16, 64, 1.0, r);
    a.push_back(std::accumulate(z.begin(), z.begin() + 64, 0.0));
    b.push_back(std::accumulate(z.begin() + 64, z.end(), 0.0));
  }
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
}

TEST(ZProcess, MomentStabilizesInModes) {
  // p = 1.5 < 4/gamma^2 at gamma = 1
  std::vector<MeanSE> ms;
  for (int nm : {16, 32}) {
    ms.push_back(moments(3000, 11, [&](RngStream& r) {
      const auto z = sample_Z_process(64, 1.0 / 64, nm, 4 * nm, 1.0, r);
      return std::pow(std::accumulate(z.begin(), z.end(), 0.0), 1.5);
    }));
  }
  EXPECT_LT(std::abs(ms[1].mean - ms[0].mean), 3.0 * std::hypot(ms[0].stderr_, ms[1].stderr_));
}

TEST(Paths, MaxOfDriftedBmIsExponential) {
  const double nu = 0.7;
  std::vector<double> x(20000);
  RngStream r(2, 0);
  for (auto& v : x) v = sample_max_drifted_bm(nu, r);
  EXPECT_GT(ks_one_sample(x, [nu](double t) { return t <= 0 ? 0.0 : -std::expm1(-2 * nu * t); }).p_value, 0.01);
  EXPECT_THROW(sample_max_drifted_bm(-1.0, r), BoundsError);
}

TEST(Paths, ExactAndEulerAgreeAtOne) {
  const double nu = 0.5;
  std::vector<double> a, b;
  for (int i = 0; i < 1500; ++i) {
    RngStream r1(5, i), r2(6, i);
    a.push_back(sample_conditioned_bm_exact(nu, 1.0, 1.0 / 64, r1).at(1.0));
    b.push_back(sample_conditioned_bm(nu, 1.0, 1e-3, r2).at(1.0));
  }
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.01);
  for (double v : a) EXPECT_LE(v, 0.0);
}

TEST(Oracle, SelfLogAverage) {
  EXPECT_NEAR(self_log_average(1.0), kSelfLogAverage1, 1e-13);
  EXPECT_NEAR(self_log_average(0.25), kSelfLogAverage1 + std::log(4.0), 1e-13);
}

TEST(Oracle, CovarianceFormula) {
  EXPECT_NEAR(gff_covariance(2, 0, 0, 3), -std::log(std::sqrt(13.0)) + std::log(2.0) + std::log(3.0), 1e-14);
  EXPECT_DOUBLE_EQ(gff_covariance(0.1, 0.2, 0.4, -0.3), gff_covariance(0.4, -0.3, 0.1, 0.2));
}

TEST(Oracle, DenseCovarianceReproduction) {
  DenseOracle o(6, 0.2, 0.2, 0.6);
  const int n = 10000;
  const int pairs[10][2] = {{0, 0}, {0, 1}, {0, 35}, {3, 17}, {7, 7}, {10, 11}, {12, 30}, {5, 20}, {21, 22}, {34, 35}};
  std::vector<Eigen::VectorXd> xs;
  for (int i = 0; i < n; ++i) {
    RngStream r(13, i);
    xs.push_back(o.sample(r));
  }
  for (const auto& p : pairs) {
    std::vector<double> prod(n);
    for (int i = 0; i < n; ++i) prod[i] = xs[i](p[0]) * xs[i](p[1]);
    const MeanSE m = mean_stderr(prod);
    EXPECT_LT(std::abs(m.mean - o.covariance(p[0], p[1])), 3.0 * m.stderr_) << p[0] << "," << p[1];
  }
}

TEST(Engine, KernelExpectedMassGolden) {
  KernelSpec k;
  k.gamma = 0.5;
  k.alpha_zero = k.alpha_inf = 1.8;
  k.points = {{{1.0, 0.0}, 1.8}};
  CylinderIntegrator I(k, EngineConfig{});
  EXPECT_NEAR(I.expected_mass(40.0), kKernelMass, 1e-6 * kKernelMass);
}

TEST(Engine, MeanMatchesExpectedMass) {
  KernelSpec k;
  k.gamma = 0.5;
  k.alpha_zero = k.alpha_inf = 1.8;
  k.points = {{{1.0, 0.0}, 1.8}};
  CylinderIntegrator I(k, EngineConfig{});
  std::vector<double> v;
  for (int i = 0; i < 400; ++i) v.push_back(std::exp(I.sample(17, i).log_mass));
  const MeanSE m = mean_stderr(v);
  EXPECT_LT(std::abs(m.mean - kKernelMass), 3.0 * m.stderr_);
  const auto a = I.sample(17, 3), b = I.sample(17, 3);
  EXPECT_EQ(a.log_mass, b.log_mass);
}

TEST(Engine, LocalBallMeanMatchesExpectedMass) {
  LocalBallSampler s(0.8, 1.5, {3.0, 0.0}, LocalBallConfig{}, {0.0, M_LN2});
  for (int mark = 0; mark < 2; ++mark) {
    std::vector<double> v;
    for (int i = 0; i < 3000; ++i) v.push_back(std::exp(s.sample(1, i)[mark]));
    const MeanSE m = mean_stderr(v);
    EXPECT_LT(std::abs(m.mean - s.expected_mass(mark)), 3.0 * m.stderr_) << mark;
  }
}

TEST(Engine, ConfigValidation) {
  EngineConfig c;
  c.n_theta = 8;
  EXPECT_THROW(c.validate(), PreconditionError);
  KernelSpec k;
  k.gamma = 1.0;
  k.alpha_inf = 3.0;  // >= Q
  EXPECT_THROW(k.validate(), PreconditionError);
}
