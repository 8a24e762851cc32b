#include <cmath>

#include <gtest/gtest.h>

#include "liouville/dozz.hpp"
#include "liouville/errors.hpp"
#include "liouville/estimators.hpp"

using namespace liouville;

namespace {

LiouvilleParams P(double g, double mu = 1.0) {
  LiouvilleParams p;
  p.gamma = g;
  p.mu = mu;
  return p;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

// mpmath goldens (tests/oracle/dozz_oracle.py)
constexpr double kCStar = 0.99802728466027562465;
constexpr double kC08 = 0.0018405939110875612291;
constexpr double kR19 = 110.93649617021069107, kRbar19 = 19.057492668733915393;
constexpr double kR21 = -37.194415574358182502, kRbar21 = 8.1018692658052121801;
constexpr double kR22 = -11.277998405656559935, kRbar22 = 5.0843945997459679968;

}  // namespace

TEST(Params, DerivedQuantities) {
  EXPECT_DOUBLE_EQ(P(1.0).Q(), 2.5);
  EXPECT_THROW(P(2.5).validate(), DomainError);
  EXPECT_THROW(P(1.0, -1.0).validate(), DomainError);
  // 4/gamma^2 integer: dual cosmological constant is infinite
  EXPECT_TRUE(std::isinf(P(1.0).mu_dual()));
  EXPECT_TRUE(std::isfinite(P(0.7).mu_dual()));
}

TEST(Weights, SeibergClassification) {
  const auto p = P(1.0);
  EXPECT_TRUE((WeightTriple{1.8, 1.8, 1.8}).seiberg_ok(p));
  EXPECT_FALSE((WeightTriple{1.5, 1.5, 1.5}).seiberg_ok(p));
  EXPECT_FALSE((WeightTriple{2.6, 1.5, 1.5}).seiberg_ok(p));
  EXPECT_TRUE((WeightTriple{0.8, 2.1, 2.1}).extended_ok(p));
  EXPECT_NEAR((WeightTriple{1.8, 1.8, 1.8}).s(p).real(), 0.4, 1e-15);
}

TEST(Dozz, Goldens) {
  const auto p1 = P(1.0);
  EXPECT_NEAR(c_dozz({1.8, 1.8, 1.8}, p1, p1.upsilon_config()).value.real(), kCStar, 1e-11);
  const auto p8 = P(0.8);
  EXPECT_LT(rel(c_dozz({2.4, 2.4, 2.4}, p8, p8.upsilon_config()).value, kC08), 1e-10);
}

TEST(Dozz, PermutationSymmetry) {
  const auto p = P(1.0, 2.5);
  const auto c = p.upsilon_config();
  const cplx a = c_dozz({1.1, 1.7, 2.0}, p, c).value;
  EXPECT_LT(rel(c_dozz({1.7, 2.0, 1.1}, p, c).value, a), 1e-12);
  EXPECT_LT(rel(c_dozz({2.0, 1.1, 1.7}, p, c).value, a), 1e-12);
}

TEST(Dozz, MuScaling) {
  // C scales as mu^{-s}
  const WeightTriple w{1.8, 1.7, 2.1};
  const auto a = P(1.0, 1.0), b = P(1.0, 2.5);
  const double s = w.s(a).real();
  EXPECT_LT(rel(c_dozz(w, b, b.upsilon_config()).value, std::pow(2.5, -s) * c_dozz(w, a, a.upsilon_config()).value), 1e-12);
}

TEST(Reflection, Goldens) {
  const auto p = P(1.0);
  EXPECT_LT(rel(r_dozz(1.9, p), kR19), 1e-12);
  EXPECT_LT(rel(r_dozz(2.1, p), kR21), 1e-12);
  EXPECT_LT(rel(r_dozz(2.2, p), kR22), 1e-12);
  EXPECT_LT(rel(r_bar_from_r(1.9, p), kRbar19), 1e-12);
  EXPECT_LT(rel(r_bar_from_r(2.1, p), kRbar21), 1e-12);
  EXPECT_LT(rel(r_bar_from_r(2.2, p), kRbar22), 1e-12);
  EXPECT_LT(rel(r_from_r_bar(2.1, kRbar21, p), kR21), 1e-12);
}

TEST(Reflection, ValueAtQIsMinusOne) {
  for (double g : {0.7, 1.0, 1.4}) EXPECT_LT(std::abs(r_dozz(P(g).Q(), P(g)) + 1.0), 1e-12);
}

TEST(Reflection, InversionProperty) {
  for (double g : {0.7, 1.0, 1.4})
    for (double a : {0.9, 1.6, 2.05}) {
      const auto p = P(g, 2.5);
      EXPECT_LT(std::abs(r_dozz(a, p) * r_dozz(2.0 * p.Q() - a, p) - 1.0), 1e-10) << g << " " << a;
    }
}

TEST(Reflection, BarSymmetricLimitAtPole) {
  // p = 2(Q - alpha)/gamma = 1 at alpha = 2, gamma = 1: Gamma(-p) pole, the limit is 4 pi
  EXPECT_THROW(r_bar_from_r(2.0, P(1.0)), PoleError);
  EXPECT_NEAR(r_bar_dozz(2.0, P(1.0)), 4.0 * M_PI, 1e-6);
}

TEST(Reflection, FromStructureConstant) {
  const auto p = P(1.0);
  for (double a : {1.9, 2.1})
    EXPECT_LT(rel(r_bar_from_structure_constant(a, p, p.upsilon_config()), r_bar_from_r(a, p)), 1e-8) << a;
}

TEST(Reflection, BRatio) {
  // B(alpha) = R(alpha) / R(alpha + gamma/2)
  const auto p = P(1.0);
  EXPECT_LT(rel(b_coefficient(1.3, p), r_dozz(1.3, p) / r_dozz(1.8, p)), 1e-12);
}

TEST(ShiftEquations, GammaHalfStep) {
  // C(a1 + g/2, a2, a3) = F C(a1 - g/2, a2, a3)
  for (double g : {0.7, 1.0}) {
    const auto p = P(g, 2.5);
    const auto c = p.upsilon_config();
    const WeightTriple w{1.4, 1.3, 1.6};
    const cplx lhs = c_dozz({w.a1 + g / 2.0, w.a2, w.a3}, p, c).value;
    const cplx rhs = shift_factor_C(false, w, p) * c_dozz({w.a1 - g / 2.0, w.a2, w.a3}, p, c).value;
    EXPECT_LT(relative_residual(lhs, rhs), 1e-9) << g;
  }
}

TEST(ShiftEquations, DualStep) {
  const auto p = P(1.4);
  const auto c = p.upsilon_config();
  const WeightTriple w{1.2, 0.9, 1.1};
  const double d = 2.0 / p.gamma;
  const cplx lhs = c_dozz({w.a1 + d, w.a2, w.a3}, p, c).value;
  const cplx rhs = shift_factor_C(true, w, p) * c_dozz({w.a1 - d, w.a2, w.a3}, p, c).value;
  EXPECT_LT(relative_residual(lhs, rhs), 1e-9);
}

TEST(CGamma, BothSidesAgree) {
  for (double g : {0.7, 1.0, 1.4}) {
    const auto s = c_gamma_relation(P(g, 2.5));
    EXPECT_LT(relative_residual(s.lhs, s.rhs), 1e-10) << g;
  }
}

TEST(FourPoint, HypParamsGolden) {
  const HypParams h = bpz_params(-0.5, {1.8, 1.9, 1.9}, P(1.0));
  EXPECT_NEAR(h.a.real(), 0.025, 1e-14);
  EXPECT_NEAR(h.b.real(), 0.325, 1e-14);
  EXPECT_NEAR(h.c.real(), 0.65, 1e-14);
}

TEST(FourPoint, RhsGoldens) {
  const auto p = P(1.0);
  const auto c = p.upsilon_config();
  const FourPointRhs a = four_point_rhs(0.3, {1.8, 1.9, 1.9}, -0.5, p, c);
  EXPECT_FALSE(a.reflection);
  EXPECT_NEAR(a.value.value.real(), 12.9555, 1e-3);
  const FourPointRhs b = four_point_rhs(0.3, {2.2, 1.9, 1.9}, -0.5, p, c);
  EXPECT_TRUE(b.reflection);
  EXPECT_NEAR(b.value.value.real(), 0.430257, 1e-5);
}

TEST(FourPoint, SmallZLimit) {
  // T(z) -> C(a1 - g/2, a2, a3) as z -> 0 (non-reflection)
  const auto p = P(1.0);
  const auto c = p.upsilon_config();
  const WeightTriple w{1.8, 1.9, 1.9};
  const double t = four_point_rhs(1e-6, w, -0.5, p, c).value.value.real();
  const double c0 = c_dozz({1.3, 1.9, 1.9}, p, c).value.real();
  EXPECT_LT(std::abs(t / c0 - 1.0), 1e-3);
}

TEST(IdentitySuite, AllPassSmall) {
  for (double g : {0.7, 1.0, 1.4})
    for (double mu : {1.0, 2.5}) {
      const auto reps = identity_suite(P(g, mu), 5, 7, 1e-8);
      ASSERT_FALSE(reps.empty());
      for (const auto& r : reps) EXPECT_TRUE(r.pass) << r.name << " " << r.point << " residual " << r.residual;
    }
}

TEST(IdentitySuite, SpecfunPasses) {
  for (double g : {0.7, 1.0, 1.4})
    for (const auto& r : specfun_suite(g, 5, 7, 1e-8)) EXPECT_TRUE(r.pass) << r.name << " " << r.point;
}

TEST(IdentitySuite, ImpossibleToleranceFails) {
  const auto reps = identity_suite(P(1.0), 3, 7, 1e-16);
  bool any_fail = false;
  for (const auto& r : reps) any_fail = any_fail || !r.pass;
  EXPECT_TRUE(any_fail);
}
