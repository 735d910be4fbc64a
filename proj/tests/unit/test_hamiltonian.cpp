#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sclab/hamiltonian.hpp"

using namespace sclab;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST(Symbol, FreeAndHarmonicValues) {
  EXPECT_DOUBLE_EQ(eval_symbol_p(catalog::flat_free(1), v1(0.0), v1(2.0)), 2.0);
  EXPECT_DOUBLE_EQ(eval_symbol_p(catalog::harmonic(1), v1(1.0), v1(1.0)), 1.0);
}

TEST(Symbol, LinearMagneticHandValue) {
  // A(x) = x: p = (3 - 2)^2 / 2
  auto m = catalog::linear_magnetic(1, 1.0, 0.0);
  EXPECT_NEAR(eval_symbol_p(m, v1(2.0), v1(3.0)), 0.5, 1e-15);
}

TEST(Symbol, SubprincipalValues) {
  EXPECT_EQ(eval_subprincipal_p1(catalog::flat_free(1), v1(0.3), v1(-2.0)), cplx(0.0));
  auto mag = catalog::linear_magnetic(1, 1.0, 0.0);
  for (double x : {-2.0, 0.0, 1.5}) {
    cplx p1 = eval_subprincipal_p1(mag, v1(x), v1(0.7));
    EXPECT_NEAR(p1.real(), 0.0, 1e-15);
    EXPECT_NEAR(p1.imag(), 0.5, 1e-14);
  }
  // g = 1 + exp(-x^2) is even, so g'(0) = 0
  EXPECT_NEAR(std::abs(eval_subprincipal_p1(catalog::conformal_bump(1, 1.0), v1(0.0), v1(1.0))), 0.0, 1e-15);
}

TEST(Symbol, SubprincipalMatchesFiniteDifference) {
  auto m = catalog::conformal_bump(1, 1.0);
  const double x = 0.6, xi = 1.3, d = 1e-5;
  auto g = [](double y) { return 1.0 + std::exp(-y * y); };
  const double dg = (g(x + d) - g(x - d)) / (2 * d);
  EXPECT_NEAR(eval_subprincipal_p1(m, v1(x), v1(xi)).imag(), -0.5 * dg * xi, 1e-9);
}

TEST(Semiclassical, FreeModelUnchanged) {
  TruncationParams tp{0.25, 1.0};
  auto s = eval_semiclassical_symbols(catalog::flat_free(1), tp, v1(3.0), v1(1.5));
  EXPECT_DOUBLE_EQ(s.p_h, 1.125);
  EXPECT_DOUBLE_EQ(s.p_tilde_h, 1.125);
}

TEST(Semiclassical, TruncationInnerAndOuter) {
  auto m = catalog::monomial_potential(1, 1.0, 2);  // V = x^2
  TruncationParams tp{0.25, 1.0};
  auto inner = eval_semiclassical_symbols(m, tp, v1(1.0), v1(1.0));
  EXPECT_DOUBLE_EQ(inner.p_tilde_h, inner.p_h);
  auto outer = eval_semiclassical_symbols(m, tp, v1(5.0), v1(1.0));
  EXPECT_NEAR(outer.p_tilde_h, 0.5, 1e-15);
  EXPECT_NEAR(outer.p_h, 0.5 + 0.0625 * 25.0, 1e-13);
}

TEST(Semiclassical, InnerAndOuterZonesOnStraddlingGrid) {
  auto m = catalog::subquadratic_power(1, 0.5);
  TruncationParams tp{0.125, 2.0};
  const double r_in = tp.L / (2 * tp.h), r_out = tp.L / tp.h;
  for (double x = -2 * r_out; x <= 2 * r_out; x += 0.37) {
    auto s = eval_semiclassical_symbols(m, tp, v1(x), v1(0.8));
    if (std::abs(x) <= r_in) EXPECT_NEAR(s.p_tilde_h, s.p_h, 1e-14) << x;
    if (std::abs(x) >= r_out) EXPECT_NEAR(s.p_tilde_h, 0.32, 1e-14) << x;
  }
}

TEST(Assumptions, FlatFreeHasZeroConstants) {
  auto r = check_assumption_A(catalog::flat_free(1), 2, 8.0, 33);
  EXPECT_TRUE(r.pass);
  for (const auto& row : r.rows) EXPECT_EQ(row.C_hat, 0.0) << row.field;
}

TEST(Assumptions, SubquadraticPasses) {
  EXPECT_TRUE(check_assumption_A(catalog::subquadratic_power(1, 0.5), 3, 16.0, 65).pass);
}

TEST(Assumptions, QuarticWithMuZeroFails) {
  auto r = check_assumption_A(catalog::monomial_potential(1, 1.0, 4), 2, 16.0, 65);
  EXPECT_FALSE(r.pass);
  bool grew = false;
  for (const auto& row : r.rows)
    if (row.field == "V" && row.C_hat_doubled > 1.1 * row.C_hat) grew = true;
  EXPECT_TRUE(grew);
}

TEST(Assumptions, BFlatMetricQuadraticWeight) {
  std::vector<PhasePoint> samples;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 200; ++i) samples.push_back({v2(n(rng), n(rng)), v2(n(rng), n(rng))});
  auto r = check_assumption_B(catalog::flat_free(2), weight_quadratic(2), 1.0, samples);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.c_fit, 4.0, 1e-10);
  auto c = check_assumption_B(catalog::flat_free(2), weight_constant(2), 1.0, samples);
  EXPECT_FALSE(c.pass);
  EXPECT_NEAR(c.c_fit, 0.0, 1e-14);
}

TEST(Assumptions, BLogOscillatingMetric) {
  std::vector<PhasePoint> samples;
  for (double x = 2.0; x <= 200.0; x *= 1.3)
    for (double xi : {-2.0, -0.5, 0.5, 2.0}) samples.push_back({v1(x), v1(xi)});
  auto r = check_assumption_B(catalog::log_oscillating(1, 0.3, 1.0), weight_log_oscillating(1, 0.3, 1.0), 1.0,
                              samples);
  EXPECT_TRUE(r.pass);
}

TEST(Regions, HandEvaluatedCases) {
  RegionSpec out{RegionKind::Outgoing, 2.0, 0.5, 2.0, 0.5};
  RegionSpec in = out;
  in.kind = RegionKind::Incoming;
  EXPECT_TRUE(classify_region(out, v2(3, 0), v2(1, 0)));
  EXPECT_FALSE(classify_region(in, v2(3, 0), v2(1, 0)));
  RegionSpec q;
  q.kind = RegionKind::QuadraticZone;
  q.epsilon = 1.0;
  EXPECT_FALSE(classify_region(q, v2(0, 0), v2(3, 0)));
}

TEST(Regions, OverlapOnlyWithPositiveSigma) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (double sigma : {0.0, 0.4}) {
    RegionSpec out{RegionKind::Outgoing, 1.0, 0.25, 16.0, sigma};
    RegionSpec in = out;
    in.kind = RegionKind::Incoming;
    int both = 0;
    for (int i = 0; i < 4000; ++i) {
      Vec x = v2(u(rng), u(rng)), xi = v2(u(rng), u(rng));
      if (classify_region(out, x, xi) && classify_region(in, x, xi)) ++both;
    }
    if (sigma == 0.0) EXPECT_EQ(both, 0);
    else EXPECT_GT(both, 0);
  }
}

TEST(Splitting, PartitionAndPlateaus) {
  auto s = build_directional_splitting(RegionSpec{}, 3);
  EXPECT_EQ(s.plus(0.75), 1.0);
  EXPECT_EQ(s.minus(0.75), 0.0);
  EXPECT_EQ(s.plus(-0.75), 0.0);
  EXPECT_GT(s.plus(0.0), 0.0);
  EXPECT_LT(s.plus(0.0), 1.0);
  for (double x = -1.0; x <= 1.0; x += 1.0 / 64) EXPECT_NEAR(s.plus(x) + s.minus(x), 1.0, 1e-15);
}

TEST(Model, MetricSymmetricEllipticDeterministic) {
  auto m = catalog::conformal_bump(2, 0.5);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    Vec x = v2(n(rng), n(rng)), xi = v2(n(rng), n(rng));
    CoeffJet c = coeff_jet(m, x, 0);
    EXPECT_EQ(c.g(0, 1), c.g(1, 0));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Eigen::Matrix2d(c.g));
    EXPECT_GE(es.eigenvalues().minCoeff(), m.ellipticity_c - 1e-14);
    const double p = eval_symbol_p(m, x, xi);
    EXPECT_EQ(p, eval_symbol_p(m, x, xi));
    EXPECT_GE(p - m.V.value(x), m.ellipticity_c * xi.squaredNorm() / 2 - 1e-12);
  }
}

TEST(Model, UnknownNameRejected) {
  EXPECT_THROW(catalog::by_name("nope", 1, {}), DomainError);
  EXPECT_THROW(catalog::log_oscillating(1, 0.9, 2.0), DomainError);
}
