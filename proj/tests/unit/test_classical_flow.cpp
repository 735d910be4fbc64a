#include <gtest/gtest.h>

#include <cmath>

#include "sclab/classical_flow.hpp"

using namespace sclab;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
FlowResult flow(const SymbolModel& m, Vec x, Vec xi, double t, double tol = 1e-10) {
  return integrate_flow(m, SymbolChoice::p, std::nullopt, {x, xi}, {t}, tol);
}
}  // namespace

TEST(Flow, FreeStraightLine) {
  auto r = flow(catalog::flat_free(1), v1(0.0), v1(1.0), 2.0);
  EXPECT_NEAR(r.X[0][0], 2.0, 1e-12);
  EXPECT_NEAR(r.Xi[0][0], 1.0, 1e-14);
}

TEST(Flow, HarmonicQuarterPeriod) {
  auto r = flow(catalog::harmonic(1), v1(1.0), v1(0.0), M_PI / 2);
  EXPECT_NEAR(r.X[0][0], 0.0, 1e-8);
  EXPECT_NEAR(r.Xi[0][0], -1.0, 1e-8);
}

TEST(Flow, HarmonicClosedFormOnSamples) {
  auto m = catalog::harmonic(1);
  std::vector<double> ts;
  for (int i = 1; i <= 20; ++i) ts.push_back(-2.0 + 0.2 * i);
  ts.erase(std::remove(ts.begin(), ts.end(), 0.0), ts.end());
  for (double x : {-1.5, 0.5, 2.0})
    for (double xi : {-1.0, 0.3}) {
      auto r = integrate_flow(m, SymbolChoice::p, std::nullopt, {v1(x), v1(xi)}, ts, 1e-10);
      for (size_t k = 0; k < ts.size(); ++k) {
        const double t = ts[k];
        EXPECT_NEAR(r.X[k][0], x * std::cos(t) + xi * std::sin(t), 1e-8);
        EXPECT_NEAR(r.Xi[k][0], -x * std::sin(t) + xi * std::cos(t), 1e-8);
      }
    }
}

TEST(Flow, ConstantVectorPotential) {
  auto r = flow(catalog::constant_magnetic(1, 1.0), v1(0.0), v1(2.0), 1.0);
  EXPECT_NEAR(r.X[0][0], 1.0, 1e-12);
  EXPECT_NEAR(r.Xi[0][0], 2.0, 1e-14);
}

TEST(Flow, EnergyDriftWithinHundredTol) {
  const double tol = 1e-10;
  for (const auto& m : {catalog::harmonic(1), catalog::subquadratic_power(1, 0.5), catalog::conformal_bump(2, 1.0),
                        catalog::linear_magnetic(2, 1.0, 0.5), catalog::log_oscillating(2, 0.3, 1.0)}) {
    Vec x = Vec::Constant(m.dim, 0.7), xi = Vec::Constant(m.dim, -1.1);
    for (double t : {-2.0, 2.0}) EXPECT_LE(flow(m, x, xi, t, tol).energy_drift, 100 * tol) << m.id;
  }
}

TEST(Flow, GroupLaw) {
  const double tol = 1e-11;
  auto m = catalog::conformal_bump(2, 1.0);
  Vec x = v2(0.3, -0.8), xi = v2(1.0, 0.4);
  auto a = flow(m, x, xi, 0.7, tol);
  auto b = flow(m, a.X[0], a.Xi[0], 0.5, tol);
  auto c = flow(m, x, xi, 1.2, tol);
  EXPECT_LE((b.X[0] - c.X[0]).norm(), 10 * tol);
  EXPECT_LE((b.Xi[0] - c.Xi[0]).norm(), 10 * tol);
}

TEST(Jacobian, FreeAndHarmonicClosedForms) {
  auto f = flow_jacobian(catalog::flat_free(1), SymbolChoice::p, std::nullopt, {v1(0.4), v1(1.3)}, {0.8}, 1e-10);
  PhaseMat Jf(2, 2);
  Jf << 1, 0.8, 0, 1;
  EXPECT_LE((f.jac[0] - Jf).norm(), 1e-12);
  auto h = flow_jacobian(catalog::harmonic(1), SymbolChoice::p, std::nullopt, {v1(0.4), v1(1.3)}, {M_PI / 2}, 1e-11);
  PhaseMat Jh(2, 2);
  Jh << 0, 1, -1, 0;
  EXPECT_LE((h.jac[0] - Jh).norm(), 1e-8);
}

TEST(Jacobian, IdentityAtZeroAndPositiveDeterminant) {
  auto m = catalog::conformal_bump(2, 1.0);
  auto r = flow_jacobian(m, SymbolChoice::p, std::nullopt, {v2(0.2, 0.1), v2(1.0, -0.5)}, {1e-12, 0.5, 1.0}, 1e-10);
  EXPECT_LE((r.jac[0] - PhaseMat::Identity(4, 4)).norm(), 1e-9);
  for (const auto& J : r.jac) EXPECT_GT(J.determinant(), 0.0);
}

TEST(Jacobian, FiniteDifferenceOrder) {
  auto m = catalog::subquadratic_power(1, 0.5);
  const double t = 1.0, x = 0.7, xi = -0.4;
  auto J = flow_jacobian(m, SymbolChoice::p, std::nullopt, {v1(x), v1(xi)}, {t}, 1e-13).jac[0];
  auto fd = [&](double d) {
    auto p = flow(m, v1(x + d), v1(xi), t, 1e-13), q = flow(m, v1(x), v1(xi), t, 1e-13);
    return std::abs((p.X[0][0] - q.X[0][0]) / d - J(0, 0));
  };
  const double e1 = fd(1e-3), e2 = fd(5e-4);
  EXPECT_GE(std::log2(e1 / e2), 0.9);  // one-sided differences are first order
  auto cd = [&](double d) {
    auto p = flow(m, v1(x + d), v1(xi), t, 1e-13), q = flow(m, v1(x - d), v1(xi), t, 1e-13);
    return std::abs((p.X[0][0] - q.X[0][0]) / (2 * d) - J(0, 0));
  };
  EXPECT_GE(std::log2(cd(4e-2) / cd(2e-2)), 1.8);
}

TEST(Inverse, FreeHarmonicAndTimeZero) {
  auto free = catalog::flat_free(1);
  EXPECT_NEAR(invert_position_map(free, 0.5, v1(2.0), v1(3.0)).y[0], 0.5, 1e-12);
  auto h = catalog::harmonic(1);
  EXPECT_NEAR(invert_position_map(h, 0.1, v1(1.0), v1(0.0)).y[0], 1.0 / std::cos(0.1), 1e-10);
  EXPECT_NEAR(invert_position_map(h, 0.0, v1(1.7), v1(2.0)).y[0], 1.7, 1e-15);
}

TEST(Inverse, RoundTripOnQuadraticZone) {
  auto m = catalog::subquadratic_power(1, 0.5);
  for (double x = -6; x <= 6; x += 0.75)
    for (double xi = -2; xi <= 2; xi += 0.5) {
      if (!in_quadratic_zone(1.0, v1(x), v1(xi))) continue;
      auto r = invert_position_map(m, 0.2, v1(x), v1(xi));
      auto f = flow(m, r.y, v1(xi), 0.2, 1e-12);
      EXPECT_LE(std::abs(f.X[0][0] - x), 1e-10 * std::sqrt(1 + x * x));
    }
}

TEST(Nontrapping, FlatAndOneDimensional) {
  EXPECT_EQ(nontrapping_scan(catalog::flat_free(2), 0.5, {}, 40.0, 6.0).verdict, TrapVerdict::escaped_all);
  EXPECT_EQ(nontrapping_scan(catalog::conformal_bump(1, 3.0), 0.5, {}, 60.0, 6.0).verdict, TrapVerdict::escaped_all);
}

TEST(Nontrapping, WellTrapsCircularOrbits) {
  auto r = nontrapping_scan(catalog::conformal_well(2, 20.0), 0.5, {}, 60.0, 6.0);
  EXPECT_EQ(r.verdict, TrapVerdict::trapped_some);
}

TEST(FlowBounds, FreeConstantAndStability) {
  auto t = verify_short_time_flow_bounds(catalog::flat_free(1), 1.0, 0.1, {});
  EXPECT_TRUE(t.pass);
  for (const auto& r : t.rows)
    if (r.quantity == "X-x" && r.order == 0) EXPECT_LE(r.C_hat, 2.0 + 1e-9);
  auto h = verify_short_time_flow_bounds(catalog::harmonic(1), 1.0, 0.1, {});
  EXPECT_TRUE(h.pass);
}
