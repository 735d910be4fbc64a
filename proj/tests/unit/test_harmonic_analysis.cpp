#include <gtest/gtest.h>

#include <cmath>

#include "sclab/hamiltonian.hpp"
#include "sclab/harmonic_analysis.hpp"

using namespace sclab;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST(PsiEpsilon, PlateauSupportAndComplement) {
  for (double eps : {0.5, 1.0, 3.0}) {
    auto P = build_psi_epsilon(eps);
    for (double x = -6; x <= 6; x += 0.37)
      for (double xi = -9; xi <= 9; xi += 0.41) {
        const double jx = std::sqrt(1 + x * x), a = std::abs(xi);
        const double psi = P.psi(v1(x), v1(xi));
        if (jx < eps * a / 2) EXPECT_EQ(psi, 1.0);
        if (jx >= eps * a) EXPECT_EQ(psi, 0.0);
        EXPECT_EQ(psi + P.chi(v1(x), v1(xi)), 1.0);
      }
    EXPECT_EQ(P.psi(v1(0.0), v1(0.0)), 0.0);
  }
  EXPECT_THROW(build_psi_epsilon(0.0), DomainError);
}

TEST(Partition, FourAdicIdentity) {
  for (double l : {0.0, 0.3, 1.0, 2.7, 17.0, 1000.0, 123456.0}) {
    double s = SpectralPartition::f0(l);
    for (int j = 0; j < 40; ++j) s += SpectralPartition::f(std::ldexp(l, -2 * j));
    EXPECT_NEAR(s, 1.0, 1e-12) << l;
  }
}

TEST(Partition, SupportsAndEnvelope) {
  for (double l = 0.0; l <= 10.0; l += 1.0 / 128) {
    const double f = SpectralPartition::f(l);
    if (l < 0.25 || l > 4.0) EXPECT_EQ(f, 0.0) << l;
    EXPECT_EQ(SpectralPartition::F(l) * f, f) << l;
  }
}

TEST(LittlewoodPaley, ReconstructionOnGrid) {
  for (int d : {1, 2}) {
    Grid g{d, d == 1 ? 256 : 64, 8.0};
    auto lp = build_lp(g);
    for (size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(lp.sum(g.freq(k)), 1.0, 1e-12);
    GridState u = gaussian_packet(g, Vec::Constant(d, 0.5), Vec::Constant(d, 2.0), 0.7);
    GridState s(g);
    for (int j = 0; j <= lp.j_max; ++j) s += lp_apply(lp, j, u);
    EXPECT_LE((s - u).norm(), 1e-12);
  }
}

TEST(LittlewoodPaley, BandLimitedInputHitsOnlyNeighbours) {
  Grid g{1, 512, 32.0};
  GridState u = inverse_fourier(g, std::vector<cplx>(g.size(), 0.0));
  auto uh = fourier(u);
  for (size_t k = 0; k < g.size(); ++k) {
    const double a = std::abs(g.xi(int(k)));
    if (a > 3.0 && a < 3.5) uh[k] = std::sin(5.0 * a);
  }
  u = inverse_fourier(g, uh);
  auto lp = build_lp(g);
  for (int j = 0; j <= lp.j_max; ++j) {
    const double n = lp_apply(lp, j, u).norm();
    if (j < 1 || j > 3) EXPECT_LE(n, 1e-14 * u.norm()) << j;
  }
  EXPECT_GT(lp_apply(lp, 2, u).norm(), 0.0);
}

TEST(LittlewoodPaley, AlmostOrthogonality) {
  Grid g{1, 1024, 32.0};
  auto lp = build_lp(g);
  for (double xi0 : {0.0, 1.0, 5.0, 20.0})
    for (double sigma : {0.3, 1.0, 4.0}) {
      GridState u = gaussian_packet(g, v1(1.0), v1(xi0), sigma);
      double sq = 0;
      for (int j = 0; j <= lp.j_max; ++j) sq += std::pow(lp_apply(lp, j, u).norm(), 2);
      const double r = sq / std::pow(u.norm(), 2);
      EXPECT_GE(r, 1.0 / 3);
      EXPECT_LE(r, 3.0);
    }
}

TEST(Admissible, HandPairs) {
  auto one = enumerate_admissible(1, {Rational::make(4, 1), Rational::make(2, 1), Rational::inf()});
  ASSERT_EQ(one.size(), 3u);
  EXPECT_EQ(one[0].p, Rational::make(8, 1));
  EXPECT_EQ(one[1].p, Rational::inf());
  EXPECT_EQ(one[2].p, Rational::make(4, 1));
  EXPECT_FALSE(one[2].theorem_scope);
  auto two = enumerate_admissible(2, {Rational::make(2, 1), Rational::inf()});
  ASSERT_EQ(two.size(), 1u);
  EXPECT_TRUE(two[0].p.is_inf());
  auto three = enumerate_admissible(3, {Rational::make(6, 1)});
  ASSERT_EQ(three.size(), 1u);
  EXPECT_EQ(three[0].p, Rational::make(2, 1));
  EXPECT_TRUE(three[0].endpoint);
}

TEST(Admissible, ScalingIdentityExact) {
  std::vector<Rational> qs;
  for (int n = 2; n <= 40; ++n)
    for (int m = 1; m <= 7; ++m) qs.push_back(Rational::make(n, m));
  qs.push_back(Rational::inf());
  for (int d = 1; d <= 4; ++d)
    for (const auto& a : enumerate_admissible(d, qs)) {
      EXPECT_TRUE(scaling_identity_holds(a));
      EXPECT_TRUE(a.p.is_inf() || a.p.value() >= 2.0);
    }
}

TEST(PsiEpsilon, EllipticOnSupport) {
  for (const auto& m : {catalog::harmonic(1), catalog::subquadratic_power(1, 0.5), catalog::conformal_bump(1, 1.0)}) {
    auto P = build_psi_epsilon(0.25);
    double lo = 1e300;
    for (double x = -4; x <= 4; x += 0.1)
      for (double xi = -40; xi <= 40; xi += 0.5)
        if (P.psi(v1(x), v1(xi)) > 0) lo = std::min(lo, eval_symbol_p(m, v1(x), v1(xi)) / (xi * xi));
    EXPECT_GT(lo, 0.0) << m.id;
  }
  auto P = build_psi_epsilon(0.5);
  EXPECT_GT(P.psi(v2(0.0, 0.0), v2(6.0, 0.0)), 0.0);
}
