#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "sclab/eikonal_wkb.hpp"

using namespace sclab;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }

std::vector<double> tgrid(double tmax, int nt) {
  std::vector<double> t;
  for (int i = 0; i < nt; ++i) t.push_back(tmax * i / (nt - 1));
  return t;
}
std::vector<double> xi_nodes(const Grid& g, double lo, double hi) {
  std::vector<double> out;
  for (int k = -g.n / 2; k < g.n / 2; ++k) {
    const double xi = k * g.dxi();
    if (std::abs(xi) >= lo && std::abs(xi) <= hi) out.push_back(xi);
  }
  return out;
}
// analytic profile; transport is exact for any initial amplitude
AmplitudeCutoff gauss_chi() {
  return {"gauss", [](double x, double) { return std::exp(-0.5 * (x - 2.0) * (x - 2.0)); }};
}
double gauss_dd(double x) {
  const double u = x - 2.0;
  return (u * u - 1.0) * std::exp(-0.5 * u * u);
}
}  // namespace

TEST(Phase, FreeIsExactAndStartsAtXXi) {
  auto m = catalog::flat_free(1);
  Grid g{1, 128, 16.0};
  PhaseTable T = build_phase(m, 1.0, PhaseGrids::on_grid(g, tgrid(0.2, 5), xi_nodes(g, 0.0, 3.0)));
  for (int mm = 0; mm < T.nt(); ++mm)
    for (int k = 0; k < T.nk(); ++k)
      for (int i = 0; i < T.nx(); ++i) {
        const double t = T.t_grid[mm], x = T.x_grid[i], xi = T.xi_grid[k];
        EXPECT_NEAR(T.psi[T.index(mm, k, i)], x * xi - t * xi * xi / 2, 1e-12 * (1 + std::abs(x * xi)));
      }
  EXPECT_LE(phase_residual(m, T).max_residual, 1e-12);
}

TEST(Phase, HarmonicResidualSecondOrder) {
  auto m = catalog::harmonic(1);
  Grid g{1, 128, 16.0};
  auto r1 = phase_residual(m, build_phase(m, 1.0, PhaseGrids::on_grid(g, tgrid(0.1, 11), xi_nodes(g, 0.0, 4.0))));
  auto r2 = phase_residual(m, build_phase(m, 1.0, PhaseGrids::on_grid(g, tgrid(0.1, 21), xi_nodes(g, 0.0, 4.0))));
  const double ratio = r1.max_residual / r2.max_residual;
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
}

TEST(Phase, OffRegionSamplesExcluded) {
  auto m = catalog::harmonic(1);
  Grid g{1, 64, 8.0};
  PhaseTable T = build_phase(m, 4.0, PhaseGrids::on_grid(g, tgrid(0.1, 11), xi_nodes(g, 0.0, 6.0)));
  int off = 0;
  for (auto f : T.on_region) off += f == 0;
  ASSERT_GT(off, 0);
  const int inner_t = T.nt() - 2;
  EXPECT_EQ(phase_residual(m, T).n_samples, inner_t * int(T.on_region.size() - off));
}

TEST(Phase, GradientIdentities) {
  auto m = catalog::subquadratic_power(1, 0.5);
  PhaseGrids gr;
  gr.t = tgrid(0.1, 3);
  for (double x = -4; x <= 4; x += 1.0) gr.x.push_back(x);
  for (double xi = -2; xi <= 2; xi += 0.5) gr.xi.push_back(xi);
  PhaseTable T = build_phase(m, 1.0, gr);
  auto c = gradient_identity_check(m, T);
  EXPECT_GT(c.n_samples, 0);
  EXPECT_LE(c.max_dxi_error, 1e-6);
  EXPECT_LE(c.max_dx_error, 1e-6);
}

TEST(Phase, EstimateConstantStableUnderDoubling) {
  auto m = catalog::harmonic(1);
  auto grids = [](int nx, int nxi, int nt) {
    PhaseGrids gr;
    gr.t = tgrid(0.1, nt);
    for (int i = 0; i < nx; ++i) gr.x.push_back(-4.0 + 8.0 * i / (nx - 1));
    for (int k = 0; k < nxi; ++k) gr.xi.push_back(-4.0 + 8.0 * k / (nxi - 1));
    return gr;
  };
  auto a = fit_phase_estimate(m, build_phase(m, 1.0, grids(9, 9, 5)));
  auto b = fit_phase_estimate(m, build_phase(m, 1.0, grids(17, 17, 9)));
  EXPECT_GT(a.C_hat, 0.0);
  EXPECT_LE(std::abs(a.C_hat - b.C_hat), 0.1 * std::max(a.C_hat, b.C_hat));
  EXPECT_LT(b.C_second, 10.0);
}

TEST(Phase, HarmonicSmallTimeAtUnitX) {
  auto m = catalog::harmonic(1);
  PhaseGrids gr{{0.0, 0.01, 0.02}, {1.0}, {0.0}, std::nullopt};
  PhaseTable T = build_phase(m, 1.0, gr);
  for (int mm = 0; mm < 3; ++mm) {
    const double t = gr.t[mm];
    // x xi - t p = -t/2; the O(t^2 <x>^2) correction is small
    EXPECT_LE(std::abs(T.psi[T.index(mm, 0, 0)] + 0.5 * t), 2.0 * t * t);
  }
}

TEST(Amplitudes, InitialDataAndSupport) {
  auto m = catalog::harmonic(1);
  Grid g{1, 256, 16.0};
  PhaseTable T = build_phase(m, 1.0, PhaseGrids::on_grid(g, tgrid(0.05, 6), xi_nodes(g, 0.5, 2.0)));
  auto chi = chi_epsilon_cutoff(1.0);
  AmplitudeSet A = build_amplitudes(m, T, chi, 3);
  for (int k = 0; k < T.nk(); ++k)
    for (int i = 0; i < T.nx(); ++i) {
      const size_t idx = T.index(0, k, i);
      EXPECT_EQ(A.b[0][idx], cplx(chi.value(T.x_grid[i], T.xi_grid[k])));
      EXPECT_EQ(A.b[1][idx], cplx(0.0));
      EXPECT_EQ(A.b[2][idx], cplx(0.0));
    }
  for (size_t idx = 0; idx < A.support.size(); ++idx)
    if (!A.support[idx])
      for (int j = 0; j < 3; ++j) EXPECT_EQ(A.b[j][idx], cplx(0.0));
  EXPECT_THROW(build_amplitudes(m, T, chi, 4), DomainError);
}

TEST(Amplitudes, FreeClosedForms) {
  auto m = catalog::flat_free(1);
  Grid g{1, 512, 16.0};
  PhaseTable T = build_phase(m, 1.0, PhaseGrids::on_grid(g, tgrid(0.1, 11), xi_nodes(g, 0.75, 2.0)));
  AmplitudeSet A = build_amplitudes(m, T, gauss_chi(), 2);
  double e0 = 0, e1 = 0;
  for (int mm = 0; mm < T.nt(); ++mm)
    for (int k = 0; k < T.nk(); ++k)
      for (int i = 0; i < T.nx(); ++i) {
        const double t = T.t_grid[mm], y = T.x_grid[i] - t * T.xi_grid[k];
        if (std::abs(T.x_grid[i]) > 10.0) continue;
        const size_t idx = T.index(mm, k, i);
        e0 = std::max(e0, std::abs(A.b[0][idx] - std::exp(-0.5 * (y - 2) * (y - 2))));
        e1 = std::max(e1, std::abs(A.b[1][idx] - cplx(0.0, 0.5 * t * gauss_dd(y))));
      }
  EXPECT_LE(e0, 1e-8);
  EXPECT_LE(e1, 1e-8);
  auto r = transport_residual(m, T, A);
  EXPECT_LE(r[0], 1e-8);
  EXPECT_LE(r[1], 1e-8);
}

TEST(Amplitudes, HarmonicTransportResidualSecondOrder) {
  auto m = catalog::harmonic(1);
  Grid g{1, 512, 16.0};
  auto res = [&](int nt) {
    PhaseTable T = build_phase(m, 1.0, PhaseGrids::on_grid(g, tgrid(0.1, nt), xi_nodes(g, 0.75, 2.0)));
    return transport_residual(m, T, build_amplitudes(m, T, gauss_chi(), 2));
  };
  auto a = res(11), b = res(21);
  EXPECT_GE(a[0] / b[0], 3.5);
  EXPECT_GE(a[1] / b[1], 3.5);
}

TEST(Amplitudes, CharacteristicLeavingGridIsReported) {
  auto m = catalog::flat_free(1);
  Grid g{1, 64, 4.0};
  PhaseTable T = build_phase(m, 1.0, PhaseGrids::on_grid(g, tgrid(1.0, 5), xi_nodes(g, 6.0, 8.0)));
  EXPECT_THROW(build_amplitudes(m, T, chi_epsilon_cutoff(1.0), 2), ResolutionError);
}

TEST(Serialization, RoundTrip) {
  auto m = catalog::harmonic(1);
  Grid g{1, 64, 8.0};
  PhaseTable T = build_phase(m, 1.0, PhaseGrids::on_grid(g, tgrid(0.05, 3), xi_nodes(g, 0.0, 2.0)));
  AmplitudeSet A = build_amplitudes(m, T, chi_epsilon_cutoff(1.0), 2);
  const std::string path = testing::TempDir() + "sclab_phase_roundtrip.scl";
  save_phase_table(path, T, &A);
  LoadedTables L = load_phase_table(path);
  std::remove(path.c_str());
  EXPECT_EQ(L.table.model_id, T.model_id);
  EXPECT_EQ(L.table.psi, T.psi);
  EXPECT_EQ(L.table.dpsi_dx, T.dpsi_dx);
  EXPECT_EQ(L.table.Y, T.Y);
  ASSERT_TRUE(L.amps.has_value());
  EXPECT_EQ(L.amps->N, 2);
  EXPECT_EQ(L.amps->b[1], A.b[1]);
  EXPECT_FALSE(L.table.has_characteristics);
}

TEST(Eikonal, FreeIsLinear) {
  auto s = solve_eikonal_1d(catalog::flat_free(1), {0.25, 2.0}, 1.5, -10.0, 10.0, EikonalDirection::outgoing);
  for (double x = -10; x <= 10; x += 0.7) EXPECT_NEAR(s.S(x), 1.5 * x, 1e-12 * (1 + std::abs(x)));
}

TEST(Eikonal, ResidualAndDecayBound) {
  auto m = catalog::subquadratic_power(1, 0.5);
  TruncationParams tp{0.125, 2.0};
  for (auto dir : {EikonalDirection::outgoing, EikonalDirection::incoming}) {
    auto s = solve_eikonal_1d(m, tp, 1.0, -30.0, 30.0, dir);
    for (double x = -30; x <= 30; x += 0.25) {
      const double r = eval_semiclassical_symbols(m, tp, v1(x), v1(s.dS(x))).p_tilde_h - 0.5;
      EXPECT_LE(std::abs(r), 1e-12);
    }
  }
  // |S - x xi| <= C <x>^{1 - mu}: fitted C stable when the box doubles
  auto fit = [&](double R) {
    auto s = solve_eikonal_1d(m, tp, 1.0, -R, R, EikonalDirection::outgoing);
    double C = 0;
    for (double x = -R; x <= R; x += 0.25) C = std::max(C, std::abs(s.S(x) - x) / std::pow(1 + x * x, 0.25));
    return C;
  };
  const double a = fit(30.0), b = fit(60.0);
  EXPECT_GT(a, 0.0);
  EXPECT_LE(std::abs(a - b), 0.1 * std::max(a, b));
}

TEST(Eikonal, TurningPointRejected) {
  auto m = catalog::harmonic(1);
  EXPECT_THROW(solve_eikonal_1d(m, {1.0, 8.0}, 0.5, -8.0, 8.0, EikonalDirection::outgoing), DomainError);
}
