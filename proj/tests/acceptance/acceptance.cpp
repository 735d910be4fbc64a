// Runs the ten acceptance criteria and prints one PASS/FAIL line per criterion.
// Usage: sclab_acceptance [criterion numbers...]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sclab/experiments.hpp"

#ifndef SCLAB_SCENARIO_DIR
#define SCLAB_SCENARIO_DIR "scenarios"
#endif

using namespace sclab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", v);
  return b;
}

Vec v1(double a) { return Vec::Constant(1, a); }

std::vector<double> tgrid(double tmax, int nt) {
  std::vector<double> t;
  for (int i = 0; i < nt; ++i) t.push_back(tmax * i / (nt - 1));
  return t;
}

std::vector<double> xi_nodes(const Grid& g, double r) {
  std::vector<double> out;
  for (int k = -g.n / 2; k < g.n / 2; ++k)
    if (std::abs(k * g.dxi()) <= r) out.push_back(k * g.dxi());
  return out;
}

Scenario scenario(const std::string& name) { return load_scenario(std::string(SCLAB_SCENARIO_DIR) + "/" + name + ".toml"); }

// 1. sup t^{1/2}|K| for the free flow with chi = 1 on |xi| <= 8; the taper out to 32
// keeps edge ripple below the tolerance at t = 0.1
Outcome free_dispersive() {
  auto m = catalog::flat_free(1);
  PhaseGrids gr;
  gr.t = {0.0};
  for (int i = 1; i <= 10; ++i) gr.t.push_back(0.1 * i);
  gr.x = {-2.0, 0.0, 1.0};
  for (double xi = -40.0; xi <= 40.0 + 1e-12; xi += 0.02) gr.xi.push_back(xi);
  // eps = 1/16 keeps the whole cutoff inside the amplitude support <x> > eps |xi| / 4
  PhaseTable T = build_phase(m, 1.0 / 16, gr, {1e-12, 1.0, false});
  AmplitudeSet A = build_amplitudes(m, T, frequency_cutoff(8.0, 32.0), 1);
  std::vector<int> ti, xi;
  for (int q = 1; q < T.nt(); ++q) ti.push_back(q);
  for (int i = 0; i < T.nx(); ++i) xi.push_back(i);
  auto ys = [](double t, double x) {
    std::vector<double> y;
    for (double v : {-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0}) y.push_back(x + v * t);
    return y;
  };
  auto r = dispersive_constant(T, A, ti, xi, ys);
  return {r.sup >= 0.395 && r.sup <= 0.403,
          "sup=" + std::to_string(r.sup) + " in [0.395, 0.403] (free value 0.398942), samples=" +
              std::to_string(r.samples.size())};
}

// 2. Hamilton-Jacobi machinery
Outcome hj_machinery() {
  std::ostringstream os;
  bool ok = true;
  Grid g{1, 128, 16.0};
  auto free = catalog::flat_free(1);
  const double rf = phase_residual(free, build_phase(free, 1.0, PhaseGrids::on_grid(g, tgrid(0.2, 5), xi_nodes(g, 3.0)))).max_residual;
  ok = ok && rf <= 1e-10;
  os << "free residual=" << sci(rf);

  auto harm = catalog::harmonic(1);
  std::vector<double> res;
  for (int nt : {11, 21, 41})
    res.push_back(phase_residual(harm, build_phase(harm, 1.0, PhaseGrids::on_grid(g, tgrid(0.1, nt), xi_nodes(g, 4.0)))).max_residual);
  const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
  ok = ok && o1 >= 1.8 && o2 >= 1.8;
  os << "; harmonic orders=" << o1 << "," << o2;

  double grad = 0.0;
  for (const auto& m : {harm, catalog::subquadratic_power(1, 0.5)}) {
    PhaseGrids gr;
    gr.t = tgrid(0.1, 3);
    for (double x = -4; x <= 4; x += 1.0) gr.x.push_back(x);
    for (double k = -2; k <= 2; k += 0.5) gr.xi.push_back(k);
    auto c = gradient_identity_check(m, build_phase(m, 1.0, gr));
    grad = std::max({grad, c.max_dxi_error, c.max_dx_error});
  }
  ok = ok && grad <= 1e-6;
  os << "; gradient err=" << sci(grad);

  auto grids = [](int nx, int nk, int nt) {
    PhaseGrids gr;
    gr.t = tgrid(0.1, nt);
    for (int i = 0; i < nx; ++i) gr.x.push_back(-4.0 + 8.0 * i / (nx - 1));
    for (int k = 0; k < nk; ++k) gr.xi.push_back(-4.0 + 8.0 * k / (nk - 1));
    return gr;
  };
  const double c1 = fit_phase_estimate(harm, build_phase(harm, 1.0, grids(9, 9, 5))).C_hat;
  const double c2 = fit_phase_estimate(harm, build_phase(harm, 1.0, grids(17, 17, 9))).C_hat;
  const double drift = std::abs(c1 - c2) / std::max(c1, c2);
  ok = ok && c1 > 0.0 && drift <= 0.1;
  os << "; C_hat=" << c1 << "->" << c2 << " (" << 100 * drift << "% <= 10%)";
  return {ok, os.str()};
}

// 3. WKB parametrix against the eig oracle
Outcome wkb_vs_oracle() {
  Grid g{1, 512, 16.0};
  auto m = catalog::harmonic(1);
  const double eps = 1.0;
  const auto ts = tgrid(0.1, 21);
  PhaseTable T = build_phase(m, eps, PhaseGrids::on_grid(g, ts, xi_nodes(g, 12.0)));
  AmplitudeSet A = build_amplitudes(m, T, chi_epsilon_cutoff(eps), 2);
  GridState u = gaussian_packet(g, v1(4.0), v1(2.0), 1.0);
  // J(Psi, b) at t = 0 is Op(chi), so the oracle propagates that
  EigenPropagator P(eigen_pairs(build_discrete_hamiltonian(m, g, Discretization::spectral_flat)), apply_fio(T, A, 0.0, u));
  std::vector<double> tt, g1, g2;
  double at1 = 0, at2 = 0;
  for (size_t q = 1; q < ts.size(); ++q) {
    const GridState ref = P.at(ts[q]);
    const double e1 = (apply_fio(T, A, ts[q], u, 1) - ref).norm() / u.norm();
    const double e2 = (apply_fio(T, A, ts[q], u, 2) - ref).norm() / u.norm();
    if (std::abs(ts[q] - 0.05) < 1e-12) at1 = e1, at2 = e2;
    if (ts[q] >= 0.01 - 1e-12) {
      tt.push_back(ts[q]);
      g1.push_back(e1);
      g2.push_back(e2);
    }
  }
  const double s2 = log2_slope(tt, g2), s1 = log2_slope(tt, g1);
  const bool ok = at2 <= 1e-2 && at2 < at1 && s2 >= 0.7 && s2 <= 1.3;
  std::ostringstream os;
  os << "gap(t=0.05) N=1 " << sci(at1) << ", N=2 " << sci(at2) << " (<= 1e-2, decreasing); envelope slope N=2 " << s2
     << " in [0.7, 1.3] (N=1 slope " << s1 << ")";
  return {ok, os.str()};
}

// 4. flow suite
Outcome flow_suite() {
  std::ostringstream os;
  double drift = 0.0;
  for (const auto& m : {catalog::harmonic(1), catalog::subquadratic_power(1, 0.5), catalog::conformal_bump(2, 1.0),
                        catalog::linear_magnetic(2, 1.0, 0.5), catalog::log_oscillating(2, 0.3, 1.0)})
    for (double x : {-1.5, 0.7})
      for (double k : {-1.1, 0.4})
        for (double t : {-2.0, 2.0}) {
          auto r = integrate_flow(m, SymbolChoice::p, std::nullopt, {Vec::Constant(m.dim, x), Vec::Constant(m.dim, k)}, {t}, 1e-10);
          drift = std::max(drift, r.energy_drift);
        }
  os << "energy drift=" << sci(drift);

  double rt = 0.0;
  int pts = 0;
  for (const auto& m : {catalog::harmonic(1), catalog::subquadratic_power(1, 0.5)})
    for (double x = -6; x <= 6; x += 0.5)
      for (double k = -2; k <= 2; k += 0.25) {
        if (!in_quadratic_zone(1.0, v1(x), v1(k))) continue;
        auto inv = invert_position_map(m, 0.2, v1(x), v1(k));
        auto f = integrate_flow(m, SymbolChoice::p, std::nullopt, {inv.y, v1(k)}, {0.2}, 1e-12);
        rt = std::max(rt, std::abs(f.X[0][0] - x) / std::sqrt(1 + x * x));
        ++pts;
      }
  os << "; round trip=" << sci(rt) << "<x> over " << pts << " points";

  double cf = 0.0;
  std::vector<double> ts;
  for (int i = -10; i <= 10; ++i)
    if (i != 0) ts.push_back(0.2 * i);
  for (double x : {-1.5, 0.5, 2.0})
    for (double k : {-1.0, 0.3}) {
      auto r = integrate_flow(catalog::harmonic(1), SymbolChoice::p, std::nullopt, {v1(x), v1(k)}, ts, 1e-10);
      for (size_t q = 0; q < ts.size(); ++q)
        cf = std::max({cf, std::abs(r.X[q][0] - x * std::cos(ts[q]) - k * std::sin(ts[q])),
                       std::abs(r.Xi[q][0] + x * std::sin(ts[q]) - k * std::cos(ts[q]))});
    }
  os << "; harmonic closed form=" << sci(cf);

  double order = INFINITY;
  for (const auto& m : {catalog::harmonic(1), catalog::subquadratic_power(1, 0.5)}) {
    const double t = 1.0, x = 0.7, k = -0.4;
    auto J = flow_jacobian(m, SymbolChoice::p, std::nullopt, {v1(x), v1(k)}, {t}, 1e-13).jac[0];
    auto cd = [&](double d) {
      auto at = [&](double dx, double dk) {
        return integrate_flow(m, SymbolChoice::p, std::nullopt, {v1(x + dx), v1(k + dk)}, {t}, 1e-13);
      };
      auto px = at(d, 0), mx = at(-d, 0), pk = at(0, d), mk = at(0, -d);
      PhaseMat F(2, 2);
      F << (px.X[0][0] - mx.X[0][0]) / (2 * d), (pk.X[0][0] - mk.X[0][0]) / (2 * d),
          (px.Xi[0][0] - mx.Xi[0][0]) / (2 * d), (pk.Xi[0][0] - mk.Xi[0][0]) / (2 * d);
      return (F - J).norm();
    };
    const double e1 = cd(4e-2), e2 = cd(2e-2);
    // the harmonic flow is linear, so central differences are exact up to round-off
    if (e1 > 1e-9) order = std::min(order, std::log2(e1 / e2));
  }
  os << "; Jacobian FD order=" << order;
  return {drift <= 1e-8 && rt <= 1e-10 && cf <= 1e-8 && order >= 1.8, os.str()};
}

// 5. functional calculus
Outcome functional_calculus() {
  std::ostringstream os;
  Grid g{1, 1024, 40.0};
  bool ok = true;
  const std::vector<double> hs = {0.25, 0.125, 0.0625};
  for (const auto& m : {catalog::flat_free(1), catalog::harmonic(1)}) {
    auto Hd = build_discrete_hamiltonian(m, g, Discretization::spectral_flat);
    GridState u = gaussian_packet(g, v1(1.0), v1(3.0), 0.5);
    const double lmax = eigen_pairs(Hd)->values.maxCoeff();
    GridState s = spectral_function(Hd, SpectralPartition::f0, 1.0, u);
    for (int j = 0; std::ldexp(1.0, 2 * (j - 1)) <= 4 * lmax; ++j)
      s += spectral_function(Hd, SpectralPartition::f, std::ldexp(1.0, -j), u);
    const double rec = (s - u).norm();
    std::vector<double> gaps;
    for (double h : hs) gaps.push_back(functional_calculus_gap(Hd, m, h, 1.0, SpectralPartition::f).norm.value);
    const double mx = *std::max_element(gaps.begin(), gaps.end());
    os << m.id << ": partition " << sci(rec) << ", gaps " << sci(gaps[0]) << "," << sci(gaps[1]) << "," << sci(gaps[2]);
    ok = ok && rec <= 1e-10;
    if (mx <= 1e-12) {
      // Kohn-Nirenberg composition with a Fourier multiplier is exact: the gap is
      // round-off, so gap <= C h^0.8 holds for every C > 0
      os << " (identically zero up to round-off); ";
    } else {
      const double s = log2_slope(hs, gaps);
      os << " slope " << s << " >= 0.8; ";
      ok = ok && s >= 0.8;
    }
  }
  return {ok, os.str()};
}

// 6. Egorov
Outcome egorov() {
  std::ostringstream os;
  Grid small{1, 256, 16.0};
  auto harm = catalog::harmonic(1);
  auto eta0 = Symbol::general([](const Vec& x, const Vec& z) { return cplx(std::exp(-(x[0] - 2) * (x[0] - 2) - (z[0] - 1) * (z[0] - 1))); });
  const double g0 = egorov_check(build_discrete_hamiltonian(harm, small, Discretization::spectral_flat), harm, eta0, 0.0, 0.5).norm.value;
  auto free = catalog::flat_free(1);
  auto eta1 = Symbol::general([](const Vec&, const Vec& z) { return cplx(std::exp(-(z[0] - 1) * (z[0] - 1))); });
  const double gm = egorov_check(build_discrete_hamiltonian(free, small, Discretization::spectral_flat), free, eta1, 0.5, 0.5).norm.value;
  os << "t=0 gap " << sci(g0) << ", multiplier gap " << sci(gm);

  // Gaussian bump at (x, xi) = (2/h, 1/h) with width w/h; w = 1/6 keeps three widths
  // inside the annulus 1/(2h) < |xi| < 2/h
  Grid g{1, 2048, 64.0};
  auto Hd = build_discrete_hamiltonian(harm, g, Discretization::spectral_flat);
  const double w = 1.0 / 6;
  std::vector<double> gaps;
  for (double h : {0.125, 0.0625}) {
    auto eta = Symbol::general([=](const Vec& x, const Vec& z) {
      const double a = h * x[0] - 2.0, b = z[0] - 1.0;
      return cplx(std::exp(-(a * a + b * b) / (w * w)));
    });
    gaps.push_back(egorov_check(Hd, harm, eta, 0.25, h).norm.value);
  }
  const double dev = std::abs(gaps[1] / (0.5 * gaps[0]) - 1.0);
  os << "; harmonic gaps h=1/8 " << sci(gaps[0]) << ", h=1/16 " << sci(gaps[1]) << " (ratio " << gaps[0] / gaps[1]
     << ", halving off by " << 100 * dev << "% <= 30%)";
  return {g0 <= 1e-8 && gm <= 1e-8 && dev <= 0.3, os.str()};
}

// 7. truncation comparison for outgoing data
Outcome ik() {
  std::ostringstream os;
  Scenario z = scenario("ik_free");
  auto rz = run_ik_comparison(z, {2.0, 4.0, 8.0});
  double zmax = 0.0;
  for (const auto& row : rz.report["rows"]) zmax = std::max(zmax, row["gap_outgoing"].get<double>());
  const bool zero_ok = rz.report["zero_coefficient_control_exact"].get<bool>() && zmax == 0.0;
  os << "zero potential gap " << zmax;

  Scenario s = scenario("ik_subquadratic");
  auto r = run_ik_comparison(s, {2.0, 4.0, 8.0});
  double worst = 0.0, ctrl = INFINITY;
  for (const auto& row : r.report["rows"]) {
    const double L = row["L"].get<double>(), h = row["h"].get<double>();
    if (L < s.L_min) continue;
    worst = std::max(worst, row["gap_outgoing"].get<double>());
    if (L / (2 * h) < s.grid.half_width && row["gap_outgoing"].get<double>() > 0.0)
      ctrl = std::min(ctrl, row["gap_incoming"].get<double>() / row["gap_outgoing"].get<double>());
  }
  const bool small = r.report["gap_small_for_L_ge_L_min"].get<bool>();
  const bool mono = r.report["monotone_in_L"].get<bool>();
  const bool control = r.report["incoming_control_ge_10x"].get<bool>();
  os << "; outgoing gap for L >= " << s.L_min << " max " << sci(worst) << " (<= " << sci(s.ik_tol) << ")"
     << ", monotone " << (mono ? "yes" : "no") << "; incoming/outgoing " << (std::isinf(ctrl) ? std::string("n/a") : sci(ctrl))
     << " (>= 10)";
  return {zero_ok && small && mono && control, os.str()};
}

// 8. Strichartz tables and loss envelope
Outcome strichartz() {
  std::ostringstream os;
  bool ok = true;
  for (const char* name : {"free_d1", "subquadratic_power"}) {
    Scenario s = scenario(name);
    s.pairs = {{8.0, 4.0}, {12.0, 3.0}, {INFINITY, 2.0}};
    s.h_list = {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125};
    s.bound_factor = 3.0;
    auto t = run_strichartz_table(s, scenario_pairs(s));
    auto l = run_semiclassical_loss_scan(s);
    double worst = 0.0, slope = INFINITY;
    for (const auto& p : t.report["pairs"]) worst = std::max(worst, p["max_over_min"].get<double>());
    for (const auto& f : l.report["fits"]) slope = std::min(slope, f["slope"].get<double>() - f["threshold"].get<double>());
    os << name << ": max/min " << worst << " (<= 3), loss slope margin " << slope << "; ";
    ok = ok && t.pass && l.pass;
  }
  return {ok, os.str()};
}

// 9. partitions and quantization exactness
Outcome exactness() {
  std::ostringstream os;
  double part = 0.0;
  auto psi = build_psi_epsilon(1.0);
  auto chi = chi_epsilon_cutoff(1.0);
  DirectionalSplitting split;
  for (double x = -8; x <= 8; x += 0.37)
    for (double k = -8; k <= 8; k += 0.41) {
      part = std::max(part, std::abs(psi.psi(v1(x), v1(k)) + chi.value(x, k) - 1.0));
      part = std::max(part, std::abs(psi.psi(v1(x), v1(k)) + psi.chi(v1(x), v1(k)) - 1.0));
    }
  for (double c = -1.0; c <= 1.0; c += 0.01) part = std::max(part, std::abs(split.plus(c) + split.minus(c) - 1.0));
  os << "partitions " << sci(part);

  double lp = 0.0, pars = 0.0;
  for (int d : {1, 2}) {
    Grid g{d, d == 1 ? 512 : 64, 10.0};
    GridState u = gaussian_packet(g, Vec::Constant(d, 0.3), Vec::Constant(d, -1.0), 1.1);
    DyadicLP L = build_lp(g);
    GridState s = lp_apply(L, 0, u);
    for (int j = 1; j <= L.j_max; ++j) s += lp_apply(L, j, u);
    lp = std::max(lp, (s - u).norm() / u.norm());
    auto uh = fourier(u);
    pars = std::max({pars, std::abs(spectral_norm(g, uh) / u.norm() - 1.0), (inverse_fourier(g, uh) - u).norm()});
  }
  os << "; LP reconstruction " << sci(lp) << "; Parseval " << sci(pars);

  Grid g{1, 128, 12.0};
  auto m = catalog::harmonic(1);
  PhaseTable T = build_phase(m, 1.0, PhaseGrids::on_grid(g, {0.0, 0.05}, xi_nodes(g, 1e9)));
  AmplitudeSet A = build_amplitudes(m, T, chi, 1);
  GridState u = gaussian_packet(g, v1(1.0), v1(2.0), 1.0);
  GridState f = apply_fio(T, A, 0.0, u);
  GridState p = apply_pdo(Symbol::general([&](const Vec& x, const Vec& xi) { return cplx(chi.value(x[0], xi[0])); }), u, 1.0);
  int diff = 0;
  for (int i = 0; i < g.n; ++i) diff += f.values[i] != p.values[i];
  os << "; fio(t=0) vs pdo differing entries " << diff;
  return {part <= 1e-15 && lp <= 1e-12 && pars <= 1e-13 && diff == 0, os.str()};
}

// 10. negative controls
Outcome negative_controls() {
  std::ostringstream os;
  auto a = check_assumption_A(catalog::monomial_potential(1, 1.0, 4), 2, 16.0, 65);
  os << "x^4 assumption A " << (a.pass ? "passes" : "fails");

  Grid g{1, 1024, 40.0};
  auto m = catalog::flat_free(1);
  auto Hd = build_discrete_hamiltonian(m, g, Discretization::spectral_flat);
  FcGapOptions o;
  o.symbol_eps = 2.0;
  const std::vector<double> hs = {0.25, 0.125, 0.0625};
  std::vector<double> gaps;
  for (double h : hs) gaps.push_back(functional_calculus_gap(Hd, m, h, 1.0, SpectralPartition::f, o).norm.value);
  const double s = log2_slope(hs, gaps);
  const double lo = *std::min_element(gaps.begin(), gaps.end());
  const bool no_decay = s < 0.2 && lo > 0.1;
  os << "; mismatched cutoff gaps " << sci(gaps[0]) << "," << sci(gaps[1]) << "," << sci(gaps[2]) << " slope " << s;

  Scenario t = scenario("trapped_d2");
  auto nt = nontrapping_scan(t.model(), 0.5, {}, 60.0, 6.0);
  double r_trapped = -1.0;
  for (const auto& smp : nt.samples)
    if (!smp.failed && !smp.escaped_forward && !smp.escaped_backward) r_trapped = std::max(r_trapped, smp.max_radius);
  const bool cert = nt.verdict == TrapVerdict::trapped_some && r_trapped >= 0.0 && r_trapped < nt.R_escape;
  os << "; " << t.name << " verdict " << to_string(nt.verdict) << ", bounded orbit radius " << r_trapped << " < "
     << nt.R_escape;
  return {!a.pass && no_decay && cert, os.str()};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "free dispersive constant", 60, free_dispersive},
      {2, "Hamilton-Jacobi machinery", 120, hj_machinery},
      {3, "WKB parametrix vs oracle", 300, wkb_vs_oracle},
      {4, "flow suite", 60, flow_suite},
      {5, "functional calculus", 300, functional_calculus},
      {6, "Egorov", 300, egorov},
      {7, "truncation comparison", 600, ik},
      {8, "Strichartz tables", 600, strichartz},
      {9, "partition and quantization exactness", 30, exactness},
      {10, "negative controls", 300, negative_controls},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = dt < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s %2d %s: %s [%.1f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), dt,
                c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
