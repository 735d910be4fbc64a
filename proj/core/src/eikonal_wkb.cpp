#include "sclab/eikonal_wkb.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "sclab/cutoff.hpp"
#include "sclab/harmonic_analysis.hpp"

namespace sclab {

namespace {

template <class T>
T rho_t(double eps, const T& x, const T& xi) {
  const T axi = ad::value_of(xi) < 0.0 ? -xi : xi;
  const T s = eps * axi / (2.0 * ad::sqrt(1.0 + x * x));
  return smooth_cutoff(0.5 * s);
}

void rho_with_gradient(double eps, double x, double xi, double& r, double& rx, double& rxi) {
  using ad::D1;
  D1 a = rho_t<D1>(eps, D1{x, 1.0}, D1{xi, 0.0});
  D1 b = rho_t<D1>(eps, D1{x, 0.0}, D1{xi, 1.0});
  r = a.v;
  rx = a.d;
  rxi = b.d;
}

Vec v1(double a) { return Vec::Constant(1, a); }

std::vector<double> trapezoid_weights(const std::vector<double>& t, int m) {
  std::vector<double> w(m + 1, 0.0);
  for (int l = 0; l < m; ++l) {
    const double h = t[l + 1] - t[l];
    w[l] += 0.5 * h;
    w[l + 1] += 0.5 * h;
  }
  return w;
}

// 8-point Lagrange interpolation on a periodic grid; nullopt when z is off the box.
std::optional<cplx> interp_periodic(const Grid& g, const std::vector<cplx>& f, size_t offset, double z) {
  const double L = g.half_width, dx = g.dx();
  if (z < -L || z >= L) return std::nullopt;
  const double u = (z + L) / dx;
  const int base = int(std::floor(u));
  const double frac = u - base;
  if (frac < 1e-13) return f[offset + ((base % g.n) + g.n) % g.n];
  if (frac > 1.0 - 1e-13) return f[offset + (((base + 1) % g.n) + g.n) % g.n];
  cplx acc = 0.0;
  for (int a = -3; a <= 4; ++a) {
    double w = 1.0;
    for (int b = -3; b <= 4; ++b)
      if (b != a) w *= (frac - b) / double(a - b);
    const int idx = (((base + a) % g.n) + g.n) % g.n;
    acc += w * f[offset + idx];
  }
  return acc;
}

void check_grids(const PhaseGrids& g) {
  if (g.t.empty() || g.x.empty() || g.xi.empty()) throw DomainError("phase grids must be non-empty");
  if (g.t.front() < 0.0) throw DomainError("phase tables need t >= 0");
  for (size_t i = 1; i < g.t.size(); ++i)
    if (!(g.t[i] > g.t[i - 1])) throw DomainError("t grid must be strictly ascending");
  if (g.periodic) {
    if (g.periodic->d != 1) throw DomainError("phase tables are one-dimensional");
    if (g.x.size() != size_t(g.periodic->n)) throw DomainError("x grid does not match the periodic grid");
  }
}

}  // namespace

PhaseGrids PhaseGrids::on_grid(const Grid& g, std::vector<double> t, std::vector<double> xi) {
  g.validate();
  if (g.d != 1) throw DomainError("phase tables are one-dimensional");
  PhaseGrids pg;
  pg.t = std::move(t);
  pg.xi = std::move(xi);
  for (int i = 0; i < g.n; ++i) pg.x.push_back(g.x(i));
  pg.periodic = g;
  return pg;
}

double region_rho(double eps, double x, double xi) { return rho_t<double>(eps, x, xi); }

size_t PhaseTable::char_offset(int m, int k, int i) const {
  const size_t tri = size_t(nt()) * (nt() + 1) / 2;
  return (size_t(k) * nx() + i) * tri + size_t(m) * (m + 1) / 2;
}

PhaseTable build_phase(const SymbolModel& model, double eps, const PhaseGrids& grids, const PhaseBuildOptions& opt) {
  if (model.dim != 1) throw DomainError("phase tables are one-dimensional");
  if (!(eps > 0.0)) throw DomainError("epsilon must be positive");
  check_grids(grids);
  PhaseTable T;
  T.model_id = model.id;
  T.epsilon = eps;
  T.t_eps = opt.t_eps > 0.0 ? opt.t_eps : grids.t.back();
  if (grids.t.back() > T.t_eps * (1.0 + 1e-12)) throw DomainError("t grid exceeds the declared window t_eps");
  T.t_grid = grids.t;
  T.x_grid = grids.x;
  T.xi_grid = grids.xi;
  T.periodic = grids.periodic;
  const int nt = T.nt(), nx = T.nx(), nk = T.nk();
  const size_t N = size_t(nt) * nk * nx;
  T.psi.assign(N, 0.0);
  T.dpsi_dx.assign(N, 0.0);
  T.dpsi_dxi.assign(N, 0.0);
  T.d2psi_dxi2.assign(N, 0.0);
  T.Y.assign(N, 0.0);
  T.rho.assign(N, 0.0);
  T.ycal.assign(N, 0.0);
  T.ycal_int.assign(N, 0.0);
  T.on_region.assign(size_t(nk) * nx, 0);
  T.has_characteristics = opt.characteristics;
  if (opt.characteristics) {
    const size_t tot = size_t(nk) * nx * nt * (nt + 1) / 2;
    T.char_X.assign(tot, std::nan(""));
    T.char_I.assign(tot, std::nan(""));
  }

  for (int k = 0; k < nk; ++k) {
    const double xi = T.xi_grid[k];
    const Vec xiv = v1(xi);
    std::vector<double> y1(nx, std::nan("")), y2(nx, std::nan(""));
    for (int i = 0; i < nx; ++i) T.on_region[size_t(k) * nx + i] = region_rho(eps, T.x_grid[i], xi) == 1.0;
    for (int m = 0; m < nt; ++m) {
      const double t = T.t_grid[m];
      std::vector<double> rec(T.t_grid.begin(), T.t_grid.begin() + m + 1);
      for (int i = 0; i < nx; ++i) {
        const double x = T.x_grid[i];
        const size_t idx = T.index(m, k, i);
        double r, rx, rxi;
        rho_with_gradient(eps, x, xi, r, rx, rxi);
        T.rho[idx] = r;
        const SymbolJet j0 = symbol_jet(model, v1(x), xiv, 2);
        const double psi0 = x * xi - t * j0.p;
        const double dx0 = xi - t * j0.dx[0];
        const double dxi0 = x - t * j0.dxi[0];
        const double d20 = -t * j0.xixi(0, 0);
        const size_t co = opt.characteristics ? T.char_offset(m, k, i) : 0;
        if (t == 0.0) {
          T.psi[idx] = x * xi;
          T.dpsi_dx[idx] = xi;
          T.dpsi_dxi[idx] = x;
          T.d2psi_dxi2[idx] = 0.0;
          T.Y[idx] = x;
          PhaseMat J = PhaseMat::Identity(2, 2);
          T.ycal[idx] = transport_rate(coeff_jet(model, v1(x), 1), xiv, J);
          if (opt.characteristics) {
            T.char_X[co] = x;
            T.char_I[co] = 0.0;
          }
          y1[i] = x;
          continue;
        }
        if (r == 0.0) {
          T.psi[idx] = psi0;
          T.dpsi_dx[idx] = dx0;
          T.dpsi_dxi[idx] = dxi0;
          T.d2psi_dxi2[idx] = d20;
          T.Y[idx] = x;
          continue;
        }
        std::optional<Vec> guess;
        if (!std::isnan(y1[i])) guess = v1(std::isnan(y2[i]) ? y1[i] : 2.0 * y1[i] - y2[i]);
        InverseOptions io;
        io.flow_tol = opt.tol;
        io.record_times = rec;
        io.action = true;
        io.transport = true;
        io.target = 1e-13;
        InverseResult inv;
        try {
          inv = invert_position_map(model, t, v1(x), xiv, guess, io);
        } catch (const InversionError& e) {
          throw InversionError(std::string(e.what()) + " at t=" + std::to_string(t) + " x=" + std::to_string(x) +
                                   " xi=" + std::to_string(xi),
                               e.residual);
        }
        const FlowResult& fr = inv.flow;
        const double Yv = inv.y[0];
        const double Xi_t = fr.Xi.back()[0];
        const PhaseMat& J = fr.jac.back();
        const double psit = Yv * xi + fr.action.back();
        const double dyx = -J(0, 1) / J(0, 0);
        const double dpsi = psit - psi0;
        T.psi[idx] = psi0 + r * dpsi;
        T.dpsi_dx[idx] = dx0 + rx * dpsi + r * (Xi_t - dx0);
        T.dpsi_dxi[idx] = dxi0 + rxi * dpsi + r * (Yv - dxi0);
        T.d2psi_dxi2[idx] = d20 + r * (dyx - d20);
        T.Y[idx] = Yv;
        T.ycal[idx] = transport_rate(coeff_jet(model, v1(x), 1), fr.Xi.back(), J);
        T.ycal_int[idx] = fr.transport.back();
        if (opt.characteristics)
          for (int l = 0; l <= m; ++l) {
            T.char_X[co + l] = fr.X[l][0];
            T.char_I[co + l] = fr.transport[l];
          }
        y2[i] = y1[i];
        y1[i] = Yv;
      }
    }
  }
  return T;
}

PhaseResidual phase_residual(const SymbolModel& model, const PhaseTable& T) {
  PhaseResidual out;
  const int nt = T.nt(), nx = T.nx(), nk = T.nk();
  for (int m = 1; m + 1 < nt; ++m) {
    const double h1 = T.t_grid[m] - T.t_grid[m - 1], h2 = T.t_grid[m + 1] - T.t_grid[m];
    const double cm = -h2 / (h1 * (h1 + h2)), c0 = (h2 - h1) / (h1 * h2), cp = h1 / (h2 * (h1 + h2));
    for (int k = 0; k < nk; ++k)
      for (int i = 0; i < nx; ++i) {
        if (!T.on_region[size_t(k) * nx + i]) continue;
        const size_t idx = T.index(m, k, i);
        const double dt = cm * T.psi[T.index(m - 1, k, i)] + c0 * T.psi[idx] + cp * T.psi[T.index(m + 1, k, i)];
        const double p = eval_symbol_p(model, v1(T.x_grid[i]), v1(T.dpsi_dx[idx]));
        out.max_residual = std::max(out.max_residual, std::abs(dt + p));
        ++out.n_samples;
      }
  }
  return out;
}

namespace {
double psi_tilde(const SymbolModel& model, double t, double x, double xi, double guess) {
  InverseOptions io;
  io.action = true;
  io.target = 1e-14;
  auto inv = invert_position_map(model, t, v1(x), v1(xi), v1(guess), io);
  return inv.y[0] * xi + inv.flow.action.back();
}
}  // namespace

GradientCheck gradient_identity_check(const SymbolModel& model, const PhaseTable& T, double delta, int stride) {
  if (!(delta > 0.0)) throw DomainError("delta must be positive");
  stride = std::max(1, stride);
  GradientCheck out;
  const int nt = T.nt(), nx = T.nx(), nk = T.nk();
  int counter = 0;
  for (int m = 0; m < nt; ++m) {
    const double t = T.t_grid[m];
    if (t == 0.0) continue;
    for (int k = 0; k < nk; ++k)
      for (int i = 0; i < nx; ++i) {
        if (!T.on_region[size_t(k) * nx + i]) continue;
        if (counter++ % stride) continue;
        const size_t idx = T.index(m, k, i);
        const double x = T.x_grid[i], xi = T.xi_grid[k], Y = T.Y[idx];
        const double fx = (psi_tilde(model, t, x + delta, xi, Y) - psi_tilde(model, t, x - delta, xi, Y)) / (2 * delta);
        const double fk = (psi_tilde(model, t, x, xi + delta, Y) - psi_tilde(model, t, x, xi - delta, Y)) / (2 * delta);
        out.max_dx_error = std::max(out.max_dx_error, std::abs(fx - T.dpsi_dx[idx]));
        out.max_dxi_error = std::max(out.max_dxi_error, std::abs(fk - T.dpsi_dxi[idx]));
        ++out.n_samples;
      }
  }
  return out;
}

PhaseEstimateFit fit_phase_estimate(const SymbolModel& model, const PhaseTable& T) {
  PhaseEstimateFit out;
  const int nt = T.nt(), nx = T.nx(), nk = T.nk();
  for (int m = 0; m < nt; ++m) {
    const double t = T.t_grid[m];
    if (t == 0.0) continue;
    for (int k = 0; k < nk; ++k)
      for (int i = 0; i < nx; ++i) {
        if (!T.on_region[size_t(k) * nx + i]) continue;
        const size_t idx = T.index(m, k, i);
        const double x = T.x_grid[i], xi = T.xi_grid[k];
        const SymbolJet j = symbol_jet(model, v1(x), v1(xi), 2);
        const double dev = std::abs(T.psi[idx] - x * xi + t * j.p);
        out.C_hat = std::max(out.C_hat, dev / (t * t * (1.0 + x * x)));
        out.C_second = std::max(out.C_second, std::abs(T.d2psi_dxi2[idx] + t * j.xixi(0, 0)) / (t * t));
        ++out.n_samples;
      }
  }
  return out;
}

// ---------------------------------------------------------------------------

AmplitudeCutoff chi_epsilon_cutoff(double eps) {
  PsiEpsilon pe = build_psi_epsilon(eps);
  return {"chi_eps(eps=" + std::to_string(eps) + ")",
          [pe](double x, double xi) { return pe.chi(v1(x), v1(xi)); }};
}

AmplitudeCutoff frequency_cutoff(double plateau, double edge) {
  if (!(plateau > 0.0 && edge > plateau)) throw DomainError("frequency cutoff needs 0 < plateau < edge");
  return {"freq_cutoff(" + std::to_string(plateau) + "," + std::to_string(edge) + ")",
          [plateau, edge](double, double xi) {
            const double a = std::abs(xi);
            if (a <= plateau) return 1.0;
            return smooth_cutoff(0.5 + 0.5 * (a - plateau) / (edge - plateau));
          }};
}

cplx AmplitudeSet::total(size_t idx, int order) const {
  cplx s = 0.0;
  for (int j = 0; j < std::min(order, N); ++j) s += b[j][idx];
  return s;
}

double padding_taper(const Grid& g, double x) {
  const double L = g.half_width;
  return smooth_cutoff(0.5 + 0.5 * (std::abs(x) - 0.8 * L) / (0.1 * L));
}

std::vector<cplx> apply_kinetic_slice(const SymbolModel& m, const Grid& g, const std::vector<cplx>& b) {
  GridState u(g);
  for (int i = 0; i < g.n; ++i) u.values[i] = padding_taper(g, g.x(i)) * b[i];
  auto deriv = [&](const GridState& v) {
    auto vh = fourier(v);
    for (int k = 0; k < g.n; ++k) vh[k] *= (k == g.n / 2) ? cplx(0.0) : cplx(0.0, g.xi(k));
    return inverse_fourier(g, vh);
  };
  GridState du = deriv(u);
  const ScalarField& gf = m.metric(0, 0);
  for (int i = 0; i < g.n; ++i) du.values[i] *= gf.value(v1(g.x(i)));
  GridState ddu = deriv(du);
  std::vector<cplx> out(g.n);
  for (int i = 0; i < g.n; ++i) out[i] = -0.5 * ddu.values[i];
  return out;
}

AmplitudeSet build_amplitudes(const SymbolModel& model, const PhaseTable& T, const AmplitudeCutoff& chi, int N) {
  if (N < 1 || N > kMaxAmplitudeOrder) throw DomainError("amplitude order must lie in [1, 3]");
  if (N >= 2) {
    if (!T.periodic) throw DomainError("higher-order amplitudes need a periodic x grid");
    if (!T.has_characteristics) throw DomainError("higher-order amplitudes need stored characteristics");
    if (T.t_grid.front() != 0.0) throw DomainError("higher-order amplitudes need t grid starting at 0");
  }
  const int nt = T.nt(), nx = T.nx(), nk = T.nk();
  const size_t Ntot = size_t(nt) * nk * nx;
  AmplitudeSet A;
  A.N = N;
  A.chi_name = chi.name;
  A.b.assign(N, std::vector<cplx>(Ntot, 0.0));
  A.support.assign(Ntot, 0);
  for (int m = 0; m < nt; ++m)
    for (int k = 0; k < nk; ++k)
      for (int i = 0; i < nx; ++i) {
        const size_t idx = T.index(m, k, i);
        A.support[idx] = T.rho[idx] > 0.0;
        if (T.t_grid[m] == 0.0) {
          A.b[0][idx] = chi.value(T.x_grid[i], T.xi_grid[k]);
        } else if (T.rho[idx] > 0.0) {
          A.b[0][idx] = chi.value(T.Y[idx], T.xi_grid[k]) * std::exp(-T.ycal_int[idx]);
        }
      }
  if (N == 1) return A;
  const Grid& g = *T.periodic;
  const double inner = 0.8 * g.half_width;
  for (int j = 1; j < N; ++j) {
    for (int k = 0; k < nk; ++k) {
      std::vector<cplx> Kb(size_t(nt) * nx);
      for (int l = 0; l < nt; ++l) {
        std::vector<cplx> slice(A.b[j - 1].begin() + T.index(l, k, 0), A.b[j - 1].begin() + T.index(l, k, 0) + nx);
        auto kb = apply_kinetic_slice(model, g, slice);
        std::copy(kb.begin(), kb.end(), Kb.begin() + size_t(l) * nx);
      }
      for (int m = 1; m < nt; ++m) {
        const auto w = trapezoid_weights(T.t_grid, m);
        for (int i = 0; i < nx; ++i) {
          const size_t idx = T.index(m, k, i);
          if (T.rho[idx] == 0.0) continue;
          const size_t co = T.char_offset(m, k, i);
          const double Im = T.char_I[co + m];
          cplx sum = 0.0;
          for (int l = 0; l <= m; ++l) {
            cplx kv;
            if (l == m) {
              kv = Kb[size_t(m) * nx + i];
            } else {
              auto v = interp_periodic(g, Kb, size_t(l) * nx, T.char_X[co + l]);
              if (!v) {
                if (std::abs(T.x_grid[i]) <= inner)
                  throw ResolutionError("characteristic leaves the x grid on slice xi=" +
                                        std::to_string(T.xi_grid[k]) + " (t=" + std::to_string(T.t_grid[m]) +
                                        ", x=" + std::to_string(T.x_grid[i]) + ")");
                v = cplx(0.0);
              }
              kv = *v;
            }
            sum += w[l] * kv * std::exp(-(Im - T.char_I[co + l]));
          }
          A.b[j][idx] = cplx(0.0, -1.0) * sum;
        }
      }
    }
  }
  return A;
}

std::vector<double> transport_residual(const SymbolModel& model, const PhaseTable& T, const AmplitudeSet& A) {
  if (!T.periodic || !T.has_characteristics) throw DomainError("transport residual needs a periodic table with characteristics");
  const Grid& g = *T.periodic;
  const int nt = T.nt(), nx = T.nx(), nk = T.nk();
  const double inner = 0.8 * g.half_width;
  std::vector<double> res(A.N, 0.0);
  for (int k = 0; k < nk; ++k) {
    // Kb_{j-1} per level for every order
    std::vector<std::vector<cplx>> Kb(A.N);
    for (int j = 1; j < A.N; ++j) {
      Kb[j].resize(size_t(nt) * nx);
      for (int l = 0; l < nt; ++l) {
        std::vector<cplx> slice(A.b[j - 1].begin() + T.index(l, k, 0), A.b[j - 1].begin() + T.index(l, k, 0) + nx);
        auto kb = apply_kinetic_slice(model, g, slice);
        std::copy(kb.begin(), kb.end(), Kb[j].begin() + size_t(l) * nx);
      }
    }
    std::vector<cplx> ycal(size_t(nt) * nx);
    for (int l = 0; l < nt; ++l)
      for (int i = 0; i < nx; ++i) ycal[size_t(l) * nx + i] = T.ycal[T.index(l, k, i)];
    std::vector<std::vector<cplx>> bj(A.N, std::vector<cplx>(size_t(nt) * nx));
    for (int j = 0; j < A.N; ++j)
      for (int l = 0; l < nt; ++l)
        for (int i = 0; i < nx; ++i) bj[j][size_t(l) * nx + i] = A.b[j][T.index(l, k, i)];

    auto region_ok = [&](double z) {
      if (std::abs(z) > inner) return false;
      const int c = int(std::lround((z + g.half_width) / g.dx()));
      for (int a = c - 5; a <= c + 5; ++a) {
        const int ii = ((a % nx) + nx) % nx;
        if (!T.on_region[size_t(k) * nx + ii]) return false;
      }
      return true;
    };

    for (int m = 1; m + 1 < nt; ++m) {
      const double h1 = T.t_grid[m] - T.t_grid[m - 1], h2 = T.t_grid[m + 1] - T.t_grid[m];
      const double cm = -h2 / (h1 * (h1 + h2)), c0 = (h2 - h1) / (h1 * h2), cp = h1 / (h2 * (h1 + h2));
      for (int i = 0; i < nx; ++i) {
        if (T.rho[T.index(m + 1, k, i)] == 0.0) continue;
        const size_t co = T.char_offset(m + 1, k, i);
        const double z = T.char_X[co + m], zm = T.char_X[co + m - 1];
        if (!region_ok(T.x_grid[i]) || !region_ok(z) || !region_ok(zm)) continue;
        const cplx yc = *interp_periodic(g, ycal, size_t(m) * nx, z);
        for (int j = 0; j < A.N; ++j) {
          const cplx bp = bj[j][size_t(m + 1) * nx + i];
          const cplx b0 = *interp_periodic(g, bj[j], size_t(m) * nx, z);
          const cplx bm = *interp_periodic(g, bj[j], size_t(m - 1) * nx, zm);
          cplx r = cm * bm + c0 * b0 + cp * bp + yc * b0;
          if (j > 0) r += cplx(0.0, 1.0) * *interp_periodic(g, Kb[j], size_t(m) * nx, z);
          res[j] = std::max(res[j], std::abs(r));
        }
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {
constexpr double kGLx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                            0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr double kGLw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                            0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

double gauss8(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int q = 0; q < 8; ++q) s += kGLw[q] * f(c + h * kGLx[q]);
  return s * h;
}

double composite(const std::function<double(double)>& f, double a, double b, int cells) {
  double s = 0.0;
  for (int c = 0; c < cells; ++c) s += gauss8(f, a + (b - a) * c / cells, a + (b - a) * (c + 1) / cells);
  return s;
}
}  // namespace

double EikonalSolution::S(double x) const {
  if (x < a || x > b) throw DomainError("eikonal evaluation outside x_range");
  auto C = [&](double z) {
    const int n = int(cell_edges.size()) - 1;
    int c = std::clamp(int((z - a) / (b - a) * n), 0, n - 1);
    return cumulative[c] + gauss8(dS, cell_edges[c], z);
  };
  return anchor_value + C(x) - C(anchor_x);
}

EikonalSolution solve_eikonal_1d(const SymbolModel& m, const TruncationParams& tp, double xi, double x_lo,
                                 double x_hi, EikonalDirection dir) {
  if (m.dim != 1) throw DomainError("the stationary eikonal is implemented for d = 1 only");
  tp.validate();
  if (xi == 0.0) throw DomainError("eikonal needs xi != 0");
  if (!(x_lo < x_hi)) throw DomainError("eikonal needs x_lo < x_hi");
  const SymbolModel mt = model_for(m, SymbolChoice::p_tilde_h, tp);
  const double sgn = xi > 0 ? 1.0 : -1.0;
  auto disc = [mt, xi](double x) {
    const CoeffJet c = coeff_jet(mt, v1(x), 0);
    return (xi * xi - 2.0 * c.V) / c.g(0, 0);
  };
  auto dS = [mt, disc, sgn](double x) {
    const CoeffJet c = coeff_jet(mt, v1(x), 0);
    return c.A[0] + sgn * std::sqrt(disc(x));
  };
  const int nprobe = 4096;
  for (int q = 0; q <= nprobe; ++q) {
    const double x = x_lo + (x_hi - x_lo) * q / nprobe;
    if (!(disc(x) > 0.0)) throw DomainError("eikonal turning point near x=" + std::to_string(x));
  }
  EikonalSolution s;
  s.xi = xi;
  s.a = x_lo;
  s.b = x_hi;
  s.direction = dir;
  s.dS = dS;
  const int cells = 1024;
  s.cell_edges.resize(cells + 1);
  s.cumulative.assign(cells + 1, 0.0);
  for (int c = 0; c <= cells; ++c) s.cell_edges[c] = x_lo + (x_hi - x_lo) * c / cells;
  for (int c = 0; c < cells; ++c) s.cumulative[c + 1] = s.cumulative[c] + gauss8(dS, s.cell_edges[c], s.cell_edges[c + 1]);

  // Beyond L/h the truncated coefficients vanish; with a flat metric dS = xi there.
  const double reach = tp.L / tp.h;
  auto excess = [&](double x) { return dS(x) - xi; };
  if (dir == EikonalDirection::outgoing) {
    s.anchor_x = x_hi;
    if (m.flat_metric()) {
      const double end = std::max(x_hi, reach);
      for (double x = x_hi; x < end; x += 1.0)
        if (!(disc(x) > 0.0)) throw DomainError("eikonal turning point near x=" + std::to_string(x));
      s.tail_correction = end > x_hi ? composite(excess, x_hi, end, std::max(8, int(end - x_hi))) : 0.0;
      s.anchor_rule = "right endpoint, S - x xi -> 0 as x -> +inf (tail integrated to L/h)";
    } else {
      s.anchor_rule = "right endpoint, S = x xi there (metric not flat: no tail correction)";
    }
    s.anchor_value = x_hi * xi - s.tail_correction;
  } else {
    s.anchor_x = x_lo;
    if (m.flat_metric()) {
      const double end = std::min(x_lo, -reach);
      for (double x = x_lo; x > end; x -= 1.0)
        if (!(disc(x) > 0.0)) throw DomainError("eikonal turning point near x=" + std::to_string(x));
      s.tail_correction = end < x_lo ? composite(excess, end, x_lo, std::max(8, int(x_lo - end))) : 0.0;
      s.anchor_rule = "left endpoint, S - x xi -> 0 as x -> -inf (tail integrated to -L/h)";
    } else {
      s.anchor_rule = "left endpoint, S = x xi there (metric not flat: no tail correction)";
    }
    s.anchor_value = x_lo * xi + s.tail_correction;
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'S', 'C', 'L', 'T', 'B', 'L', '0', '1'};

struct Payload {
  nlohmann::json arrays = nlohmann::json::array();
  std::vector<double> data;
  void add(const std::string& name, const std::vector<double>& v) {
    arrays.push_back({{"name", name}, {"offset", data.size()}, {"count", v.size()}, {"type", "f64"}});
    data.insert(data.end(), v.begin(), v.end());
  }
  void add(const std::string& name, const std::vector<cplx>& v) {
    arrays.push_back({{"name", name}, {"offset", data.size()}, {"count", v.size()}, {"type", "c128"}});
    for (const auto& z : v) data.push_back(z.real()), data.push_back(z.imag());
  }
  void add(const std::string& name, const std::vector<std::uint8_t>& v) {
    std::vector<double> d(v.begin(), v.end());
    arrays.push_back({{"name", name}, {"offset", data.size()}, {"count", v.size()}, {"type", "u8"}});
    data.insert(data.end(), d.begin(), d.end());
  }
};
}  // namespace

void save_phase_table(const std::string& path, const PhaseTable& T, const AmplitudeSet* A) {
  Payload P;
  P.add("t_grid", T.t_grid);
  P.add("x_grid", T.x_grid);
  P.add("xi_grid", T.xi_grid);
  P.add("psi", T.psi);
  P.add("dpsi_dx", T.dpsi_dx);
  P.add("dpsi_dxi", T.dpsi_dxi);
  P.add("d2psi_dxi2", T.d2psi_dxi2);
  P.add("Y", T.Y);
  P.add("rho", T.rho);
  P.add("ycal", T.ycal);
  P.add("ycal_int", T.ycal_int);
  P.add("on_region", T.on_region);
  nlohmann::json h;
  h["format"] = 1;
  h["model_id"] = T.model_id;
  h["epsilon"] = T.epsilon;
  h["t_eps"] = T.t_eps;
  h["nt"] = T.nt();
  h["nx"] = T.nx();
  h["nk"] = T.nk();
  h["layout"] = "(m * nk + k) * nx + i";
  h["periodic"] = T.periodic ? nlohmann::json{{"d", T.periodic->d}, {"n", T.periodic->n}, {"half_width", T.periodic->half_width}}
                             : nlohmann::json(nullptr);
  h["extension_rule"] = "Psi = x xi - t p + rho (Psi~ - x xi + t p), rho = phi(eps |xi| / (4 <x>))";
  if (A) {
    h["N"] = A->N;
    h["chi"] = A->chi_name;
    for (int j = 0; j < A->N; ++j) P.add("b" + std::to_string(j), A->b[j]);
    P.add("support", A->support);
  } else {
    h["N"] = 0;
  }
  h["arrays"] = P.arrays;
  const std::string hs = h.dump();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  const std::uint64_t len = hs.size();
  f.write(kMagic, 8);
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(hs.data(), std::streamsize(hs.size()));
  f.write(reinterpret_cast<const char*>(P.data.data()), std::streamsize(P.data.size() * sizeof(double)));
  if (!f) throw Error("write failed: " + path);
}

LoadedTables load_phase_table(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) throw Error(path + ": not a phase table container");
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!f || len > (1u << 30)) throw Error(path + ": corrupt header length");
  std::string hs(len, '\0');
  f.read(hs.data(), std::streamsize(len));
  LoadedTables out;
  out.header = nlohmann::json::parse(hs);
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() % sizeof(double)) throw Error(path + ": truncated payload");
  std::vector<double> data(bytes.size() / sizeof(double));
  std::memcpy(data.data(), bytes.data(), bytes.size());
  const auto& h = out.header;
  std::map<std::string, nlohmann::json> arrays;
  for (const auto& a : h.at("arrays")) arrays[a.at("name").get<std::string>()] = a;
  auto span = [&](const std::string& name, size_t width) {
    const auto& a = arrays.at(name);
    const size_t off = a.at("offset"), cnt = a.at("count");
    if (off + cnt * width > data.size()) throw Error(path + ": array " + name + " out of bounds");
    return std::make_pair(off, cnt);
  };
  auto real = [&](const std::string& name) {
    auto [off, cnt] = span(name, 1);
    return std::vector<double>(data.begin() + off, data.begin() + off + cnt);
  };
  auto cx = [&](const std::string& name) {
    auto [off, cnt] = span(name, 2);
    std::vector<cplx> v(cnt);
    for (size_t i = 0; i < cnt; ++i) v[i] = {data[off + 2 * i], data[off + 2 * i + 1]};
    return v;
  };
  auto u8 = [&](const std::string& name) {
    auto r = real(name);
    return std::vector<std::uint8_t>(r.begin(), r.end());
  };
  PhaseTable& T = out.table;
  T.model_id = h.at("model_id");
  T.epsilon = h.at("epsilon");
  T.t_eps = h.at("t_eps");
  T.t_grid = real("t_grid");
  T.x_grid = real("x_grid");
  T.xi_grid = real("xi_grid");
  if (!h.at("periodic").is_null())
    T.periodic = Grid{h["periodic"]["d"], h["periodic"]["n"], h["periodic"]["half_width"]};
  T.psi = real("psi");
  T.dpsi_dx = real("dpsi_dx");
  T.dpsi_dxi = real("dpsi_dxi");
  T.d2psi_dxi2 = real("d2psi_dxi2");
  T.Y = real("Y");
  T.rho = real("rho");
  T.ycal = real("ycal");
  T.ycal_int = real("ycal_int");
  T.on_region = u8("on_region");
  const size_t N = size_t(T.nt()) * T.nk() * T.nx();
  if (T.psi.size() != N) throw Error(path + ": table size mismatch");
  const int order = h.at("N");
  if (order > 0) {
    AmplitudeSet A;
    A.N = order;
    A.chi_name = h.at("chi");
    for (int j = 0; j < order; ++j) A.b.push_back(cx("b" + std::to_string(j)));
    A.support = u8("support");
    out.amps = std::move(A);
  }
  return out;
}

}  // namespace sclab
