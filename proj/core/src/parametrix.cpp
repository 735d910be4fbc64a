#include "sclab/parametrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sclab {

Symbol Symbol::general(std::function<cplx(const Vec&, const Vec&)> f) { return {Kind::general, std::move(f)}; }

Symbol Symbol::multiplier(std::function<cplx(const Vec&)> f) {
  return {Kind::multiplier, [f](const Vec&, const Vec& xi) { return f(xi); }};
}

Symbol Symbol::multiplication(std::function<cplx(const Vec&)> f) {
  return {Kind::multiplication, [f](const Vec& x, const Vec&) { return f(x); }};
}

Symbol Symbol::identity() {
  return {Kind::multiplier, [](const Vec&, const Vec&) { return cplx(1.0); }};
}

namespace {

// The single accumulation path shared by apply_pdo and apply_fio, so that the
// t = 0 FIO reproduces the PDO bit for bit.
inline void kn_accumulate(cplx& acc, double phase, cplx amp, cplx c) { acc += std::exp(cplx(0.0, phase)) * amp * c; }

std::vector<size_t> ascending_nodes(const Grid& g) {
  std::vector<size_t> idx(g.size());
  std::iota(idx.begin(), idx.end(), size_t(0));
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    Vec fa = g.freq(a), fb = g.freq(b);
    for (int j = 0; j < g.d; ++j)
      if (fa[j] != fb[j]) return fa[j] < fb[j];
    return false;
  });
  return idx;
}

void guard_tail(double tail, QuantizationDiagnostics* diag) {
  if (tail > kTailError)
    throw ResolutionError("frequency tail mass " + std::to_string(tail) + " exceeds " + std::to_string(kTailError));
  if (diag) {
    diag->tail_mass = tail;
    if (tail > kTailWarn) diag->warnings.push_back("frequency tail mass " + std::to_string(tail));
  }
}

}  // namespace

GridState apply_pdo(const Symbol& a, const GridState& u, double h, QuantizationDiagnostics* diag) {
  const Grid& g = u.grid;
  g.validate();
  if (!(h > 0.0)) throw DomainError("h must be positive");
  guard_tail(spectral_tail_mass(u), diag);
  if (a.kind == Symbol::Kind::multiplication) {
    const Vec zero = Vec::Zero(g.d);
    return multiply(u, [&](const Vec& x) { return a.a(x, zero); });
  }
  if (a.kind == Symbol::Kind::multiplier) {
    const Vec zero = Vec::Zero(g.d);
    return fourier_multiplier(u, [&](const Vec& xi) { return a.a(zero, Vec(h * xi)); });
  }
  const auto uh = fourier(u);
  const double w = std::pow(g.dxi() / (2.0 * M_PI), g.d);
  const auto nodes = ascending_nodes(g);
  std::vector<cplx> c(nodes.size());
  std::vector<Vec> eta(nodes.size());
  for (size_t q = 0; q < nodes.size(); ++q) {
    c[q] = uh[nodes[q]] * w;
    eta[q] = g.freq(nodes[q]);
  }
  GridState out(g);
  for (size_t j = 0; j < g.size(); ++j) {
    const Vec x = g.point(j);
    cplx acc = 0.0;
    for (size_t q = 0; q < nodes.size(); ++q) {
      const double phase = g.d == 1 ? x[0] * eta[q][0] : x[0] * eta[q][0] + x[1] * eta[q][1];
      const Vec hxi = h * eta[q];
      kn_accumulate(acc, phase, a.a(x, hxi), c[q]);
    }
    out.values[j] = acc;
  }
  return out;
}

Eigen::MatrixXcd pdo_matrix(const Symbol& a, const Grid& g, double h) {
  g.validate();
  if (g.d != 1) throw DomainError("dense PDO matrices are one-dimensional");
  const int n = g.n;
  Eigen::MatrixXcd W(n, n), F(n, n);
  const double w = g.dxi() / (2.0 * M_PI);
  for (int m = 0; m < n; ++m) {
    const double eta = g.xi(m);
    for (int j = 0; j < n; ++j) {
      const double x = g.x(j);
      W(j, m) = std::exp(cplx(0.0, x * eta)) * a.a(Vec::Constant(1, x), Vec::Constant(1, h * eta)) * w;
      F(m, j) = g.dx() * std::exp(cplx(0.0, -x * eta));
    }
  }
  return W * F;
}

GridState apply_fio(const PhaseTable& T, const AmplitudeSet& A, double t, const GridState& u, int order,
                    QuantizationDiagnostics* diag) {
  if (!T.periodic || !(*T.periodic == u.grid)) throw DomainError("FIO table x grid must match the state grid");
  const Grid& g = u.grid;
  int m = -1;
  for (int q = 0; q < T.nt(); ++q)
    if (std::abs(T.t_grid[q] - t) <= 1e-14 * std::max(1.0, std::abs(t))) m = q;
  if (m < 0) throw DomainError("t is not a node of the phase table");
  const int ord = order < 0 ? A.N : std::min(order, A.N);
  const auto uh = fourier(u);
  const double w = g.dxi() / (2.0 * M_PI);

  std::vector<int> kfft(T.nk());
  double used = 0.0, total = 0.0;
  for (const auto& v : uh) total += std::norm(v);
  for (int k = 0; k < T.nk(); ++k) {
    const double xi = T.xi_grid[k];
    const long r = std::lround(xi / g.dxi());
    const int kk = int(((r % g.n) + g.n) % g.n);
    if (std::abs(g.xi(kk) - xi) > 1e-9 * g.dxi()) throw DomainError("table xi node is not on the dual grid");
    kfft[k] = kk;
    used += std::norm(uh[kk]);
  }
  guard_tail(total > 0.0 ? std::max(0.0, 1.0 - used / total) : 0.0, diag);

  std::vector<int> order_k(T.nk());
  std::iota(order_k.begin(), order_k.end(), 0);
  std::stable_sort(order_k.begin(), order_k.end(), [&](int a, int b) { return T.xi_grid[a] < T.xi_grid[b]; });
  std::vector<cplx> c(T.nk());
  for (int k = 0; k < T.nk(); ++k) c[k] = uh[kfft[k]] * w;

  GridState out(g);
  for (int i = 0; i < T.nx(); ++i) {
    cplx acc = 0.0;
    for (int k : order_k) {
      const size_t idx = T.index(m, k, i);
      kn_accumulate(acc, T.psi[idx], A.total(idx, ord), c[k]);
    }
    out.values[i] = acc;
  }
  return out;
}

FioKernelSample fio_kernel(const PhaseTable& T, const AmplitudeSet& A, int m, int i, double y, int order) {
  if (m < 0 || m >= T.nt() || i < 0 || i >= T.nx()) throw DomainError("kernel sample index out of range");
  const int ord = order < 0 ? A.N : std::min(order, A.N);
  const int nk = T.nk();
  std::vector<int> ks(nk);
  std::iota(ks.begin(), ks.end(), 0);
  std::stable_sort(ks.begin(), ks.end(), [&](int a, int b) { return T.xi_grid[a] < T.xi_grid[b]; });
  auto integrand = [&](int k) {
    const size_t idx = T.index(m, k, i);
    return std::exp(cplx(0.0, T.psi[idx] - y * T.xi_grid[k])) * A.total(idx, ord);
  };
  auto trap = [&](int stride) {
    cplx s = 0.0;
    int prev = -1;
    cplx fprev;
    for (int q = 0; q < nk; q += stride) {
      const int k = ks[q];
      const cplx f = integrand(k);
      if (prev >= 0) s += 0.5 * (T.xi_grid[k] - T.xi_grid[prev]) * (f + fprev);
      prev = k;
      fprev = f;
    }
    return s / (2.0 * M_PI);
  };
  FioKernelSample s;
  s.t = T.t_grid[m];
  s.x = T.x_grid[i];
  s.y = y;
  s.method = KernelMethod::direct_quadrature;
  s.value = trap(1);
  s.error_estimate = nk >= 5 ? std::abs(s.value - trap(2)) : INFINITY;
  return s;
}

FioKernelSample fio_kernel_stationary(const SymbolModel& m, const AmplitudeCutoff& chi, double t, double x, double y,
                                      double xi_guess, double xi_step) {
  if (m.dim != 1) throw DomainError("stationary-phase kernels are one-dimensional");
  if (!(t >= 10.0 * xi_step)) throw DomainError("stationary phase refuses t below 10 xi-steps (no localization)");
  FlowOptions opt;
  opt.tol = 1e-12;
  opt.jacobian = true;
  opt.action = true;
  opt.transport = true;
  opt.track_energy = false;
  const Vec yv = Vec::Constant(1, y);
  double xi = xi_guess;
  FlowResult fr;
  for (int it = 0;; ++it) {
    fr = integrate_characteristic(m, yv, Vec::Constant(1, xi), {t}, opt);
    const double F = fr.X.back()[0] - x;
    if (std::abs(F) <= 1e-12 * japanese(x * x)) break;
    if (it >= 50) throw InversionError("critical point search did not converge", std::abs(F));
    const double dF = fr.jac.back()(0, 1);
    if (dF == 0.0) throw InversionError("degenerate critical point", std::abs(F));
    xi -= F / dF;
  }
  const PhaseMat& J = fr.jac.back();
  const double psi2 = -J(0, 1) / J(0, 0);
  const double amp0 = chi.value(y, xi);
  const double b = amp0 * std::exp(-fr.transport.back());
  const double sgn = psi2 > 0 ? 1.0 : -1.0;
  FioKernelSample s;
  s.t = t;
  s.x = x;
  s.y = y;
  s.method = KernelMethod::stationary_phase;
  s.value = b * std::exp(cplx(0.0, fr.action.back() + sgn * M_PI / 4)) * std::sqrt(2.0 * M_PI / std::abs(psi2)) /
            (2.0 * M_PI);
  // leading correction: amplitude curvature over the phase curvature
  const double d = 1e-3;
  const double bpp = (chi.value(y, xi + d) - 2.0 * amp0 + chi.value(y, xi - d)) / (d * d);
  s.error_estimate = amp0 != 0.0 ? std::abs(s.value) * std::abs(bpp / amp0) / (2.0 * std::abs(psi2)) : 0.0;
  return s;
}

DispersiveResult dispersive_constant(const PhaseTable& T, const AmplitudeSet& A, const std::vector<int>& t_indices,
                                     const std::vector<int>& x_indices,
                                     const std::function<std::vector<double>(double, double)>& ys, int order) {
  DispersiveResult out;
  for (int m : t_indices) {
    const double t = T.t_grid.at(m);
    if (!(t > 0.0)) throw DomainError("dispersive scans need t > 0");
    for (int i : x_indices) {
      for (double y : ys(t, T.x_grid.at(i))) {
        FioKernelSample s = fio_kernel(T, A, m, i, y, order);
        const double v = std::sqrt(t) * std::abs(s.value);
        if (v > out.sup) {
          out.sup = v;
          out.t_arg = t;
          out.x_arg = s.x;
          out.y_arg = y;
        }
        out.samples.push_back(s);
      }
    }
  }
  return out;
}

double lq_norm(const GridState& u, double q, const std::optional<NormWeight>& weight) {
  const Grid& g = u.grid;
  if (!(q >= 1.0)) throw DomainError("q must be >= 1");
  double acc = 0.0;
  for (size_t i = 0; i < u.values.size(); ++i) {
    double v = std::abs(u.values[i]);
    if (weight) v *= weight->w(g.point(i));
    if (std::isinf(q)) acc = std::max(acc, v);
    else acc += std::pow(v, q);
  }
  return std::isinf(q) ? acc : std::pow(acc * std::pow(g.dx(), g.d), 1.0 / q);
}

double mixed_norm(const std::vector<GridState>& snaps, const std::vector<double>& times, double p, double q,
                  const std::optional<NormWeight>& weight) {
  if (snaps.size() != times.size() || snaps.empty()) throw DomainError("snapshots and times must match");
  if (!(p >= 1.0)) throw DomainError("p must be >= 1");
  std::vector<double> nq(snaps.size());
  for (size_t k = 0; k < snaps.size(); ++k) nq[k] = lq_norm(snaps[k], q, weight);
  if (std::isinf(p)) return *std::max_element(nq.begin(), nq.end());
  if (snaps.size() == 1) return nq[0];
  double acc = 0.0;
  for (size_t k = 0; k + 1 < snaps.size(); ++k)
    acc += 0.5 * (times[k + 1] - times[k]) * (std::pow(nq[k], p) + std::pow(nq[k + 1], p));
  return std::pow(acc, 1.0 / p);
}

double composition_gap(const Symbol& a, const Symbol& b, const GridState& u, double h) {
  Symbol ab = Symbol::general([a, b](const Vec& x, const Vec& xi) { return a.a(x, xi) * b.a(x, xi); });
  GridState lhs = apply_pdo(a, apply_pdo(b, u, h), h);
  GridState rhs = apply_pdo(ab, u, h);
  return (lhs - rhs).norm();
}

}  // namespace sclab
