#include "sclab/reference_solver.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>

#include <unistd.h>

#include "sclab/harmonic_analysis.hpp"

namespace sclab {

Discretization discretization_from_string(const std::string& s) {
  if (s == "spectral_flat") return Discretization::spectral_flat;
  if (s == "fd4_divergence" || s == "fd4") return Discretization::fd4_divergence;
  throw DomainError("unknown discretization '" + s + "'");
}

std::string to_string(Discretization d) {
  return d == Discretization::spectral_flat ? "spectral_flat" : "fd4_divergence";
}

PropagationMethod propagation_method_from_string(const std::string& s) {
  if (s == "split_step") return PropagationMethod::split_step;
  if (s == "lanczos") return PropagationMethod::lanczos;
  if (s == "eig") return PropagationMethod::eig;
  throw DomainError("unknown propagation method '" + s + "'");
}

std::string to_string(PropagationMethod m) {
  switch (m) {
    case PropagationMethod::split_step: return "split_step";
    case PropagationMethod::lanczos: return "lanczos";
    default: return "eig";
  }
}

namespace {

// fourth-order staggered derivative and midpoint interpolation, offsets -1..2
constexpr double kD4[4] = {1.0 / 24, -27.0 / 24, 27.0 / 24, -1.0 / 24};
constexpr double kI4[4] = {-1.0 / 16, 9.0 / 16, 9.0 / 16, -1.0 / 16};

size_t shift(const Grid& g, size_t idx, int axis, int s) {
  if (g.d == 1) return size_t(((long(idx) + s) % g.n + g.n) % g.n);
  long i0 = long(idx / g.n), i1 = long(idx % g.n);
  if (axis == 0) i0 = ((i0 + s) % g.n + g.n) % g.n;
  else i1 = ((i1 + s) % g.n + g.n) % g.n;
  return size_t(i0) * g.n + size_t(i1);
}

double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) throw EvaluationError(std::string("non-finite ") + what + " on the grid");
  return v;
}

struct Fnv {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, size_t n) {
    auto c = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  }
  template <class T>
  void pod(const T& v) { bytes(&v, sizeof(T)); }
  void str(const std::string& s) { bytes(s.data(), s.size()); }
  void vec(const std::vector<double>& v) { bytes(v.data(), v.size() * sizeof(double)); }
};

}  // namespace

GridState DiscreteHamiltonian::apply(const GridState& u) const {
  if (!(u.grid == grid)) throw DomainError("state grid does not match the Hamiltonian");
  const Grid& g = grid;
  const size_t N = g.size();
  GridState out(g);
  if (disc == Discretization::spectral_flat) {
    const int d = g.d;
    auto uh = fourier(u);
    std::vector<cplx> kin(N);
    const auto ks = kinetic_symbol();
    // kinetic_symbol includes constant A; here we need the pure xi.G.xi part
    // when A varies, so compute directly.
    bool aconst = model.const_magnetic();
    for (size_t i = 0; i < N; ++i) {
      if (aconst) {
        kin[i] = ks[i] * uh[i];
      } else {
        Vec xi = g.freq(i);
        kin[i] = 0.5 * xi.dot(g_const * xi) * uh[i];
      }
    }
    out = inverse_fourier(g, kin);
    if (!aconst) {
      // -1/2 sum_jk G_jk (D_j A_k + A_j D_k) + 1/2 A.G.A
      std::vector<GridState> Du(d, GridState(g));
      for (int j = 0; j < d; ++j) {
        std::vector<cplx> t(N);
        for (size_t i = 0; i < N; ++i) t[i] = g.freq(i)[j] * uh[i];
        Du[j] = inverse_fourier(g, t);
      }
      for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
          const double G = g_const(j, k);
          if (G == 0.0) continue;
          GridState Au(g);
          for (size_t i = 0; i < N; ++i) Au.values[i] = A[k][i] * u.values[i];
          auto ah = fourier(Au);
          for (size_t i = 0; i < N; ++i) ah[i] *= g.freq(i)[j];
          GridState DAu = inverse_fourier(g, ah);
          for (size_t i = 0; i < N; ++i)
            out.values[i] += -0.5 * G * (DAu.values[i] + A[j][i] * Du[k].values[i]) +
                             0.5 * G * A[j][i] * A[k][i] * u.values[i];
        }
      }
    }
    for (size_t i = 0; i < N; ++i) out.values[i] += V[i] * u.values[i];
    return out;
  }
  const double dx = g.dx();
  std::vector<cplx> Bu(N);
  for (int ax = 0; ax < g.d; ++ax) {
    for (size_t m = 0; m < N; ++m) {
      cplx s = 0.0;
      for (int q = 0; q < 4; ++q) {
        const cplx c(-A_mid[ax][m] * kI4[q], -kD4[q] / dx);
        s += c * u.values[shift(g, m, ax, q - 1)];
      }
      Bu[m] = g_mid[ax][m] * s;
    }
    for (size_t m = 0; m < N; ++m) {
      for (int q = 0; q < 4; ++q) {
        const cplx cc(-A_mid[ax][m] * kI4[q], kD4[q] / dx);
        out.values[shift(g, m, ax, q - 1)] += 0.5 * cc * Bu[m];
      }
    }
  }
  for (size_t i = 0; i < N; ++i) out.values[i] += V[i] * u.values[i];
  return out;
}

std::vector<double> DiscreteHamiltonian::kinetic_symbol() const {
  if (disc != Discretization::spectral_flat) throw DomainError("kinetic symbol needs spectral_flat");
  const size_t N = grid.size();
  Vec a = Vec::Zero(grid.d);
  if (model.const_magnetic())
    for (int j = 0; j < grid.d; ++j) a[j] = model.A[j].constant_value();
  std::vector<double> k(N);
  for (size_t i = 0; i < N; ++i) {
    Vec xi = grid.freq(i) - a;
    k[i] = 0.5 * xi.dot(g_const * xi);
  }
  return k;
}

std::uint64_t DiscreteHamiltonian::hash() const {
  Fnv f;
  f.pod(grid.d);
  f.pod(grid.n);
  f.pod(grid.half_width);
  f.pod(int(disc));
  f.str(model.id);
  f.vec(V);
  for (int j = 0; j < grid.d; ++j) {
    f.vec(A[j]);
    f.vec(g_mid[j]);
    f.vec(A_mid[j]);
  }
  if (g_const.size() > 0) f.bytes(g_const.data(), sizeof(double) * g_const.size());
  return f.h;
}

DiscreteHamiltonian build_discrete_hamiltonian(const SymbolModel& m, const Grid& g, Discretization disc,
                                               const std::optional<TruncationParams>& truncation,
                                               std::optional<double> xi_declared) {
  g.validate();
  if (m.dim != g.d) throw DomainError("model and grid dimensions differ");
  if (xi_declared && !(g.n * M_PI / g.half_width >= 4.0 * *xi_declared))
    throw ResolutionError("grid does not resolve the declared frequency (need n pi / L >= 4 xi)");
  DiscreteHamiltonian H;
  H.grid = g;
  H.disc = disc;
  H.truncation = truncation;
  if (truncation) {
    truncation->validate();
    H.model = truncate(m, truncation->h, truncation->L);
  } else {
    H.model = m;
  }
  const SymbolModel& e = H.model;
  const size_t N = g.size();
  const int d = g.d;
  H.real = e.zero_magnetic();
  H.V.resize(N);
  for (size_t i = 0; i < N; ++i) H.V[i] = finite_or_throw(e.V.value(g.point(i)), "potential");

  if (disc == Discretization::spectral_flat) {
    if (!e.const_metric()) throw DomainError("spectral_flat needs a constant metric");
    H.g_const = Mat(d, d);
    const Vec o = Vec::Zero(d);
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) H.g_const(j, k) = e.metric(j, k).value(o);
    for (int j = 0; j < d; ++j) {
      H.A[j].resize(N);
      for (size_t i = 0; i < N; ++i) H.A[j][i] = finite_or_throw(e.A[j].value(g.point(i)), "vector potential");
    }
    H.fourier_diagonal = e.const_magnetic() && e.zero_electric();
  } else {
    if (d == 2 && !e.metric(0, 1).is_zero()) throw DomainError("fd4_divergence in d = 2 needs a diagonal metric");
    for (int ax = 0; ax < d; ++ax) {
      H.g_mid[ax].resize(N);
      H.A_mid[ax].resize(N);
      for (size_t i = 0; i < N; ++i) {
        Vec x = g.point(i);
        x[ax] += 0.5 * g.dx();
        H.g_mid[ax][i] = finite_or_throw(e.metric(ax, ax).value(x), "metric");
        H.A_mid[ax][i] = finite_or_throw(e.A[ax].value(x), "vector potential");
      }
    }
  }

  if (d == 1) {
    const int n = g.n;
    Eigen::MatrixXcd M(n, n);
    GridState unit(g);
    for (int c = 0; c < n; ++c) {
      std::fill(unit.values.begin(), unit.values.end(), cplx(0.0));
      unit.values[c] = 1.0;
      GridState col = H.apply(unit);
      for (int r = 0; r < n; ++r) M(r, c) = col.values[r];
    }
    const double nrm = M.norm();
    H.asymmetry = nrm > 0.0 ? (M - M.adjoint()).norm() / nrm : 0.0;
    H.matrix = 0.5 * (M + M.adjoint());
  }
  return H;
}

// ---------------------------------------------------------------------------
// eigen-decomposition and cache

std::vector<cplx> EigenPairs::project(const GridState& u) const {
  const size_t N = u.values.size();
  std::vector<cplx> c(N);
  if (fourier) {
    dft(grid, u.values.data(), c.data(), -1);
    const double s = 1.0 / std::sqrt(double(N));
    for (auto& v : c) v *= s;
    return c;
  }
  Eigen::Map<const Eigen::VectorXcd> uv(u.values.data(), Eigen::Index(N));
  Eigen::Map<Eigen::VectorXcd> cv(c.data(), Eigen::Index(N));
  if (real) cv = rvectors.transpose().cast<cplx>() * uv;
  else cv = vectors.adjoint() * uv;
  return c;
}

GridState EigenPairs::expand(const std::vector<cplx>& c) const {
  GridState u(grid);
  const size_t N = c.size();
  if (fourier) {
    dft(grid, c.data(), u.values.data(), +1);
    const double s = 1.0 / std::sqrt(double(N));
    for (auto& v : u.values) v *= s;
    return u;
  }
  Eigen::Map<const Eigen::VectorXcd> cv(c.data(), Eigen::Index(N));
  Eigen::Map<Eigen::VectorXcd> uv(u.values.data(), Eigen::Index(N));
  if (real) uv = rvectors.cast<cplx>() * cv;
  else uv = vectors * cv;
  return u;
}

GridState EigenPairs::apply(const std::function<cplx(double)>& f, const GridState& u) const {
  auto c = project(u);
  for (size_t i = 0; i < c.size(); ++i) c[i] *= f(values[Eigen::Index(i)]);
  return expand(c);
}

namespace {

std::mutex cache_mutex;
std::map<std::uint64_t, std::weak_ptr<const EigenPairs>> memory_cache;
std::optional<std::string> cache_dir_override;

constexpr char kEigMagic[8] = {'S', 'C', 'L', 'E', 'I', 'G', '0', '1'};

std::shared_ptr<EigenPairs> read_cached(const std::string& path, const Grid& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return nullptr;
  char magic[8];
  std::int64_t n = 0, real = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&real), sizeof real);
  if (!in || std::memcmp(magic, kEigMagic, 8) != 0 || n != g.n) return nullptr;
  auto e = std::make_shared<EigenPairs>();
  e->grid = g;
  e->real = real != 0;
  e->values.resize(n);
  in.read(reinterpret_cast<char*>(e->values.data()), std::streamsize(n * sizeof(double)));
  if (e->real) {
    e->rvectors.resize(n, n);
    in.read(reinterpret_cast<char*>(e->rvectors.data()), std::streamsize(n * n * sizeof(double)));
  } else {
    e->vectors.resize(n, n);
    in.read(reinterpret_cast<char*>(e->vectors.data()), std::streamsize(n * n * sizeof(cplx)));
  }
  if (!in) return nullptr;
  return e;
}

void write_cached(const std::string& path, const EigenPairs& e) {
  std::error_code ec;
  std::filesystem::create_directories(std::filesystem::path(path).parent_path(), ec);
  if (ec) return;
  const std::string tmp = path + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) return;
    const std::int64_t n = e.values.size(), real = e.real ? 1 : 0;
    out.write(kEigMagic, 8);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&real), sizeof real);
    out.write(reinterpret_cast<const char*>(e.values.data()), std::streamsize(n * sizeof(double)));
    if (e.real) out.write(reinterpret_cast<const char*>(e.rvectors.data()), std::streamsize(n * n * sizeof(double)));
    else out.write(reinterpret_cast<const char*>(e.vectors.data()), std::streamsize(n * n * sizeof(cplx)));
    if (!out) {
      std::filesystem::remove(tmp, ec);
      return;
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) std::filesystem::remove(tmp, ec);
}

std::shared_ptr<EigenPairs> compute_eigen(const DiscreteHamiltonian& Hd) {
  auto e = std::make_shared<EigenPairs>();
  e->grid = Hd.grid;
  const int n = Hd.grid.n;
  e->real = Hd.real;
  e->values.resize(n);
  lapack_int info;
  if (Hd.real) {
    e->rvectors = Hd.matrix.real();
    info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, e->rvectors.data(), n, e->values.data());
  } else {
    e->vectors = Hd.matrix;
    info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'U', n, reinterpret_cast<lapack_complex_double*>(e->vectors.data()),
                          n, e->values.data());
  }
  if (info != 0) throw Error("dense eigensolver failed (info " + std::to_string(info) + ")");
  return e;
}

}  // namespace

void set_eig_cache_dir(const std::string& dir) {
  std::lock_guard<std::mutex> lock(cache_mutex);
  cache_dir_override = dir;
}

std::string eig_cache_dir() {
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    if (cache_dir_override) return *cache_dir_override;
  }
  if (const char* s = std::getenv("SCLAB_EIG_CACHE")) return std::string(s) == "off" ? std::string() : s;
  if (const char* s = std::getenv("XDG_CACHE_HOME")) return std::string(s) + "/sclab";
  if (const char* s = std::getenv("HOME")) return std::string(s) + "/.cache/sclab";
  return {};
}

std::shared_ptr<const EigenPairs> eigen_pairs(const DiscreteHamiltonian& Hd) {
  if (Hd.grid.d != 1) throw DomainError("dense eigen-decomposition is one-dimensional");
  if (Hd.grid.n > kMaxEigSize) throw DomainError("dense eigen-decomposition limited to n <= 2048");
  if (Hd.fourier_diagonal) {
    auto e = std::make_shared<EigenPairs>();
    e->grid = Hd.grid;
    e->fourier = true;
    const auto k = Hd.kinetic_symbol();
    e->values = Eigen::Map<const Eigen::VectorXd>(k.data(), Eigen::Index(k.size()));
    return e;
  }
  const std::uint64_t key = Hd.hash();
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = memory_cache.find(key);
    if (it != memory_cache.end())
      if (auto sp = it->second.lock()) return sp;
  }
  const std::string dir = eig_cache_dir();
  char name[32];
  std::snprintf(name, sizeof name, "%016llx.eig", static_cast<unsigned long long>(key));
  const std::string path = dir.empty() ? std::string() : dir + "/" + name;
  std::shared_ptr<EigenPairs> e;
  if (!path.empty()) e = read_cached(path, Hd.grid);
  if (!e || e->real != Hd.real) {
    e = compute_eigen(Hd);
    if (!path.empty()) write_cached(path, *e);
  }
  std::lock_guard<std::mutex> lock(cache_mutex);
  memory_cache[key] = e;
  return e;
}

// ---------------------------------------------------------------------------
// propagation

namespace {

GridState split_step(const DiscreteHamiltonian& Hd, const GridState& u, double t, double dt) {
  if (Hd.disc != Discretization::spectral_flat || !Hd.model.const_magnetic())
    throw DomainError("split_step needs spectral_flat with constant metric and constant vector potential");
  if (!(dt > 0.0)) throw DomainError("split_step needs dt > 0");
  const Grid& g = Hd.grid;
  const size_t N = g.size();
  const long steps = std::max(1L, long(std::ceil(std::abs(t) / dt)));
  const double tau = t / double(steps);
  std::vector<cplx> halfV(N), kin(N);
  const auto ks = Hd.kinetic_symbol();
  for (size_t i = 0; i < N; ++i) {
    halfV[i] = std::exp(cplx(0.0, -0.5 * tau * Hd.V[i]));
    kin[i] = std::exp(cplx(0.0, -tau * ks[i])) / double(N);
  }
  std::vector<cplx> a = u.values, b(N);
  for (long s = 0; s < steps; ++s) {
    for (size_t i = 0; i < N; ++i) a[i] *= halfV[i];
    dft(g, a.data(), b.data(), -1);
    for (size_t i = 0; i < N; ++i) b[i] *= kin[i];
    dft(g, b.data(), a.data(), +1);
    for (size_t i = 0; i < N; ++i) a[i] *= halfV[i];
  }
  GridState out(g);
  out.values = std::move(a);
  return out;
}

GridState lanczos(const DiscreteHamiltonian& Hd, const GridState& u, double t, int m, double tol) {
  if (m < 2) throw DomainError("Krylov dimension must be >= 2");
  const Grid& g = Hd.grid;
  const Eigen::Index N = Eigen::Index(g.size());
  Eigen::VectorXcd w = Eigen::Map<const Eigen::VectorXcd>(u.values.data(), N);
  const double sgn = t < 0 ? -1.0 : 1.0;
  double remaining = std::abs(t);
  double tau_try = remaining;
  GridState tmp(g);
  auto Hv = [&](const Eigen::VectorXcd& v) {
    std::copy(v.data(), v.data() + N, tmp.values.begin());
    GridState r = Hd.apply(tmp);
    return Eigen::VectorXcd(Eigen::Map<const Eigen::VectorXcd>(r.values.data(), N));
  };
  while (remaining > 0.0) {
    const double beta0 = w.norm();
    if (beta0 == 0.0) break;
    const int mm = int(std::min<Eigen::Index>(m, N));
    Eigen::MatrixXcd Q(N, mm);
    std::vector<double> alpha, beta;
    Q.col(0) = w / beta0;
    int k = 0;
    bool breakdown = false;
    double beta_last = 0.0;
    for (k = 0; k < mm; ++k) {
      Eigen::VectorXcd v = Hv(Q.col(k));
      const double a = Q.col(k).dot(v).real();
      alpha.push_back(a);
      // full reorthogonalization, twice
      for (int pass = 0; pass < 2; ++pass) v -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).adjoint() * v);
      const double b = v.norm();
      beta_last = b;
      if (b <= 1e-13 * std::abs(a) + 1e-300) {
        breakdown = true;
        ++k;
        break;
      }
      if (k + 1 < mm) {
        beta.push_back(b);
        Q.col(k + 1) = v / b;
      }
    }
    const int dim = int(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) T(i, i) = alpha[i];
    for (int i = 0; i + 1 < dim; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::VectorXd& th = es.eigenvalues();
    const Eigen::MatrixXd& S = es.eigenvectors();
    for (;;) {
      const double tau = std::min(tau_try, remaining);
      Eigen::VectorXcd y(dim);
      for (int i = 0; i < dim; ++i) {
        cplx s = 0.0;
        for (int q = 0; q < dim; ++q) s += S(i, q) * std::exp(cplx(0.0, -sgn * tau * th[q])) * S(0, q);
        y[i] = s;
      }
      const double err = breakdown ? 0.0 : beta_last * std::abs(y[dim - 1]);
      // y is only known to round-off, so the estimate never drops below this
      const double floor = 16.0 * dim * std::numeric_limits<double>::epsilon() * beta_last;
      if (err <= std::max(tol * tau, floor)) {
        w = beta0 * (Q.leftCols(dim) * y);
        remaining -= tau;
        tau_try = std::min(1.5 * tau, std::abs(t));
        break;
      }
      tau_try = 0.5 * tau;
      if (tau_try < 1e-13 * std::abs(t)) throw IntegrationError("Krylov stagnation", sgn * (std::abs(t) - remaining));
    }
  }
  GridState out(g);
  std::copy(w.data(), w.data() + N, out.values.begin());
  return out;
}

}  // namespace

GridState propagate(const DiscreteHamiltonian& Hd, const GridState& u, double t, PropagationMethod method,
                    const PropagateOptions& opt) {
  if (!(u.grid == Hd.grid)) throw DomainError("state grid does not match the Hamiltonian");
  if (t == 0.0) return u;
  switch (method) {
    case PropagationMethod::split_step: return split_step(Hd, u, t, opt.dt);
    case PropagationMethod::lanczos: return lanczos(Hd, u, t, opt.krylov_dim, opt.tol);
    default: {
      auto e = eigen_pairs(Hd);
      return e->apply([t](double l) { return std::exp(cplx(0.0, -t * l)); }, u);
    }
  }
}

EigenPropagator::EigenPropagator(std::shared_ptr<const EigenPairs> eig, const GridState& u)
    : eig_(std::move(eig)), c_(eig_->project(u)) {}

GridState EigenPropagator::at(double t) const {
  std::vector<cplx> c = c_;
  for (size_t i = 0; i < c.size(); ++i) c[i] *= std::exp(cplx(0.0, -t * eig_->values[Eigen::Index(i)]));
  return eig_->expand(c);
}

GridState spectral_function(const DiscreteHamiltonian& Hd, const std::function<double(double)>& f, double h,
                            const GridState& u) {
  if (!(h > 0.0)) throw DomainError("h must be positive");
  auto e = eigen_pairs(Hd);
  const double h2 = h * h;
  return e->apply([&](double l) { return cplx(f(h2 * l)); }, u);
}

// ---------------------------------------------------------------------------

NormEstimate estimate_operator_norm(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& A,
                                    const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& A_adj, int n,
                                    std::uint64_t seed, int iterations, int restarts) {
  if (iterations < 1 || restarts < 1) throw DomainError("power iteration needs iterations, restarts >= 1");
  NormEstimate out;
  out.converged = true;
  out.iterations = iterations;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXcd x(n);
    for (int i = 0; i < n; ++i) x[i] = cplx(nd(rng), nd(rng));
    x /= x.norm();
    double est = 0.0, prev = 0.0;
    for (int it = 0; it < iterations; ++it) {
      Eigen::VectorXcd y = A(x);
      prev = est;
      est = y.norm();
      Eigen::VectorXcd z = A_adj(y);
      const double zn = z.norm();
      if (zn == 0.0) {
        est = 0.0;
        prev = 0.0;
        break;
      }
      x = z / zn;
    }
    out.per_restart.push_back(est);
    out.value = std::max(out.value, est);
    if (est > 0.0 && std::abs(est - prev) > 1e-3 * est) out.converged = false;
  }
  return out;
}

PdoOperator PdoOperator::from_samples(const Eigen::MatrixXcd& S, const Grid& g) {
  g.validate();
  if (g.d != 1) throw DomainError("dense symbol operators are one-dimensional");
  if (S.rows() != g.n || S.cols() != g.n) throw DomainError("symbol sample matrix has the wrong size");
  PdoOperator P;
  P.grid = g;
  P.W.resize(g.n, g.n);
  const double w = g.dxi() / (2.0 * M_PI);
  for (int k = 0; k < g.n; ++k) {
    const double eta = g.xi(k);
    for (int j = 0; j < g.n; ++j) P.W(j, k) = std::exp(cplx(0.0, g.x(j) * eta)) * S(j, k) * w;
  }
  return P;
}

PdoOperator PdoOperator::from_symbol(const Symbol& a, const Grid& g, double h) {
  g.validate();
  if (g.d != 1) throw DomainError("dense symbol operators are one-dimensional");
  Eigen::MatrixXcd S(g.n, g.n);
  for (int k = 0; k < g.n; ++k) {
    const Vec hxi = Vec::Constant(1, h * g.xi(k));
    for (int j = 0; j < g.n; ++j) S(j, k) = a.a(Vec::Constant(1, g.x(j)), hxi);
  }
  return from_samples(S, g);
}

Eigen::VectorXcd PdoOperator::apply(const Eigen::VectorXcd& u) const {
  GridState s(grid);
  std::copy(u.data(), u.data() + u.size(), s.values.begin());
  auto uh = fourier(s);
  return W * Eigen::Map<const Eigen::VectorXcd>(uh.data(), Eigen::Index(uh.size()));
}

Eigen::VectorXcd PdoOperator::apply_adjoint(const Eigen::VectorXcd& v) const {
  // F* y = dx DFT^+((-1)^k y_k)
  Eigen::VectorXcd y = W.adjoint() * v;
  for (Eigen::Index k = 1; k < y.size(); k += 2) y[k] = -y[k];
  Eigen::VectorXcd out(y.size());
  dft(grid, y.data(), out.data(), +1);
  return out * grid.dx();
}

namespace {

Eigen::VectorXcd eig_apply(const EigenPairs& e, const std::function<cplx(double)>& f, const Eigen::VectorXcd& v) {
  GridState s(e.grid);
  std::copy(v.data(), v.data() + v.size(), s.values.begin());
  GridState r = e.apply(f, s);
  return Eigen::Map<const Eigen::VectorXcd>(r.values.data(), v.size());
}

}  // namespace

FcGapResult functional_calculus_gap(const DiscreteHamiltonian& Hd, const SymbolModel& m, double h, double eps,
                                    const std::function<double(double)>& f, const FcGapOptions& opt) {
  if (!(h > 0.0 && h <= 1.0)) throw DomainError("h must lie in (0, 1]");
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  const Grid& g = Hd.grid;
  FcGapResult res;
  res.h = h;
  res.eps = eps;
  res.symbol_eps = opt.symbol_eps.value_or(eps);
  const PsiEpsilon psi = build_psi_epsilon(eps), psi_s = build_psi_epsilon(res.symbol_eps);
  auto e = eigen_pairs(Hd);
  const PdoOperator P = PdoOperator::from_symbol(
      Symbol::general([psi](const Vec& x, const Vec& xi) { return cplx(psi.psi(x, xi)); }), g, 1.0);
  const PdoOperator Q = PdoOperator::from_symbol(
      Symbol::general([&, h](const Vec& x, const Vec& z) {
        const Vec xi = z / h;
        return cplx(psi_s.psi(x, xi) * f(h * h * eval_symbol_p(m, x, xi)));
      }),
      g, h);
  const double h2 = h * h;
  auto fl = [&](double l) { return cplx(f(h2 * l)); };
  auto A = [&](const Eigen::VectorXcd& x) -> Eigen::VectorXcd { return P.apply(eig_apply(*e, fl, x)) - Q.apply(x); };
  auto Aa = [&](const Eigen::VectorXcd& y) -> Eigen::VectorXcd {
    return eig_apply(*e, fl, P.apply_adjoint(y)) - Q.apply_adjoint(y);
  };
  res.norm = estimate_operator_norm(A, Aa, g.n, opt.seed, opt.iterations, opt.restarts);
  return res;
}

EgorovResult egorov_check(const DiscreteHamiltonian& Hd, const SymbolModel& m, const Symbol& eta, double t, double h,
                          const EgorovOptions& opt) {
  if (!(h > 0.0 && h <= 1.0)) throw DomainError("h must lie in (0, 1]");
  const Grid& g = Hd.grid;
  if (g.d != 1) throw DomainError("Egorov checks are one-dimensional");
  EgorovResult res;
  res.t = t;
  res.h = h;
  auto e = eigen_pairs(Hd);
  const PdoOperator E = PdoOperator::from_symbol(eta, g, h);
  Eigen::MatrixXcd S(g.n, g.n);
  FlowOptions fo;
  fo.tol = opt.flow_tol;
  fo.track_energy = false;
  for (int k = 0; k < g.n; ++k) {
    for (int j = 0; j < g.n; ++j) {
      const Vec x = Vec::Constant(1, g.x(j));
      const Vec xi = Vec::Constant(1, g.xi(k));
      if (t == 0.0) {
        S(j, k) = eta.a(x, Vec(h * xi));
        continue;
      }
      FlowResult fr;
      try {
        fr = integrate_characteristic(m, x, xi, {t}, fo);
      } catch (const IntegrationError& ex) {
        throw IntegrationError("flow evaluation failed at a quadrature node: " + std::string(ex.what()), ex.t_reached);
      }
      ++res.flows;
      S(j, k) = eta.a(fr.X.back(), Vec(h * fr.Xi.back()));
    }
  }
  const PdoOperator Sg = PdoOperator::from_samples(S, g);
  auto U = [&](double s, const Eigen::VectorXcd& v) {
    return eig_apply(*e, [s](double l) { return std::exp(cplx(0.0, -s * l)); }, v);
  };
  auto A = [&](const Eigen::VectorXcd& x) -> Eigen::VectorXcd { return U(-t, E.apply(U(t, x))) - Sg.apply(x); };
  auto Aa = [&](const Eigen::VectorXcd& y) -> Eigen::VectorXcd {
    return U(-t, E.apply_adjoint(U(t, y))) - Sg.apply_adjoint(y);
  };
  res.norm = estimate_operator_norm(A, Aa, g.n, opt.seed, opt.iterations, opt.restarts);
  return res;
}

}  // namespace sclab
