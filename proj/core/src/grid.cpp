#include "sclab/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace sclab {

void Grid::validate() const {
  if (d != 1 && d != 2) throw DomainError("grids support d = 1 or 2");
  if (n < 4 || (n & (n - 1)) != 0) throw DomainError("grid size must be a power of two >= 4");
  if (!(half_width > 0.0)) throw DomainError("grid half width must be positive");
}

double Grid::dxi() const { return M_PI / half_width; }

Vec Grid::point(size_t idx) const {
  Vec p(d);
  if (d == 1) {
    p[0] = x(int(idx));
  } else {
    p[0] = x(int(idx / n));
    p[1] = x(int(idx % n));
  }
  return p;
}

Vec Grid::freq(size_t idx) const {
  Vec p(d);
  if (d == 1) {
    p[0] = xi(int(idx));
  } else {
    p[0] = xi(int(idx / n));
    p[1] = xi(int(idx % n));
  }
  return p;
}

double GridState::norm() const {
  double s = 0.0;
  for (const auto& v : values) s += std::norm(v);
  return std::sqrt(s * std::pow(grid.dx(), grid.d));
}

GridState& GridState::operator+=(const GridState& o) {
  if (!(grid == o.grid)) throw DomainError("grid mismatch");
  for (size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
  return *this;
}

GridState& GridState::operator-=(const GridState& o) {
  if (!(grid == o.grid)) throw DomainError("grid mismatch");
  for (size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
  return *this;
}

GridState& GridState::operator*=(cplx c) {
  for (auto& v : values) v *= c;
  return *this;
}

GridState operator+(GridState a, const GridState& b) { return a += b; }
GridState operator-(GridState a, const GridState& b) { return a -= b; }
GridState operator*(cplx c, GridState a) { return a *= c; }

cplx inner(const GridState& a, const GridState& b) {
  if (!(a.grid == b.grid)) throw DomainError("grid mismatch");
  cplx s = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) s += std::conj(a.values[i]) * b.values[i];
  return s * std::pow(a.grid.dx(), a.grid.d);
}

namespace {

std::mutex plan_mutex;

fftw_plan get_plan(int d, int n, int sign) {
  static std::map<std::tuple<int, int, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto key = std::make_tuple(d, n, sign);
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  const size_t sz = d == 1 ? size_t(n) : size_t(n) * n;
  fftw_complex* a = fftw_alloc_complex(sz);
  fftw_complex* b = fftw_alloc_complex(sz);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan p = d == 1 ? fftw_plan_dft_1d(n, a, b, sign, flags) : fftw_plan_dft_2d(n, n, a, b, sign, flags);
  fftw_free(a);
  fftw_free(b);
  plans.emplace(key, p);
  return p;
}

}  // namespace

void dft(const Grid& g, const cplx* in, cplx* out, int sign) {
  if (in == out) {
    std::vector<cplx> tmp(in, in + g.size());
    dft(g, tmp.data(), out, sign);
    return;
  }
  fftw_plan p = get_plan(g.d, g.n, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)), reinterpret_cast<fftw_complex*>(out));
}

namespace {
// (-1)^{m} per axis from the x_0 = -half_width offset
inline double alt_sign(const Grid& g, size_t idx) {
  if (g.d == 1) return (idx & 1) ? -1.0 : 1.0;
  size_t k0 = idx / g.n, k1 = idx % g.n;
  return ((k0 + k1) & 1) ? -1.0 : 1.0;
}
}  // namespace

std::vector<cplx> fourier(const GridState& u) {
  const Grid& g = u.grid;
  std::vector<cplx> out(g.size());
  dft(g, u.values.data(), out.data(), -1);
  const double s = std::pow(g.dx(), g.d);
  for (size_t i = 0; i < out.size(); ++i) out[i] *= s * alt_sign(g, i);
  return out;
}

GridState inverse_fourier(const Grid& g, const std::vector<cplx>& uhat) {
  if (uhat.size() != g.size()) throw DomainError("spectrum size mismatch");
  std::vector<cplx> tmp(uhat.size());
  for (size_t i = 0; i < tmp.size(); ++i) tmp[i] = uhat[i] * alt_sign(g, i);
  GridState u(g);
  dft(g, tmp.data(), u.values.data(), +1);
  const double s = 1.0 / std::pow(g.dx() * g.n, g.d);
  for (auto& v : u.values) v *= s;
  return u;
}

double spectral_norm(const Grid& g, const std::vector<cplx>& uhat) {
  double s = 0.0;
  for (const auto& v : uhat) s += std::norm(v);
  return std::sqrt(s * std::pow(g.dxi() / (2.0 * M_PI), g.d));
}

GridState fourier_multiplier(const GridState& u, const std::function<cplx(const Vec&)>& m) {
  auto uh = fourier(u);
  for (size_t i = 0; i < uh.size(); ++i) uh[i] *= m(u.grid.freq(i));
  return inverse_fourier(u.grid, uh);
}

GridState multiply(const GridState& u, const std::function<cplx(const Vec&)>& f) {
  GridState out = u;
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] *= f(u.grid.point(i));
  return out;
}

GridState gaussian_packet(const Grid& g, const Vec& x0, const Vec& xi0, double sigma) {
  g.validate();
  if (x0.size() != g.d || xi0.size() != g.d) throw DomainError("packet dimension mismatch");
  if (!(sigma > 0.0)) throw DomainError("packet width must be positive");
  GridState u(g);
  for (size_t i = 0; i < u.values.size(); ++i) {
    Vec x = g.point(i);
    double r2 = (x - x0).squaredNorm();
    u.values[i] = std::exp(cplx(-r2 / (2 * sigma * sigma), xi0.dot(x)));
  }
  const double nrm = u.norm();
  for (auto& v : u.values) v /= nrm;
  return u;
}

double boundary_mass(const GridState& u) {
  const Grid& g = u.grid;
  const double edge = 0.9 * g.half_width;
  double tot = 0.0, out = 0.0;
  for (size_t i = 0; i < u.values.size(); ++i) {
    double w = std::norm(u.values[i]);
    tot += w;
    if (g.point(i).cwiseAbs().maxCoeff() > edge) out += w;
  }
  return tot > 0.0 ? out / tot : 0.0;
}

double spectral_tail_mass(const GridState& u) {
  const Grid& g = u.grid;
  auto uh = fourier(u);
  const double edge = 0.9 * g.xi_max();
  double tot = 0.0, out = 0.0;
  for (size_t i = 0; i < uh.size(); ++i) {
    double w = std::norm(uh[i]);
    tot += w;
    if (g.freq(i).cwiseAbs().maxCoeff() > edge) out += w;
  }
  return tot > 0.0 ? out / tot : 0.0;
}

}  // namespace sclab
