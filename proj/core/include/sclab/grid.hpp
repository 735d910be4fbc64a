#pragma once

#include <functional>
#include <vector>

#include "sclab/types.hpp"

namespace sclab {

// Periodic box [-half_width, half_width)^d with n points per axis (n a power of
// two).  Points are stored row-major with axis 0 slowest.
struct Grid {
  int d = 1;
  int n = 256;
  double half_width = 16.0;

  void validate() const;
  double dx() const { return 2.0 * half_width / n; }
  double dxi() const;  // dual spacing pi / half_width
  double xi_max() const { return dxi() * (n / 2); }
  size_t size() const { return d == 1 ? size_t(n) : size_t(n) * size_t(n); }
  double x(int i) const { return -half_width + i * dx(); }
  // signed dual frequency for FFT index k (k >= n/2 wraps to negative)
  double xi(int k) const { return dxi() * (k < n / 2 ? k : k - n); }
  Vec point(size_t idx) const;
  Vec freq(size_t idx) const;
  bool operator==(const Grid& o) const { return d == o.d && n == o.n && half_width == o.half_width; }
};

struct GridState {
  Grid grid;
  std::vector<cplx> values;

  GridState() = default;
  explicit GridState(const Grid& g) : grid(g), values(g.size(), cplx(0.0)) {}
  double norm() const;  // (sum |u|^2 dx^d)^{1/2}
  GridState& operator+=(const GridState& o);
  GridState& operator-=(const GridState& o);
  GridState& operator*=(cplx c);
};

GridState operator+(GridState a, const GridState& b);
GridState operator-(GridState a, const GridState& b);
GridState operator*(cplx c, GridState a);
cplx inner(const GridState& a, const GridState& b);  // <a, b> = sum conj(a) b dx^d

// Continuous-transform approximation on the dual grid, FFT index order:
// uhat(xi_m) = sum_j u(x_j) e^{-i x_j xi_m} dx^d.  Parseval:
// sum |u|^2 dx^d = (2 pi)^{-d} sum |uhat|^2 dxi^d.
std::vector<cplx> fourier(const GridState& u);
GridState inverse_fourier(const Grid& g, const std::vector<cplx>& uhat);
double spectral_norm(const Grid& g, const std::vector<cplx>& uhat);

// Raw unnormalized DFTs (sign -1 forward, +1 backward) with cached plans.
void dft(const Grid& g, const cplx* in, cplx* out, int sign);

GridState fourier_multiplier(const GridState& u, const std::function<cplx(const Vec&)>& m);
GridState multiply(const GridState& u, const std::function<cplx(const Vec&)>& f);

// L^2-normalized Gaussian packet  exp(-|x-x0|^2/(2 sigma^2) + i xi0.x).
GridState gaussian_packet(const Grid& g, const Vec& x0, const Vec& xi0, double sigma);

// Fraction of |u|^2 in the outer 10% band of the box (per axis).
double boundary_mass(const GridState& u);
// Fraction of |uhat|^2 with some |xi_j| > 0.9 xi_max.
double spectral_tail_mass(const GridState& u);

}  // namespace sclab
