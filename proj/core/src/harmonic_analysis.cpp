#include "sclab/harmonic_analysis.hpp"

#include <cmath>
#include <numeric>

#include "sclab/cutoff.hpp"

namespace sclab {

double PsiEpsilon::psi(const Vec& x, const Vec& xi) const {
  const double k = xi.norm();
  if (k == 0.0) return 0.0;
  return smooth_cutoff(japanese(x.squaredNorm()) / (eps * k));
}

PsiEpsilon build_psi_epsilon(double eps) {
  if (!(eps > 0.0)) throw DomainError("epsilon must be positive");
  return {eps};
}

double SpectralPartition::f0(double l) { return smooth_cutoff(std::abs(l)); }

double SpectralPartition::f(double l) {
  if (l <= 0.0) return 0.0;
  return smooth_cutoff(l / 4.0) - smooth_cutoff(l);
}

double SpectralPartition::F(double l) { return smooth_cutoff(l / 8.0) * (1.0 - smooth_cutoff(4.0 * l)); }

double DyadicLP::filter(int j, const Vec& xi) const {
  if (j < 0 || j > j_max) throw DomainError("LP index outside [0, j_max]");
  const double r = xi.norm();
  if (j == 0) return smooth_cutoff(r / 2.0);
  const double e = std::ldexp(r, -j);
  return smooth_cutoff(e / 2.0) - smooth_cutoff(e);
}

double DyadicLP::sum(const Vec& xi) const {
  double s = 0.0;
  for (int j = 0; j <= j_max; ++j) s += filter(j, xi);
  return s;
}

DyadicLP build_lp(const Grid& g) {
  g.validate();
  // sum_{j <= J} S_j = phi(2^{-J-1}|xi|) = 1 for |xi| <= 2^J
  const double rmax = g.xi_max() * std::sqrt(double(g.d));
  DyadicLP lp;
  while (std::ldexp(1.0, lp.j_max) < rmax) ++lp.j_max;
  return lp;
}

Partitions build_dyadic_partitions(const Grid& g) { return {SpectralPartition{}, build_lp(g)}; }

GridState lp_apply(const DyadicLP& lp, int j, const GridState& u) {
  if (j < 0 || j > lp.j_max) throw DomainError("LP index beyond the grid's j_max");
  return fourier_multiplier(u, [&](const Vec& xi) { return cplx(lp.filter(j, xi)); });
}

// ---------------------------------------------------------------------------

Rational Rational::make(std::int64_t n, std::int64_t d) {
  if (d == 0) return inf();
  if (d < 0) n = -n, d = -d;
  std::int64_t g = std::gcd(n < 0 ? -n : n, d);
  if (g == 0) g = 1;
  return {n / g, d / g};
}

double Rational::value() const { return is_inf() ? INFINITY : double(num) / double(den); }

std::string Rational::str() const {
  if (is_inf()) return "inf";
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

namespace {
// 1/r as a rational (1/inf = 0, 1/0 = inf)
Rational recip(const Rational& r) {
  if (r.is_inf()) return {0, 1};
  if (r.num == 0) return Rational::inf();
  return Rational::make(r.den, r.num);
}
}  // namespace

std::vector<AdmissiblePair> enumerate_admissible(int d, const std::vector<Rational>& q_list) {
  if (d < 1) throw DomainError("dimension must be >= 1");
  std::vector<AdmissiblePair> out;
  for (const auto& q : q_list) {
    if (!q.is_inf() && q.num < 2 * q.den) continue;  // q >= 2
    // 1/p = d (q - 2) / (4 q) = d/4 - d/(2q)
    Rational iq = recip(q);
    Rational ip = Rational::make(d * iq.den - 2 * d * iq.num, 4 * iq.den);
    if (ip.num * 2 > ip.den) continue;  // p < 2
    AdmissiblePair a;
    a.d = d;
    a.q = q;
    a.p = recip(ip);
    if (d == 2 && a.p == Rational::make(2, 1) && q.is_inf()) continue;
    a.endpoint = d >= 3 && a.p == Rational::make(2, 1);
    a.theorem_scope = !(d == 1 && q.is_inf());
    out.push_back(a);
  }
  return out;
}

bool scaling_identity_holds(const AdmissiblePair& a) {
  // 2/p == d (1/2 - 1/q)  <=>  4 (1/p) == d (1 - 2 (1/q))
  Rational ip = recip(a.p), iq = recip(a.q);
  // cross-multiplied: 4 ip.num * iq.den == d (iq.den - 2 iq.num) * ip.den
  return 4 * ip.num * iq.den == std::int64_t(a.d) * (iq.den - 2 * iq.num) * ip.den;
}

}  // namespace sclab
