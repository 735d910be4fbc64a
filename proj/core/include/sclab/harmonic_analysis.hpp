#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sclab/grid.hpp"

namespace sclab {

// psi_eps(x, xi) = phi(<x> / (eps |xi|)), zero at xi = 0; chi_eps = 1 - psi_eps.
struct PsiEpsilon {
  double eps = 1.0;
  double psi(const Vec& x, const Vec& xi) const;
  double chi(const Vec& x, const Vec& xi) const { return 1.0 - psi(x, xi); }
};
PsiEpsilon build_psi_epsilon(double eps);

// 4-adic spectral partition: f0(l) + sum_{j>=0} f(4^{-j} l) = 1 for l >= 0.
struct SpectralPartition {
  static double f0(double lambda);  // phi(|l|)
  static double f(double lambda);   // phi(l/4) - phi(l) on l > 0; supp in [1/2, 4]
  static double F(double lambda);   // 1 on [1/4, 4], supp in [1/8, 8]
};

// Littlewood-Paley: S_0 = phi(|xi|/2), S_j(xi) = S(2^{-j} xi) with S(e) = phi(|e|/2) - phi(|e|).
struct DyadicLP {
  int j_max = 0;
  double filter(int j, const Vec& xi) const;
  double sum(const Vec& xi) const;
};

struct Partitions {
  SpectralPartition spectral;
  DyadicLP lp;
};
// j_max chosen so the LP partition sums to one on the whole dual grid.
Partitions build_dyadic_partitions(const Grid& g);
DyadicLP build_lp(const Grid& g);

GridState lp_apply(const DyadicLP& lp, int j, const GridState& u);

// Exact rational with an infinity flag (denominator 0).
struct Rational {
  std::int64_t num = 0, den = 1;
  static Rational inf() { return {1, 0}; }
  static Rational make(std::int64_t n, std::int64_t d);
  bool is_inf() const { return den == 0; }
  double value() const;
  std::string str() const;
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
};

struct AdmissiblePair {
  Rational p, q;
  int d = 1;
  bool endpoint = false;
  bool theorem_scope = true;  // false for (4, inf) in d = 1
};

// Pairs with p >= 2 and 2/p = d(1/2 - 1/q); (d, p, q) = (2, 2, inf) is dropped.
std::vector<AdmissiblePair> enumerate_admissible(int d, const std::vector<Rational>& q_list);
// 2/p == d(1/2 - 1/q) in exact arithmetic
bool scaling_identity_holds(const AdmissiblePair& a);

}  // namespace sclab
