#pragma once

#include <cmath>

#include "sclab/dual.hpp"

namespace sclab {

namespace detail {
// e^{-1/u} for u > 0, zero below the underflow guard.
template <class T>
T glue(const T& u) {
  if (ad::value_of(u) < 1e-8) return T(0.0);
  return ad::exp(-1.0 / u);
}
}  // namespace detail

// C^infinity cutoff: 1 on r <= 1/2, 0 on r >= 1, monotone in between.
template <class T>
T smooth_cutoff(const T& r) {
  const double rv = ad::value_of(r);
  if (rv <= 0.5) return T(1.0);
  if (rv >= 1.0) return T(0.0);
  T s = 2.0 * r - 1.0;
  T a = detail::glue(1.0 - s);
  T b = detail::glue(s);
  return a / (a + b);
}

// C^k polynomial smoothstep on [0,1]: 0 at 0, 1 at 1, k derivatives vanish at both ends.
double smoothstep(double s, int k);

// Directional splitting: theta_plus = 1 on [1/2,1], 0 on [-1,-1/2]; theta_minus = 1 - theta_plus.
double theta_plus(double s, int k);
double theta_minus(double s, int k);

}  // namespace sclab
