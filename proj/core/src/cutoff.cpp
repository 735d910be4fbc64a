#include "sclab/cutoff.hpp"

#include <algorithm>

namespace sclab {

namespace {
double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}
}  // namespace

double smoothstep(double s, int k) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double acc = 0.0;
  for (int j = 0; j <= k; ++j)
    acc += binom(k + j, j) * binom(2 * k + 1, k - j) * std::pow(-s, j);
  return std::clamp(std::pow(s, k + 1) * acc, 0.0, 1.0);
}

double theta_plus(double s, int k) { return smoothstep(s + 0.5, k); }

double theta_minus(double s, int k) { return 1.0 - theta_plus(s, k); }

}  // namespace sclab
