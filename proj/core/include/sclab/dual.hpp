#pragma once

// Forward-mode dual numbers.  Nesting Dual<Dual<...>> gives exact mixed
// partials up to the nesting depth; model fields are written once as generic
// lambdas and instantiated at depths 0..4.

#include <cmath>

namespace sclab::ad {

template <class T>
struct Dual {
  T v{};
  T d{};
  constexpr Dual() = default;
  constexpr Dual(double c) : v(c), d(0.0) {}  // NOLINT: implicit lift of constants
  constexpr Dual(const T& v_, const T& d_) : v(v_), d(d_) {}
};

inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T>& x) {
  return value_of(x.v);
}

template <class T>
Dual<T> operator-(const Dual<T>& a) {
  return {-a.v, -a.d};
}
template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.v + b.v, a.d + b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.v - b.v, a.d - b.d};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}
template <class T>
Dual<T> operator+(const Dual<T>& a, double c) {
  return {a.v + c, a.d};
}
template <class T>
Dual<T> operator+(double c, const Dual<T>& a) {
  return {a.v + c, a.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, double c) {
  return {a.v - c, a.d};
}
template <class T>
Dual<T> operator-(double c, const Dual<T>& a) {
  return {c - a.v, -a.d};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, double c) {
  return {a.v * c, a.d * c};
}
template <class T>
Dual<T> operator*(double c, const Dual<T>& a) {
  return {a.v * c, a.d * c};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, double c) {
  return {a.v / c, a.d / c};
}
template <class T>
Dual<T> operator/(double c, const Dual<T>& a) {
  T q = c / a.v;
  return {q, -q * a.d / a.v};
}
template <class T, class U>
Dual<T>& operator+=(Dual<T>& a, const U& b) {
  a = a + b;
  return a;
}
template <class T, class U>
Dual<T>& operator-=(Dual<T>& a, const U& b) {
  a = a - b;
  return a;
}
template <class T, class U>
Dual<T>& operator*=(Dual<T>& a, const U& b) {
  a = a * b;
  return a;
}

inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double pow(double x, double p) { return std::pow(x, p); }

template <class T>
Dual<T> exp(const Dual<T>& a) {
  T e = exp(a.v);
  return {e, a.d * e};
}
template <class T>
Dual<T> log(const Dual<T>& a) {
  return {log(a.v), a.d / a.v};
}
template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  T s = sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}
template <class T>
Dual<T> sin(const Dual<T>& a) {
  return {sin(a.v), a.d * cos(a.v)};
}
template <class T>
Dual<T> cos(const Dual<T>& a) {
  return {cos(a.v), -(a.d * sin(a.v))};
}
template <class T>
Dual<T> pow(const Dual<T>& a, double p) {
  if (p == 0.0) return Dual<T>(1.0);
  return {pow(a.v, p), p * pow(a.v, p - 1.0) * a.d};
}

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;
using D4 = Dual<D3>;

}  // namespace sclab::ad
