#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sclab/cutoff.hpp"
#include "sclab/dual.hpp"
#include "sclab/types.hpp"

namespace sclab {

// A real field on R^d that can be evaluated on doubles and on nested duals up
// to depth four.  Constant fields are tagged so symbol evaluation can skip them.
class ScalarField {
 public:
  ScalarField() = default;  // constant zero

  template <class F>
  static ScalarField make(F f) {
    ScalarField s;
    s.f0_ = [f](const double* x) { return f(x); };
    s.f1_ = [f](const ad::D1* x) { return f(x); };
    s.f2_ = [f](const ad::D2* x) { return f(x); };
    s.f3_ = [f](const ad::D3* x) { return f(x); };
    s.f4_ = [f](const ad::D4* x) { return f(x); };
    s.constant_ = false;
    return s;
  }

  static ScalarField constant(double c);

  bool is_constant() const { return constant_; }
  bool is_zero() const { return constant_ && c_ == 0.0; }
  double constant_value() const { return c_; }

  template <class T>
  T eval(const T* x) const {
    if (constant_) return T(c_);
    if constexpr (std::is_same_v<T, double>) return f0_(x);
    else if constexpr (std::is_same_v<T, ad::D1>) return f1_(x);
    else if constexpr (std::is_same_v<T, ad::D2>) return f2_(x);
    else if constexpr (std::is_same_v<T, ad::D3>) return f3_(x);
    else return f4_(x);
  }

  double value(const Vec& x) const;
  // Value and gradient (one depth-1 pass per direction).
  void gradient(const Vec& x, double& v, Vec& g) const;
  // Value, gradient and Hessian via depth-2 passes.
  void hessian(const Vec& x, double& v, Vec& g, Mat& H) const;
  // Mixed partial along the listed coordinate directions (length <= 4).
  double partial(const Vec& x, const std::vector<int>& dirs) const;

 private:
  std::function<double(const double*)> f0_;
  std::function<ad::D1(const ad::D1*)> f1_;
  std::function<ad::D2(const ad::D2*)> f2_;
  std::function<ad::D3(const ad::D3*)> f3_;
  std::function<ad::D4(const ad::D4*)> f4_;
  bool constant_ = true;
  double c_ = 0.0;
};

// (g^{jk}, A, V) with decay metadata.  Immutable once built; cheap to copy
// (fields share their closures).
struct SymbolModel {
  int dim = 1;
  std::string id;                 // catalog name with parameters; used in cache keys
  std::vector<ScalarField> ginv;  // upper triangle of g^{jk}, row-major j <= k
  std::vector<ScalarField> A;     // d components
  ScalarField V;
  double mu = 0.0;
  double ellipticity_c = 1.0;

  const ScalarField& metric(int j, int k) const;
  bool flat_metric() const;    // g^{jk} = delta
  bool const_metric() const;
  bool zero_magnetic() const;
  bool const_magnetic() const;
  bool zero_electric() const;
};

// Coefficient values and derivatives at a point, up to second order.
struct CoeffJet {
  int d = 1;
  Mat g;                      // g^{jk}
  Mat dg[kMaxDim];            // dg[l](j,k) = d_l g^{jk}
  Mat d2g[kMaxDim][kMaxDim];  // d2g[l][m](j,k)
  Vec A;
  Mat dA;                      // dA(k,l) = d_l A_k
  Mat d2A[kMaxDim];            // d2A[k](l,m) = d_l d_m A_k
  double V = 0.0;
  Vec dV;
  Mat d2V;
};

// order 0: values only; 1: +first derivatives; 2: +second derivatives.
CoeffJet coeff_jet(const SymbolModel& m, const Vec& x, int order);

// Builds a model from generic lambdas (const T* x) -> T.
template <class G, class AF, class VF>
SymbolModel make_model(int d, std::string id, G gfun, AF afun, VF vfun, double mu, double c);

namespace catalog {
SymbolModel flat_free(int d);
SymbolModel harmonic(int d, double omega = 1.0);
SymbolModel subquadratic_power(int d, double mu, double amplitude = 1.0);
SymbolModel linear_magnetic(int d, double omega, double mu);
SymbolModel constant_magnetic(int d, double a0);
SymbolModel conformal_bump(int d, double b);
SymbolModel conformal_well(int d, double b);
SymbolModel log_oscillating(int d, double a1, double a2);
SymbolModel monomial_potential(int d, double coeff, int power);

// Name + parameter map (TOML scenarios use this).
SymbolModel by_name(const std::string& name, int d, const std::map<std::string, double>& params);
std::vector<std::string> names();
}  // namespace catalog

// k: drops A and V.
SymbolModel kinetic_part(const SymbolModel& m);
// A -> hA, V -> h^2 V (symbol p_h).
SymbolModel semiclassical_scale(const SymbolModel& m, double h);
// A -> psi(h|x|/L) A, V -> psi(h|x|/L) V (A_h, V_h).
SymbolModel truncate(const SymbolModel& m, double h, double L);

// ---------------------------------------------------------------------------

namespace detail {
template <class T>
T sqnorm(const T* x, int d) {
  T r = x[0] * x[0];
  for (int i = 1; i < d; ++i) r = r + x[i] * x[i];
  return r;
}
}  // namespace detail

template <class G, class AF, class VF>
SymbolModel make_model(int d, std::string id, G gfun, AF afun, VF vfun, double mu, double c) {
  SymbolModel m;
  m.dim = d;
  m.id = std::move(id);
  m.mu = mu;
  m.ellipticity_c = c;
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k)
      m.ginv.push_back(ScalarField::make([gfun, j, k](const auto* x) { return gfun(x, j, k); }));
  for (int k = 0; k < d; ++k)
    m.A.push_back(ScalarField::make([afun, k](const auto* x) { return afun(x, k); }));
  m.V = ScalarField::make(vfun);
  return m;
}

}  // namespace sclab
