#include "sclab/model.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace sclab {

namespace {

template <int K>
struct DualOf;
template <>
struct DualOf<0> {
  using type = double;
};
template <>
struct DualOf<1> {
  using type = ad::D1;
};
template <>
struct DualOf<2> {
  using type = ad::D2;
};
template <>
struct DualOf<3> {
  using type = ad::D3;
};
template <>
struct DualOf<4> {
  using type = ad::D4;
};

template <int K>
typename DualOf<K>::type seed(double xv, int coord, const int* dirs) {
  if constexpr (K == 0) {
    return xv;
  } else {
    using Inner = typename DualOf<K - 1>::type;
    return {seed<K - 1>(xv, coord, dirs), Inner(dirs[K - 1] == coord ? 1.0 : 0.0)};
  }
}

template <int K>
double extract(const typename DualOf<K>::type& r) {
  if constexpr (K == 0) return r;
  else return extract<K - 1>(r.d);
}

template <int K>
double partial_k(const ScalarField& f, const Vec& x, const int* dirs) {
  using T = typename DualOf<K>::type;
  T xs[kMaxDim];
  for (int i = 0; i < x.size(); ++i) xs[i] = seed<K>(x[i], i, dirs);
  return extract<K>(f.eval(xs));
}

std::string fmt_id(const std::string& name, int d,
                   std::initializer_list<std::pair<const char*, double>> params) {
  std::ostringstream os;
  os << std::setprecision(17) << name << "(d=" << d;
  for (const auto& [k, v] : params) os << "," << k << "=" << v;
  os << ")";
  return os.str();
}

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw DomainError("model dimension must be 1 or 2");
}

SymbolModel flat_base(int d, std::string id) {
  check_dim(d);
  SymbolModel m;
  m.dim = d;
  m.id = std::move(id);
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k) m.ginv.push_back(ScalarField::constant(j == k ? 1.0 : 0.0));
  m.A.assign(d, ScalarField::constant(0.0));
  m.V = ScalarField::constant(0.0);
  m.mu = 1.0;
  m.ellipticity_c = 1.0;
  return m;
}

ScalarField scaled(const ScalarField& f, double s) {
  if (f.is_constant()) return ScalarField::constant(s * f.constant_value());
  return ScalarField::make([f, s](const auto* x) { return s * f.eval(x); });
}


}  // namespace

ScalarField ScalarField::constant(double c) {
  ScalarField s;
  s.constant_ = true;
  s.c_ = c;
  return s;
}

double ScalarField::value(const Vec& x) const {
  if (constant_) return c_;
  return f0_(x.data());
}

void ScalarField::gradient(const Vec& x, double& v, Vec& g) const {
  const int d = static_cast<int>(x.size());
  g = Vec::Zero(d);
  if (constant_) {
    v = c_;
    return;
  }
  for (int i = 0; i < d; ++i) {
    ad::D1 xs[kMaxDim];
    for (int j = 0; j < d; ++j) xs[j] = ad::D1(x[j], i == j ? 1.0 : 0.0);
    ad::D1 r = f1_(xs);
    v = r.v;
    g[i] = r.d;
  }
}

void ScalarField::hessian(const Vec& x, double& v, Vec& g, Mat& H) const {
  const int d = static_cast<int>(x.size());
  g = Vec::Zero(d);
  H = Mat::Zero(d, d);
  if (constant_) {
    v = c_;
    return;
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const int dirs[2] = {i, j};
      ad::D2 xs[kMaxDim];
      for (int k = 0; k < d; ++k) xs[k] = seed<2>(x[k], k, dirs);
      ad::D2 r = f2_(xs);
      v = r.v.v;
      g[i] = r.v.d;
      g[j] = r.d.v;
      H(i, j) = H(j, i) = r.d.d;
    }
  }
}

double ScalarField::partial(const Vec& x, const std::vector<int>& dirs) const {
  if (dirs.size() > 4) throw DomainError("derivative order above 4 unavailable");
  if (constant_) return dirs.empty() ? c_ : 0.0;
  switch (dirs.size()) {
    case 0: return f0_(x.data());
    case 1: return partial_k<1>(*this, x, dirs.data());
    case 2: return partial_k<2>(*this, x, dirs.data());
    case 3: return partial_k<3>(*this, x, dirs.data());
    default: return partial_k<4>(*this, x, dirs.data());
  }
}

const ScalarField& SymbolModel::metric(int j, int k) const {
  if (j > k) std::swap(j, k);
  // upper-triangle row-major index
  int idx = j * dim - j * (j - 1) / 2 + (k - j);
  return ginv[idx];
}

bool SymbolModel::flat_metric() const {
  for (int j = 0; j < dim; ++j)
    for (int k = j; k < dim; ++k) {
      const auto& f = metric(j, k);
      if (!f.is_constant() || f.constant_value() != (j == k ? 1.0 : 0.0)) return false;
    }
  return true;
}

bool SymbolModel::const_metric() const {
  for (const auto& f : ginv)
    if (!f.is_constant()) return false;
  return true;
}

bool SymbolModel::zero_magnetic() const {
  for (const auto& f : A)
    if (!f.is_zero()) return false;
  return true;
}

bool SymbolModel::const_magnetic() const {
  for (const auto& f : A)
    if (!f.is_constant()) return false;
  return true;
}

bool SymbolModel::zero_electric() const { return V.is_zero(); }

CoeffJet coeff_jet(const SymbolModel& m, const Vec& x, int order) {
  const int d = m.dim;
  CoeffJet J;
  J.d = d;
  J.g = Mat::Zero(d, d);
  J.A = Vec::Zero(d);
  J.dA = Mat::Zero(d, d);
  J.dV = Vec::Zero(d);
  J.d2V = Mat::Zero(d, d);
  for (int l = 0; l < d; ++l) {
    J.dg[l] = Mat::Zero(d, d);
    J.d2A[l] = Mat::Zero(d, d);
    for (int mm = 0; mm < d; ++mm) J.d2g[l][mm] = Mat::Zero(d, d);
  }
  auto eval = [&](const ScalarField& f, double& v, Vec& g, Mat& H) {
    if (f.is_constant()) {
      v = f.constant_value();
      g = Vec::Zero(d);
      H = Mat::Zero(d, d);
    } else if (order <= 0) {
      v = f.value(x);
      g = Vec::Zero(d);
      H = Mat::Zero(d, d);
    } else if (order == 1) {
      f.gradient(x, v, g);
      H = Mat::Zero(d, d);
    } else {
      f.hessian(x, v, g, H);
    }
  };
  double v;
  Vec g;
  Mat H;
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k) {
      eval(m.metric(j, k), v, g, H);
      J.g(j, k) = J.g(k, j) = v;
      for (int l = 0; l < d; ++l) {
        J.dg[l](j, k) = J.dg[l](k, j) = g[l];
        for (int mm = 0; mm < d; ++mm) J.d2g[l][mm](j, k) = J.d2g[l][mm](k, j) = H(l, mm);
      }
    }
  for (int k = 0; k < d; ++k) {
    eval(m.A[k], v, g, H);
    J.A[k] = v;
    for (int l = 0; l < d; ++l) J.dA(k, l) = g[l];
    J.d2A[k] = H;
  }
  eval(m.V, v, g, H);
  J.V = v;
  J.dV = g;
  J.d2V = H;
  return J;
}

namespace catalog {

SymbolModel flat_free(int d) { return flat_base(d, fmt_id("flat_free", d, {})); }

SymbolModel harmonic(int d, double omega) {
  SymbolModel m = flat_base(d, fmt_id("harmonic", d, {{"omega", omega}}));
  const double w2 = omega * omega;
  m.V = ScalarField::make([d, w2](const auto* x) { return 0.5 * w2 * detail::sqnorm(x, d); });
  m.mu = 0.0;
  return m;
}

SymbolModel subquadratic_power(int d, double mu, double amplitude) {
  if (mu < 0.0) throw DomainError("subquadratic_power needs mu >= 0");
  SymbolModel m = flat_base(d, fmt_id("subquadratic_power", d, {{"mu", mu}, {"amplitude", amplitude}}));
  const double e = 0.5 * (2.0 - mu);
  m.V = ScalarField::make(
      [d, e, amplitude](const auto* x) { return amplitude * ad::pow(1.0 + detail::sqnorm(x, d), e); });
  m.mu = mu;
  return m;
}

SymbolModel linear_magnetic(int d, double omega, double mu) {
  SymbolModel m = flat_base(d, fmt_id("linear_magnetic", d, {{"omega", omega}, {"mu", mu}}));
  m.A.clear();
  for (int k = 0; k < d; ++k) {
    m.A.push_back(ScalarField::make([d, k, omega, mu](const auto* x) {
      auto w = ad::pow(1.0 + detail::sqnorm(x, d), -0.5 * mu);
      if (d == 1) return omega * x[0] * w;
      // x^perp = (-x2, x1)
      return k == 0 ? -(omega * x[1] * w) : omega * x[0] * w;
    }));
  }
  m.mu = mu;
  return m;
}

SymbolModel constant_magnetic(int d, double a0) {
  SymbolModel m = flat_base(d, fmt_id("constant_magnetic", d, {{"a0", a0}}));
  m.A.assign(d, ScalarField::constant(a0));
  m.mu = 1.0;
  return m;
}

SymbolModel conformal_bump(int d, double b) {
  if (b <= -1.0) throw DomainError("conformal_bump needs b > -1");
  SymbolModel m = flat_base(d, fmt_id("conformal_bump", d, {{"b", b}}));
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k) {
      if (j != k) continue;
      m.ginv[j * d - j * (j - 1) / 2] = ScalarField::make(
          [d, b](const auto* x) { return 1.0 + b * ad::exp(-detail::sqnorm(x, d)); });
    }
  m.ellipticity_c = std::min(1.0, 1.0 + b);
  m.mu = 1.0;
  return m;
}

// Metric g_{jk} = (1 + b e^{-|x|^2}) delta, i.e. the inverse of the bump.  Its
// geodesics are trapped once b > e^2.
SymbolModel conformal_well(int d, double b) {
  if (b <= -1.0) throw DomainError("conformal_well needs b > -1");
  SymbolModel m = flat_base(d, fmt_id("conformal_well", d, {{"b", b}}));
  for (int j = 0; j < d; ++j)
    m.ginv[j * d - j * (j - 1) / 2] =
        ScalarField::make([d, b](const auto* x) { return 1.0 / (1.0 + b * ad::exp(-detail::sqnorm(x, d))); });
  m.ellipticity_c = std::min(1.0, 1.0 / (1.0 + b));
  m.mu = 1.0;
  return m;
}

SymbolModel log_oscillating(int d, double a1, double a2) {
  if (a1 * a1 * (1.0 + a2 * a2) >= 1.0)
    throw DomainError("log_oscillating requires a1^2 (1 + a2^2) < 1");
  SymbolModel m = flat_base(d, fmt_id("log_oscillating", d, {{"a1", a1}, {"a2", a2}}));
  for (int j = 0; j < d; ++j) {
    m.ginv[j * d - j * (j - 1) / 2] = ScalarField::make([d, a1, a2](const auto* x) {
      // log<x> regularizes log r at the origin; identical asymptotics as r -> infinity
      return 1.0 + a1 * ad::sin(a2 * 0.5 * ad::log(1.0 + detail::sqnorm(x, d)));
    });
  }
  m.ellipticity_c = 1.0 - std::abs(a1);
  m.mu = 0.0;
  return m;
}

SymbolModel monomial_potential(int d, double coeff, int power) {
  if (power < 0) throw DomainError("monomial_potential needs a nonnegative power");
  SymbolModel m = flat_base(d, fmt_id("monomial_potential", d, {{"coeff", coeff}, {"power", double(power)}}));
  m.V = ScalarField::make([d, coeff, power](const auto* x) {
    using T = std::remove_cv_t<std::remove_reference_t<decltype(x[0])>>;
    T acc(0.0);
    for (int i = 0; i < d; ++i) {
      T t(1.0);
      for (int p = 0; p < power; ++p) t = t * x[i];
      acc = acc + t;
    }
    return coeff * acc;
  });
  m.mu = power <= 2 ? 2.0 - power : 0.0;
  return m;
}

SymbolModel by_name(const std::string& name, int d, const std::map<std::string, double>& params) {
  auto get = [&](const char* key, double def) {
    auto it = params.find(key);
    return it == params.end() ? def : it->second;
  };
  if (name == "flat_free") return flat_free(d);
  if (name == "harmonic") return harmonic(d, get("omega", 1.0));
  if (name == "subquadratic_power") return subquadratic_power(d, get("mu", 0.5), get("amplitude", 1.0));
  if (name == "linear_magnetic") return linear_magnetic(d, get("omega", 1.0), get("mu", 0.5));
  if (name == "constant_magnetic") return constant_magnetic(d, get("a0", 1.0));
  if (name == "conformal_bump") return conformal_bump(d, get("b", 1.0));
  if (name == "conformal_well") return conformal_well(d, get("b", 10.0));
  if (name == "log_oscillating") return log_oscillating(d, get("a1", 0.3), get("a2", 1.0));
  if (name == "monomial_potential")
    return monomial_potential(d, get("coeff", 1.0), static_cast<int>(get("power", 2.0)));
  throw DomainError("unknown catalog model: " + name);
}

std::vector<std::string> names() {
  return {"flat_free",      "harmonic",       "subquadratic_power", "linear_magnetic",
          "constant_magnetic", "conformal_bump", "conformal_well", "log_oscillating", "monomial_potential"};
}

}  // namespace catalog

SymbolModel kinetic_part(const SymbolModel& m) {
  SymbolModel k = m;
  k.id = "kinetic[" + m.id + "]";
  k.A.assign(m.dim, ScalarField::constant(0.0));
  k.V = ScalarField::constant(0.0);
  return k;
}

SymbolModel semiclassical_scale(const SymbolModel& m, double h) {
  if (!(h > 0.0 && h <= 1.0)) throw DomainError("semiclassical parameter h must lie in (0,1]");
  SymbolModel s = m;
  std::ostringstream os;
  os << std::setprecision(17) << "scaled[h=" << h << "][" << m.id << "]";
  s.id = os.str();
  for (auto& a : s.A) a = scaled(a, h);
  s.V = scaled(m.V, h * h);
  return s;
}

SymbolModel truncate(const SymbolModel& m, double h, double L) {
  if (!(h > 0.0 && h <= 1.0)) throw DomainError("semiclassical parameter h must lie in (0,1]");
  if (!(L > 0.0)) throw DomainError("truncation scale L must be positive");
  SymbolModel s = m;
  std::ostringstream os;
  os << std::setprecision(17) << "truncated[h=" << h << ",L=" << L << "][" << m.id << "]";
  s.id = os.str();
  const int d = m.dim;
  const double k = h / L;
  auto cut = [d, k](const ScalarField& f) {
    if (f.is_zero()) return f;
    return ScalarField::make([f, d, k](const auto* x) {
      auto r2 = detail::sqnorm(x, d);
      // inner ball: cutoff is exactly one, skip sqrt (singular derivative at 0)
      if (ad::value_of(r2) * k * k <= 0.25) return f.eval(x);
      return smooth_cutoff(k * ad::sqrt(r2)) * f.eval(x);
    });
  };
  for (auto& a : s.A) a = cut(a);
  s.V = cut(m.V);
  return s;
}

}  // namespace sclab
