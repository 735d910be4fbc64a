#include "sclab/hamiltonian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace sclab {

SymbolChoice symbol_choice_from_string(const std::string& s) {
  if (s == "p") return SymbolChoice::p;
  if (s == "k") return SymbolChoice::k;
  if (s == "p_h") return SymbolChoice::p_h;
  if (s == "p_tilde_h" || s == "pt_h") return SymbolChoice::p_tilde_h;
  throw DomainError("unknown symbol choice: " + s);
}

std::string to_string(SymbolChoice c) {
  switch (c) {
    case SymbolChoice::p: return "p";
    case SymbolChoice::k: return "k";
    case SymbolChoice::p_h: return "p_h";
    case SymbolChoice::p_tilde_h: return "p_tilde_h";
  }
  return "?";
}

void TruncationParams::validate() const {
  if (!(h > 0.0 && h <= 1.0)) throw DomainError("truncation h must lie in (0,1]");
  if (!(L >= 1.0)) throw DomainError("truncation scale L must be >= 1");
}

namespace {
[[noreturn]] void bad_point(const char* what, const Vec& x, const Vec& xi) {
  std::ostringstream os;
  os << what << " is not finite at x=(" << x.transpose() << "), xi=(" << xi.transpose() << ")";
  throw EvaluationError(os.str());
}
}  // namespace

SymbolJet symbol_jet(const CoeffJet& c, const Vec& xi, int order) {
  const int d = c.d;
  SymbolJet J;
  const Vec eta = xi - c.A;
  const Vec Geta = c.g * eta;
  J.p = 0.5 * eta.dot(Geta) + c.V;
  J.dxi = Geta;
  J.dx = Vec::Zero(d);
  for (int l = 0; l < d; ++l)
    J.dx[l] = 0.5 * eta.dot(c.dg[l] * eta) - c.dA.col(l).dot(Geta) + c.dV[l];
  if (order >= 2) {
    J.xixi = c.g;
    J.xxi = Mat::Zero(d, d);
    J.xx = Mat::Zero(d, d);
    for (int l = 0; l < d; ++l) {
      Vec row = c.dg[l] * eta - c.g * c.dA.col(l);
      for (int j = 0; j < d; ++j) J.xxi(l, j) = row[j];
    }
    for (int l = 0; l < d; ++l)
      for (int m = 0; m < d; ++m) {
        Vec d2A_lm(d);
        for (int k = 0; k < d; ++k) d2A_lm[k] = c.d2A[k](l, m);
        J.xx(l, m) = 0.5 * eta.dot(c.d2g[l][m] * eta) - c.dA.col(m).dot(c.dg[l] * eta) -
                     c.dA.col(l).dot(c.dg[m] * eta) - d2A_lm.dot(Geta) +
                     c.dA.col(l).dot(c.g * c.dA.col(m)) + c.d2V(l, m);
      }
  }
  return J;
}

SymbolJet symbol_jet(const SymbolModel& m, const Vec& x, const Vec& xi, int order) {
  SymbolJet J = symbol_jet(coeff_jet(m, x, order), xi, order);
  if (!std::isfinite(J.p)) bad_point("symbol p", x, xi);
  return J;
}

double eval_symbol_p(const SymbolModel& m, const Vec& x, const Vec& xi) {
  CoeffJet c = coeff_jet(m, x, 0);
  const Vec eta = xi - c.A;
  double p = 0.5 * eta.dot(c.g * eta) + c.V;
  if (!std::isfinite(p)) bad_point("symbol p", x, xi);
  return p;
}

double eval_kinetic_k(const SymbolModel& m, const Vec& x, const Vec& xi) {
  CoeffJet c = coeff_jet(m, x, 0);
  return 0.5 * xi.dot(c.g * xi);
}

double subprincipal_im(const CoeffJet& c, const Vec& xi) {
  const int d = c.d;
  const Vec eta = xi - c.A;
  double s = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) s += c.dg[j](j, k) * eta[k] - c.g(j, k) * c.dA(k, j);
  return -0.5 * s;
}

cplx eval_subprincipal_p1(const SymbolModel& m, const Vec& x, const Vec& xi) {
  double im = subprincipal_im(coeff_jet(m, x, 1), xi);
  if (!std::isfinite(im)) bad_point("subprincipal symbol", x, xi);
  return {0.0, im};
}

SemiclassicalSymbols eval_semiclassical_symbols(const SymbolModel& m, const TruncationParams& tp,
                                                const Vec& x, const Vec& xi) {
  tp.validate();
  SymbolModel ph = semiclassical_scale(m, tp.h);
  SymbolModel pt = semiclassical_scale(truncate(m, tp.h, tp.L), tp.h);
  SemiclassicalSymbols s;
  s.p_h = eval_symbol_p(ph, x, xi);
  s.p1_h = eval_subprincipal_p1(ph, x, xi);
  s.p_tilde_h = eval_symbol_p(pt, x, xi);
  return s;
}

SymbolModel model_for(const SymbolModel& m, SymbolChoice c, const std::optional<TruncationParams>& tp) {
  switch (c) {
    case SymbolChoice::p: return m;
    case SymbolChoice::k: return kinetic_part(m);
    case SymbolChoice::p_h:
      if (!tp) throw DomainError("p_h needs a semiclassical parameter");
      return semiclassical_scale(m, tp->h);
    case SymbolChoice::p_tilde_h:
      if (!tp) throw DomainError("p_tilde_h needs truncation parameters");
      tp->validate();
      return semiclassical_scale(truncate(m, tp->h, tp->L), tp->h);
  }
  return m;
}

// ---------------------------------------------------------------------------

void RegionSpec::validate() const {
  if (!(I_lo > 0.0 && I_lo < I_hi)) throw DomainError("region needs 0 < I_lo < I_hi");
  if (!(sigma > -1.0 && sigma < 1.0)) throw DomainError("region needs -1 < sigma < 1");
  if (!(R >= 0.0)) throw DomainError("region needs R >= 0");
  if (!(epsilon > 0.0)) throw DomainError("region needs epsilon > 0");
}

bool in_quadratic_zone(double eps, const Vec& x, const Vec& xi) {
  return japanese(x.squaredNorm()) > 0.5 * eps * xi.norm();
}

double DirectionalSplitting::direction_cosine(const Vec& x, const Vec& xi) {
  const double nx = x.norm(), nxi = xi.norm();
  if (nx == 0.0 || nxi == 0.0) return 0.0;
  return std::clamp(x.dot(xi) / (nx * nxi), -1.0, 1.0);
}

bool classify_region(const RegionSpec& spec, const Vec& x, const Vec& xi) {
  if (spec.kind == RegionKind::QuadraticZone) return in_quadratic_zone(spec.epsilon, x, xi);
  const double nx = x.norm(), nxi = xi.norm();
  if (!(nx > spec.R)) return false;
  if (!(nxi > spec.I_lo && nxi < spec.I_hi)) return false;
  if (spec.x_cap && !(nx < *spec.x_cap)) return false;
  const double s = x.dot(xi) / (nx * nxi);
  return spec.kind == RegionKind::Outgoing ? s > -spec.sigma : -s > -spec.sigma;
}

double DirectionalSplitting::plus(double s) const { return theta_plus(s, order); }
double DirectionalSplitting::minus(double s) const { return theta_minus(s, order); }

DirectionalSplitting build_directional_splitting(const RegionSpec& support, int theta_transition) {
  support.validate();
  if (theta_transition < 0) throw DomainError("smoothness order must be >= 0");
  DirectionalSplitting s;
  s.order = theta_transition;
  return s;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Vec> box_samples(int d, double B, int n) {
  std::vector<Vec> out;
  if (d == 1) {
    for (int i = 0; i < n; ++i) {
      Vec x(1);
      x[0] = n == 1 ? 0.0 : -B + 2.0 * B * i / (n - 1);
      out.push_back(x);
    }
  } else {
    int m = std::max(2, static_cast<int>(std::ceil(std::sqrt(double(n)))));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        Vec x(2);
        x[0] = -B + 2.0 * B * i / (m - 1);
        x[1] = -B + 2.0 * B * j / (m - 1);
        out.push_back(x);
      }
  }
  return out;
}

std::vector<std::vector<int>> multi_indices(int d, int orders) {
  std::vector<std::vector<int>> out;
  if (d == 1) {
    for (int a = 0; a <= orders; ++a) out.push_back({a});
  } else {
    for (int n = 0; n <= orders; ++n)
      for (int a = n; a >= 0; --a) out.push_back({a, n - a});
  }
  return out;
}

std::vector<int> dirs_of(const std::vector<int>& alpha) {
  std::vector<int> dirs;
  for (int i = 0; i < static_cast<int>(alpha.size()); ++i)
    for (int c = 0; c < alpha[i]; ++c) dirs.push_back(i);
  return dirs;
}

struct FieldRef {
  std::string name;
  const ScalarField* f;
  double subtract;  // delta_jk for the metric rows
  int growth;       // 0 metric, 1 magnetic, 2 electric
};

double fit(const FieldRef& fr, const std::vector<int>& alpha, const std::vector<Vec>& xs, double mu) {
  const auto dirs = dirs_of(alpha);
  const int order = static_cast<int>(dirs.size());
  double C = 0.0;
  for (const Vec& x : xs) {
    double v = fr.f->partial(x, dirs);
    if (order == 0) v -= fr.subtract;
    double w = std::pow(japanese(x.squaredNorm()), mu + order - fr.growth);
    double c = std::abs(v) * w;
    if (!std::isfinite(c)) throw EvaluationError("non-finite Assumption-A fit for " + fr.name);
    C = std::max(C, c);
  }
  return C;
}

}  // namespace

AssumptionReport check_assumption_A(const SymbolModel& m, int orders, double sample_box, int n_samples) {
  if (orders < 0 || orders > 4) throw DomainError("derivative order unavailable (max 4)");
  if (!(sample_box > 0.0) || n_samples < 2) throw DomainError("need a positive box and >= 2 samples");
  AssumptionReport rep;
  rep.model_id = m.id;
  rep.mu = m.mu;
  rep.orders = orders;
  rep.sample_box = sample_box;
  rep.n_samples = n_samples;
  const int d = m.dim;
  std::vector<FieldRef> fields;
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k)
      fields.push_back({"g^" + std::to_string(j) + std::to_string(k) + " - delta", &m.metric(j, k),
                        j == k ? 1.0 : 0.0, 0});
  for (int k = 0; k < d; ++k) fields.push_back({"A_" + std::to_string(k), &m.A[k], 0.0, 1});
  fields.push_back({"V", &m.V, 0.0, 2});

  const auto base = box_samples(d, sample_box, n_samples);
  const auto doubled = box_samples(d, 2.0 * sample_box, 2 * n_samples);
  rep.pass = true;
  for (const auto& alpha : multi_indices(d, orders)) {
    for (const auto& fr : fields) {
      AssumptionRow row;
      row.field = fr.name;
      row.alpha = alpha;
      row.C_hat = fit(fr, alpha, base, m.mu);
      row.C_hat_doubled = fit(fr, alpha, doubled, m.mu);
      const double hi = std::max(row.C_hat, row.C_hat_doubled);
      row.stable = hi == 0.0 || std::abs(row.C_hat - row.C_hat_doubled) <= 0.1 * hi;
      rep.pass = rep.pass && row.stable;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

nlohmann::json AssumptionReport::to_json() const {
  nlohmann::json j;
  j["model"] = model_id;
  j["mu"] = mu;
  j["orders"] = orders;
  j["sample_box"] = sample_box;
  j["n_samples"] = n_samples;
  j["derivatives"] = derivative_method;
  j["doubling_rule"] = doubling_rule;
  j["pass"] = pass;
  for (const auto& r : rows)
    j["rows"].push_back({{"field", r.field},
                         {"alpha", r.alpha},
                         {"C_hat", r.C_hat},
                         {"C_hat_doubled", r.C_hat_doubled},
                         {"stable", r.stable}});
  return j;
}

nlohmann::json AssumptionBResult::to_json() const {
  return {{"pass", pass}, {"c", c_fit}, {"samples_used", n_used}};
}

WeightFunction weight_quadratic(int d) {
  return {"1+|x|^2", [d](const Vec& x, double& f, Vec& g, Mat& H) {
            f = 1.0 + x.squaredNorm();
            g = 2.0 * x;
            H = 2.0 * Mat::Identity(d, d);
          }};
}

WeightFunction weight_constant(int d) {
  return {"1", [d](const Vec&, double& f, Vec& g, Mat& H) {
            f = 1.0;
            g = Vec::Zero(d);
            H = Mat::Zero(d, d);
          }};
}

WeightFunction weight_log_oscillating(int d, double a1, double a2) {
  auto gr = [a1, a2](double r) { return 1.0 + a1 * std::sin(0.5 * a2 * std::log1p(r * r)); };
  auto dgr = [a1, a2](double r) {
    return a1 * std::cos(0.5 * a2 * std::log1p(r * r)) * a2 * r / (1.0 + r * r);
  };
  // G(r) = int_0^r dt / g(t), composite 8-point Gauss-Legendre
  auto G = [gr](double r) {
    static const std::array<double, 8> xs = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                             -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                             0.7966664774136267,  0.9602898564975363};
    static const std::array<double, 8> ws = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                             0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                             0.2223810344533745, 0.1012285362903763};
    const int panels = std::max(1, static_cast<int>(std::ceil(r / 0.25)));
    const double w = r / panels;
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double a = p * w;
      for (int i = 0; i < 8; ++i) s += ws[i] * 0.5 * w / gr(a + 0.5 * w * (xs[i] + 1.0));
    }
    return s;
  };
  return {"log-oscillating quadrature weight", [=](const Vec& x, double& f, Vec& grad, Mat& H) {
            const double r = x.norm();
            const double Gr = G(r);
            const double G1 = 1.0 / gr(r);
            const double G2 = -dgr(r) * G1 * G1;
            f = 1.0 + Gr * Gr;
            const double F1 = 2.0 * Gr * G1;
            const double F2 = 2.0 * G1 * G1 + 2.0 * Gr * G2;
            if (r < 1e-8) {
              grad = Vec::Zero(d);
              H = F2 * Mat::Identity(d, d);
              return;
            }
            const Vec u = x / r;
            grad = F1 * u;
            H = F2 * u * u.transpose() + (F1 / r) * (Mat::Identity(d, d) - u * u.transpose());
          }};
}

AssumptionBResult check_assumption_B(const SymbolModel& m, const WeightFunction& wf, double region_R,
                                     const std::vector<PhasePoint>& samples) {
  const int d = m.dim;
  AssumptionBResult res;
  double cmin = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (s.xi.norm() == 0.0) continue;
    double f;
    Vec gf;
    Mat Hf;
    wf.eval(s.x, f, gf, Hf);
    if (f < region_R) continue;
    CoeffJet c = coeff_jet(m, s.x, 1);
    const Vec Gxi = c.g * s.xi;
    const double k = 0.5 * s.xi.dot(Gxi);
    if (k <= 0.0) continue;
    double h2 = 0.0;
    for (int l = 0; l < d; ++l) {
      double dl_u = s.xi.dot(c.dg[l] * gf) + s.xi.dot(c.g * Hf.col(l));
      h2 += Gxi[l] * dl_u;
    }
    const Vec Ggf = c.g * gf;
    for (int l = 0; l < d; ++l) h2 -= 0.5 * s.xi.dot(c.dg[l] * s.xi) * Ggf[l];
    cmin = std::min(cmin, h2 / k);
    ++res.n_used;
  }
  if (res.n_used == 0) throw DomainError("Assumption-B check: every sample excluded (xi = 0 or f < R)");
  res.c_fit = cmin;
  res.pass = cmin > 0.0;
  return res;
}

}  // namespace sclab
