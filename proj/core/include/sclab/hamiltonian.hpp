#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sclab/model.hpp"

namespace sclab {

enum class SymbolChoice { p, k, p_h, p_tilde_h };

SymbolChoice symbol_choice_from_string(const std::string& s);
std::string to_string(SymbolChoice c);

struct TruncationParams {
  double h = 1.0;
  double L = 1.0;
  void validate() const;
};

// p and its derivatives at one phase-space point.
struct SymbolJet {
  double p = 0.0;
  Vec dx, dxi;
  Mat xx;    // d_{x_l} d_{x_m} p
  Mat xxi;   // (l, j) = d_{x_l} d_{xi_j} p
  Mat xixi;  // d_{xi_j} d_{xi_k} p = g^{jk}
};

double eval_symbol_p(const SymbolModel& m, const Vec& x, const Vec& xi);
// order 1: value and gradients; order 2: also Hessian blocks.
SymbolJet symbol_jet(const SymbolModel& m, const Vec& x, const Vec& xi, int order);
SymbolJet symbol_jet(const CoeffJet& c, const Vec& xi, int order);

// p1 = -(i/2) sum (d_j g^{jk} (xi_k - A_k) - g^{jk} d_j A_k); purely imaginary.
cplx eval_subprincipal_p1(const SymbolModel& m, const Vec& x, const Vec& xi);
double subprincipal_im(const CoeffJet& c, const Vec& xi);

double eval_kinetic_k(const SymbolModel& m, const Vec& x, const Vec& xi);

struct SemiclassicalSymbols {
  double p_h = 0.0;
  cplx p1_h;
  double p_tilde_h = 0.0;
};
SemiclassicalSymbols eval_semiclassical_symbols(const SymbolModel& m, const TruncationParams& tp,
                                                const Vec& x, const Vec& xi);

// The model whose symbol p equals the requested choice (k, p_h, p~_h need h/L).
SymbolModel model_for(const SymbolModel& m, SymbolChoice c, const std::optional<TruncationParams>& tp);

// ---------------------------------------------------------------------------
enum class RegionKind { Outgoing, Incoming, QuadraticZone };

struct RegionSpec {
  RegionKind kind = RegionKind::QuadraticZone;
  double R = 0.0;
  double I_lo = 0.5, I_hi = 2.0;
  double sigma = 0.0;
  double epsilon = 1.0;
  std::optional<double> x_cap;
  void validate() const;
};

bool classify_region(const RegionSpec& spec, const Vec& x, const Vec& xi);
// <x> > eps |xi| / 2
bool in_quadratic_zone(double eps, const Vec& x, const Vec& xi);

struct DirectionalSplitting {
  int order = 3;
  double plus(double s) const;
  double minus(double s) const;
  // cos of the angle between x and xi; 0 when either vanishes
  static double direction_cosine(const Vec& x, const Vec& xi);
};
DirectionalSplitting build_directional_splitting(const RegionSpec& support, int theta_transition);

// ---------------------------------------------------------------------------
struct AssumptionRow {
  std::string field;       // "g^jk - delta_jk", "A_k", "V"
  std::vector<int> alpha;  // multi-index (counts per coordinate)
  double C_hat = 0.0;      // fit over the base sample set
  double C_hat_doubled = 0.0;
  bool stable = false;
};

struct AssumptionReport {
  std::string model_id;
  double mu = 0.0;
  int orders = 0;
  double sample_box = 0.0;
  int n_samples = 0;
  std::string derivative_method = "nested forward-mode dual numbers";
  std::string doubling_rule = "2x samples over 2x box (same density)";
  std::vector<AssumptionRow> rows;
  bool pass = false;
  nlohmann::json to_json() const;
};

AssumptionReport check_assumption_A(const SymbolModel& m, int orders, double sample_box, int n_samples);

// Weight f(x) >= 1 with gradient and Hessian.
struct WeightFunction {
  std::string name;
  std::function<void(const Vec& x, double& f, Vec& grad, Mat& hess)> eval;
};
WeightFunction weight_quadratic(int d);  // 1 + |x|^2
WeightFunction weight_constant(int d);   // 1
// 1 + (int_0^r dt / g(t))^2 for the log-oscillating metric, by quadrature
WeightFunction weight_log_oscillating(int d, double a1, double a2);

struct PhasePoint {
  Vec x, xi;
};

struct AssumptionBResult {
  bool pass = false;
  double c_fit = 0.0;
  int n_used = 0;
  nlohmann::json to_json() const;
};

// H_k(H_k f) / k minimized over samples with f(x) >= R and xi != 0.
AssumptionBResult check_assumption_B(const SymbolModel& m, const WeightFunction& f, double region_R,
                                     const std::vector<PhasePoint>& samples);

}  // namespace sclab
