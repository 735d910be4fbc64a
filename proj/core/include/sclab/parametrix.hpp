#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sclab/eikonal_wkb.hpp"
#include "sclab/grid.hpp"

namespace sclab {

// Symbol evaluator a(x, xi).  Pure multipliers and multiplications are tagged
// so quantization can take the FFT path.
struct Symbol {
  enum class Kind { general, multiplier, multiplication };
  Kind kind = Kind::general;
  std::function<cplx(const Vec& x, const Vec& xi)> a;

  static Symbol general(std::function<cplx(const Vec&, const Vec&)> f);
  static Symbol multiplier(std::function<cplx(const Vec&)> f);
  static Symbol multiplication(std::function<cplx(const Vec&)> f);
  static Symbol identity();
};

struct QuantizationDiagnostics {
  double tail_mass = 0.0;  // fraction of |uhat|^2 outside the nodes used / in the outer band
  std::vector<std::string> warnings;
};

constexpr double kTailWarn = 1e-8;
constexpr double kTailError = 1e-4;

// Kohn-Nirenberg: Op_h(a)u(x) = sum_eta e^{i x.eta} a(x, h eta) uhat(eta) deta / (2 pi)^d.
GridState apply_pdo(const Symbol& a, const GridState& u, double h, QuantizationDiagnostics* diag = nullptr);
// Dense matrix of Op_h(a) acting on grid values (d = 1).
Eigen::MatrixXcd pdo_matrix(const Symbol& a, const Grid& g, double h);

// J(Psi, b) at table time t (must be a t-grid node); order < 0 uses every
// amplitude order available.
GridState apply_fio(const PhaseTable& table, const AmplitudeSet& amps, double t, const GridState& u, int order = -1,
                    QuantizationDiagnostics* diag = nullptr);

enum class KernelMethod { direct_quadrature, stationary_phase };

struct FioKernelSample {
  double t = 0.0, x = 0.0, y = 0.0;
  cplx value;
  KernelMethod method = KernelMethod::direct_quadrature;
  double error_estimate = 0.0;
};

// Direct trapezoid over the table's xi grid; error estimate from the
// doubled-step sum.
FioKernelSample fio_kernel(const PhaseTable& table, const AmplitudeSet& amps, int t_index, int x_index, double y,
                           int order = -1);
// Stationary phase: solves X(t, y, xi*) = x, then the quadratic-phase formula
// with amplitude chi(y, xi*) e^{-int Y}.
FioKernelSample fio_kernel_stationary(const SymbolModel& m, const AmplitudeCutoff& chi, double t, double x, double y,
                                      double xi_guess, double xi_step);

struct DispersiveResult {
  double sup = 0.0;
  double t_arg = 0.0, x_arg = 0.0, y_arg = 0.0;
  std::vector<FioKernelSample> samples;
};

// sup over samples of t^{d/2} |K(t, x, y)|; ys(t, x) lists the y samples for each (t, x).
DispersiveResult dispersive_constant(const PhaseTable& table, const AmplitudeSet& amps,
                                     const std::vector<int>& t_indices, const std::vector<int>& x_indices,
                                     const std::function<std::vector<double>(double t, double x)>& ys,
                                     int order = -1);

// L^p_t L^q_x by Riemann sum in x and trapezoid in t (max for infinite exponents).
struct NormWeight {
  std::function<double(const Vec& x)> w;  // multiplies |u| pointwise
};
double mixed_norm(const std::vector<GridState>& snapshots, const std::vector<double>& times, double p, double q,
                  const std::optional<NormWeight>& weight = std::nullopt);
double lq_norm(const GridState& u, double q, const std::optional<NormWeight>& weight = std::nullopt);

// || Op_h(a) Op_h(b) u - Op_h(ab) u ||_2
double composition_gap(const Symbol& a, const Symbol& b, const GridState& u, double h);

}  // namespace sclab
