#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sclab/classical_flow.hpp"
#include "sclab/grid.hpp"

namespace sclab {

// Phase tables are one-dimensional: samples (t_m, x_i, xi_k).
struct PhaseGrids {
  std::vector<double> t;  // ascending, t >= 0
  std::vector<double> x;
  std::vector<double> xi;
  std::optional<Grid> periodic;  // set when x are the points of a periodic grid

  static PhaseGrids on_grid(const Grid& g, std::vector<double> t, std::vector<double> xi);
};

// rho = phi(s/2), s = eps |xi| / (2 <x>): 1 on Omega(eps), supported in Omega(eps/2).
double region_rho(double eps, double x, double xi);

struct PhaseTable {
  std::string model_id;
  double epsilon = 1.0;
  double t_eps = 0.0;
  std::vector<double> t_grid, x_grid, xi_grid;
  std::optional<Grid> periodic;

  // layout (m, k, i) -> (m * nk + k) * nx + i
  std::vector<double> psi, dpsi_dx, dpsi_dxi, d2psi_dxi2;
  std::vector<double> Y;          // backward position (x where rho = 0)
  std::vector<double> rho;
  std::vector<double> ycal;       // transport rate at the endpoint
  std::vector<double> ycal_int;   // int_0^t of the transport rate
  std::vector<std::uint8_t> on_region;  // (x, xi) in Omega(eps)

  // Characteristic through (t_m, x_i, xi_k): X(t_l) and the transport integral
  // at t_l for l <= m.  Not serialized.
  std::vector<double> char_X, char_I;
  bool has_characteristics = false;

  int nt() const { return int(t_grid.size()); }
  int nx() const { return int(x_grid.size()); }
  int nk() const { return int(xi_grid.size()); }
  size_t index(int m, int k, int i) const { return (size_t(m) * nk() + k) * nx() + i; }
  size_t char_offset(int m, int k, int i) const;
};

struct PhaseBuildOptions {
  double tol = 1e-12;        // flow tolerance
  double t_eps = 0.0;        // declared window; 0 means max(t_grid)
  bool characteristics = true;
};

PhaseTable build_phase(const SymbolModel& m, double epsilon, const PhaseGrids& grids,
                       const PhaseBuildOptions& opt = {});

struct PhaseResidual {
  double max_residual = 0.0;
  int n_samples = 0;
};
// max over Omega(eps) and interior t-levels of |d_t Psi + p(x, d_x Psi)|, d_t Psi by
// centered differences.
PhaseResidual phase_residual(const SymbolModel& m, const PhaseTable& table);

struct GradientCheck {
  double max_dxi_error = 0.0;  // |d_xi Psi - Y|
  double max_dx_error = 0.0;   // |d_x Psi - Xi(t, Y, xi)|
  int n_samples = 0;
};
// Recomputes Psi~ at (x +- delta, xi) and (x, xi +- delta) by fresh inversions and
// compares the central differences with the stored gradient tables.
GradientCheck gradient_identity_check(const SymbolModel& m, const PhaseTable& table, double delta = 1e-3,
                                      int stride = 1);

struct PhaseEstimateFit {
  double C_hat = 0.0;         // max |Psi - x xi + t p| / (t^2 <x>^2)
  double C_second = 0.0;      // max |d_xi^2 Psi + t g| / t^2
  int n_samples = 0;
};
PhaseEstimateFit fit_phase_estimate(const SymbolModel& m, const PhaseTable& table);

// Initial amplitude chi(x, xi).
struct AmplitudeCutoff {
  std::string name;
  std::function<double(double x, double xi)> value;
};
AmplitudeCutoff chi_epsilon_cutoff(double eps);  // 1 - psi_eps
// 1 for |xi| <= plateau, smooth roll-off to 0 at |xi| = edge.
AmplitudeCutoff frequency_cutoff(double plateau, double edge);

struct AmplitudeSet {
  int N = 1;
  std::string chi_name;
  std::vector<std::vector<cplx>> b;  // b[j] in table layout
  std::vector<std::uint8_t> support;  // rho > 0, i.e. Omega(eps/2)
  // sum_{j < order} b_j at a table index
  cplx total(size_t idx, int order) const;
};

constexpr int kMaxAmplitudeOrder = 3;

AmplitudeSet build_amplitudes(const SymbolModel& m, const PhaseTable& table, const AmplitudeCutoff& chi, int N);

// K b = -1/2 d_x (g d_x (W b)) on a periodic slice, W the padding taper.
std::vector<cplx> apply_kinetic_slice(const SymbolModel& m, const Grid& g, const std::vector<cplx>& b);
// C^infinity taper: 1 on |x| <= 0.8 L, 0 beyond 0.9 L.
double padding_taper(const Grid& g, double x);

// Max residual per order of the transport equations along characteristics.
std::vector<double> transport_residual(const SymbolModel& m, const PhaseTable& table, const AmplitudeSet& amps);

// 1D stationary eikonal for p~_h(x, dS) = xi^2/2.
enum class EikonalDirection { outgoing, incoming };

struct EikonalSolution {
  double xi = 1.0;
  double a = 0.0, b = 1.0;  // x_range
  EikonalDirection direction = EikonalDirection::outgoing;
  double anchor_x = 0.0, anchor_value = 0.0, tail_correction = 0.0;
  std::string anchor_rule;
  std::function<double(double)> dS;
  double S(double x) const;
  // cumulative integral of dS on a uniform cell grid
  std::vector<double> cell_edges, cumulative;
};

EikonalSolution solve_eikonal_1d(const SymbolModel& m, const TruncationParams& tp, double xi,
                                 double x_lo, double x_hi, EikonalDirection dir);

// Binary container: 8-byte magic, u64 header length, JSON header, raw doubles.
void save_phase_table(const std::string& path, const PhaseTable& table, const AmplitudeSet* amps = nullptr);
struct LoadedTables {
  PhaseTable table;
  std::optional<AmplitudeSet> amps;
  nlohmann::json header;
};
LoadedTables load_phase_table(const std::string& path);

}  // namespace sclab
