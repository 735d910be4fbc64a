#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sclab/hamiltonian.hpp"

namespace sclab {

// State: X, Xi, optional 2d x 2d Jacobian (column-major), optional action
// integral of L = xi.d_xi p - p, optional integral of the transport rate.
using FlowState = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 4 * kMaxDim + 4 * kMaxDim * kMaxDim + 2, 1>;

struct FlowOptions {
  double tol = 1e-10;
  bool jacobian = false;
  bool action = false;     // requires nothing extra
  bool transport = false;  // integral of the transport rate; forces jacobian
  bool track_energy = true;
  long max_steps = 2'000'000;
  // Optional stop predicate checked after each accepted step (t, X, Xi).
  std::function<bool(double, const Vec&, const Vec&)> stop;
};

struct FlowResult {
  std::vector<double> times;
  std::vector<Vec> X, Xi;
  std::vector<PhaseMat> jac;
  std::vector<double> action;     // int_0^t L ds
  std::vector<double> transport;  // int_0^t Y ds
  double energy_drift = 0.0;
  long steps_accepted = 0;
  long steps_rejected = 0;
  bool stopped = false;  // stop predicate fired
  double t_stop = 0.0;
};

// Core integrator on the effective model (its symbol p is the Hamiltonian).
// t_samples must be monotone away from 0 in one direction.
FlowResult integrate_characteristic(const SymbolModel& effective, const Vec& x, const Vec& xi,
                                    const std::vector<double>& t_samples, const FlowOptions& opt);

// Public operations.  t_samples may mix signs; results are returned in the
// order given.
FlowResult integrate_flow(const SymbolModel& m, SymbolChoice choice, const std::optional<TruncationParams>& tp,
                          const PhasePoint& start, const std::vector<double>& t_samples, double tol);
FlowResult flow_jacobian(const SymbolModel& m, SymbolChoice choice, const std::optional<TruncationParams>& tp,
                         const PhasePoint& start, const std::vector<double>& t_samples, double tol);

// Rate of the amplitude transport integral along a characteristic:
// Y = 1/2 g : d_x^2 Psi + 1/2 sum(d_j g^{jk}(Xi_k - A_k) - g^{jk} d_j A_k),
// with d_x^2 Psi = (dXi/dy)(dX/dy)^{-1}.
double transport_rate(const CoeffJet& c, const Vec& Xi, const PhaseMat& J);

struct InverseOptions {
  double flow_tol = 1e-12;
  int max_iter = 50;
  double target = 1e-10;  // |F| goal relative to <x_target>; 1e-10 is the contract
  // record the final trajectory at these instants (must end at t)
  std::vector<double> record_times;
  bool action = false;
  bool transport = false;
};

struct InverseResult {
  Vec y;
  int iterations = 0;
  double residual = 0.0;
  FlowResult flow;  // final trajectory from y (records record_times or just t)
};

// Newton on F(y) = X(t,y,xi) - x_target; |F| <= 1e-10 <x_target> on success.
// The default guess is x_target - t d_xi p(x_target, xi).
InverseResult invert_position_map(const SymbolModel& effective, double t, const Vec& x_target, const Vec& xi,
                                  const std::optional<Vec>& guess = std::nullopt,
                                  const InverseOptions& opt = {});

enum class TrapVerdict { escaped_all, trapped_some, inconclusive };
std::string to_string(TrapVerdict v);

struct NontrapSample {
  Vec x, xi;
  bool escaped_forward = false, escaped_backward = false;
  double escape_time_forward = -1.0, escape_time_backward = -1.0;
  double max_radius = 0.0;
  bool failed = false;
};

struct NontrappingReport {
  std::string model_id;
  double energy = 0.0;
  double T_max = 0.0, R_escape = 0.0;
  std::vector<NontrapSample> samples;
  TrapVerdict verdict = TrapVerdict::inconclusive;
  nlohmann::json to_json() const;
};

struct NontrapSampling {
  double box = 2.0;          // positions in [-box, box]^d
  int n_positions = 9;       // per axis
  int n_directions = 8;      // d = 2; d = 1 uses +-1
  std::vector<PhasePoint> explicit_samples;  // overrides the grid when non-empty (xi rescaled to the shell)
};

// k-flow in both time directions; energy shell k = energy.
NontrappingReport nontrapping_scan(const SymbolModel& m, double energy, const NontrapSampling& sampling,
                                   double T_max, double R_escape, double tol = 1e-10);

struct FlowBoundRow {
  std::string quantity;  // "X-x" or "Xi-xi"
  int order = 0;         // |alpha + beta|
  std::string derivative;  // e.g. "d_x", "d_xi d_xi"
  double C_hat = 0.0, C_hat_refined = 0.0;
  bool stable = false;
};

struct FlowBoundsTable {
  double epsilon = 1.0, t_eps = 0.1;
  std::vector<FlowBoundRow> rows;
  bool pass = false;
  nlohmann::json to_json() const;
};

struct PhaseGrid1D {
  double x_max = 4.0, xi_max = 4.0;
  int nx = 9, nxi = 9, nt = 4;
};

// Fits C in |d^alpha_x d^beta_xi (X - x)| <= C |t| <x>^{1-|alpha+beta|} (and the
// Xi - xi analogue with <x>^{-|alpha+beta|}) over Omega(eps); refined grid doubles
// every axis count.
FlowBoundsTable verify_short_time_flow_bounds(const SymbolModel& m, double epsilon, double t_eps,
                                              const PhaseGrid1D& grid, double tol = 1e-11);

}  // namespace sclab
