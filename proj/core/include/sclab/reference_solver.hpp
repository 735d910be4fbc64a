#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sclab/grid.hpp"
#include "sclab/hamiltonian.hpp"
#include "sclab/parametrix.hpp"

namespace sclab {

enum class Discretization { spectral_flat, fd4_divergence };
Discretization discretization_from_string(const std::string& s);
std::string to_string(Discretization d);

// H = 1/2 (D - A) g (D - A) + V on the periodic grid.
//   spectral_flat:  constant metric; kinetic part is an exact Fourier multiplier,
//                   minimal coupling as -1/2 (D A + A D) + 1/2 |A|^2.
//   fd4_divergence: 1/2 B* g B + V with B = -i d - A a fourth-order staggered
//                   difference, g and A sampled at cell midpoints.  In d = 2
//                   the metric must be diagonal.
struct DiscreteHamiltonian {
  Grid grid;
  SymbolModel model;  // after truncation
  Discretization disc = Discretization::spectral_flat;
  std::optional<TruncationParams> truncation;

  bool real = false;              // A == 0: real symmetric
  bool fourier_diagonal = false;  // spectral_flat with constant A and V == 0
  double asymmetry = 0.0;         // ||M - M*|| / ||M|| before symmetrization

  Eigen::MatrixXcd matrix;  // d = 1 only; symmetrized

  std::vector<double> V;                    // at nodes
  std::vector<double> A[kMaxDim];           // at nodes (spectral_flat)
  std::vector<double> g_mid[kMaxDim];       // fd4: g^{jj} at the +1/2 midpoint along axis j
  std::vector<double> A_mid[kMaxDim];       // fd4: A_j at the same midpoints
  Mat g_const;                              // spectral_flat metric

  GridState apply(const GridState& u) const;
  // Symbol of the kinetic multiplier (spectral_flat only), FFT index order.
  std::vector<double> kinetic_symbol() const;
  std::uint64_t hash() const;
};

// xi_declared: largest frequency the caller intends to represent; the grid must
// satisfy n pi / half_width >= 4 xi_declared.
DiscreteHamiltonian build_discrete_hamiltonian(const SymbolModel& m, const Grid& g, Discretization disc,
                                               const std::optional<TruncationParams>& truncation = std::nullopt,
                                               std::optional<double> xi_declared = std::nullopt);

// Dense eigen-decomposition (d = 1, n <= 2048).  Fourier-diagonal operators are
// decomposed analytically.
struct EigenPairs {
  Grid grid;
  bool fourier = false;
  bool real = false;
  Eigen::VectorXd values;     // ascending, or FFT order when fourier
  Eigen::MatrixXd rvectors;   // real case
  Eigen::MatrixXcd vectors;   // complex case

  std::vector<cplx> project(const GridState& u) const;                     // V* u
  GridState expand(const std::vector<cplx>& c) const;                      // V c
  GridState apply(const std::function<cplx(double)>& f, const GridState& u) const;
};

constexpr int kMaxEigSize = 2048;

// Memory cache in front of an on-disk cache.  The directory is taken from
// SCLAB_EIG_CACHE ("off" disables it), else $XDG_CACHE_HOME/sclab, else
// ~/.cache/sclab.
std::shared_ptr<const EigenPairs> eigen_pairs(const DiscreteHamiltonian& Hd);
void set_eig_cache_dir(const std::string& dir);  // empty disables the disk cache
std::string eig_cache_dir();

enum class PropagationMethod { split_step, lanczos, eig };
PropagationMethod propagation_method_from_string(const std::string& s);
std::string to_string(PropagationMethod m);

struct PropagateOptions {
  double dt = 1e-3;      // split_step
  int krylov_dim = 30;   // lanczos
  double tol = 1e-12;    // lanczos error per unit time
};

GridState propagate(const DiscreteHamiltonian& Hd, const GridState& u, double t, PropagationMethod method,
                    const PropagateOptions& opt = {});

// e^{-itH} u for many t with one projection.
class EigenPropagator {
 public:
  EigenPropagator(std::shared_ptr<const EigenPairs> eig, const GridState& u);
  GridState at(double t) const;

 private:
  std::shared_ptr<const EigenPairs> eig_;
  std::vector<cplx> c_;
};

// u -> f(h^2 H) u on the eigen-expansion.
GridState spectral_function(const DiscreteHamiltonian& Hd, const std::function<double(double)>& f, double h,
                            const GridState& u);

// Largest singular value by power iteration on A*A from seeded random starts.
struct NormEstimate {
  double value = 0.0;
  std::vector<double> per_restart;
  bool converged = false;  // last relative change below 1e-3 on every restart
  int iterations = 0;
};
NormEstimate estimate_operator_norm(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& A,
                                    const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& A_adj, int n,
                                    std::uint64_t seed, int iterations = 20, int restarts = 3);

struct FcGapOptions {
  std::optional<double> symbol_eps;  // cutoff used in a_{h,0}; defaults to eps
  std::uint64_t seed = 1;
  int iterations = 20;
  int restarts = 3;
};

struct FcGapResult {
  double h = 0.0, eps = 0.0, symbol_eps = 0.0;
  NormEstimate norm;
};

// || Op(psi_eps) f(h^2 H) - Op_h(psi_eps(x, xi/h) f(p_h)) ||
FcGapResult functional_calculus_gap(const DiscreteHamiltonian& Hd, const SymbolModel& m, double h, double eps,
                                    const std::function<double(double)>& f, const FcGapOptions& opt = {});

struct EgorovOptions {
  double flow_tol = 1e-10;
  std::uint64_t seed = 1;
  int iterations = 20;
  int restarts = 3;
};

struct EgorovResult {
  double t = 0.0, h = 0.0;
  NormEstimate norm;
  long flows = 0;
};

// || e^{itH} Op_h(eta) e^{-itH} - Op_h(eta o exp tH_p) ||, eta a symbol in (x, h xi).
// The composed symbol at a node (x, xi) is eta(X, h Xi) with (X, Xi) the p-flow
// from (x, xi) at time t.
EgorovResult egorov_check(const DiscreteHamiltonian& Hd, const SymbolModel& m, const Symbol& eta, double t, double h,
                          const EgorovOptions& opt = {});

// Op(a) on a d = 1 grid in factored form W F: F the forward transform (by FFT),
// W(j, k) = e^{i x_j xi_k} a(x_j, xi_k) dxi / (2 pi) with k in FFT order.
struct PdoOperator {
  Grid grid;
  Eigen::MatrixXcd W;

  static PdoOperator from_symbol(const Symbol& a, const Grid& g, double h);
  // S(j, k) = a(x_j, xi_k)
  static PdoOperator from_samples(const Eigen::MatrixXcd& S, const Grid& g);
  Eigen::VectorXcd apply(const Eigen::VectorXcd& u) const;
  Eigen::VectorXcd apply_adjoint(const Eigen::VectorXcd& v) const;
};

}  // namespace sclab
