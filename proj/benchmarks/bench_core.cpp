#include <benchmark/benchmark.h>

#include "sclab/parametrix.hpp"
#include "sclab/reference_solver.hpp"

using namespace sclab;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

void BM_FlowSubquadratic(benchmark::State& st) {
  auto m = catalog::subquadratic_power(1, 0.5);
  for (auto _ : st) {
    auto r = integrate_flow(m, SymbolChoice::p, std::nullopt, {v1(0.7), v1(-0.4)}, {2.0}, 1e-10);
    benchmark::DoNotOptimize(r.X);
  }
}
BENCHMARK(BM_FlowSubquadratic);

void BM_FlowMagnetic2D(benchmark::State& st) {
  auto m = catalog::linear_magnetic(2, 1.0, 0.5);
  for (auto _ : st) {
    auto r = integrate_flow(m, SymbolChoice::p, std::nullopt, {Vec::Constant(2, 0.7), Vec::Constant(2, -0.4)}, {2.0}, 1e-10);
    benchmark::DoNotOptimize(r.X);
  }
}
BENCHMARK(BM_FlowMagnetic2D);

void BM_ApplyPdo(benchmark::State& st) {
  Grid g{1, int(st.range(0)), 16.0};
  GridState u = gaussian_packet(g, v1(1.0), v1(2.0), 1.0);
  auto a = Symbol::general([](const Vec& x, const Vec& xi) { return cplx(std::exp(-x[0] * x[0] - xi[0] * xi[0])); });
  for (auto _ : st) benchmark::DoNotOptimize(apply_pdo(a, u, 1.0));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_ApplyPdo)->RangeMultiplier(2)->Range(128, 1024)->Unit(benchmark::kMillisecond);

void BM_EigenPairs(benchmark::State& st) {
  Grid g{1, int(st.range(0)), 16.0};
  auto Hd = build_discrete_hamiltonian(catalog::harmonic(1), g, Discretization::spectral_flat);
  set_eig_cache_dir("");
  for (auto _ : st) benchmark::DoNotOptimize(eigen_pairs(Hd));
}
BENCHMARK(BM_EigenPairs)->RangeMultiplier(2)->Range(128, 1024)->Unit(benchmark::kMillisecond);

void BM_Propagate(benchmark::State& st) {
  Grid g{1, 1024, 32.0};
  auto Hd = build_discrete_hamiltonian(catalog::subquadratic_power(1, 0.5), g, Discretization::spectral_flat);
  GridState u = gaussian_packet(g, v1(1.0), v1(2.0), 1.0);
  const auto method = PropagationMethod(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(propagate(Hd, u, 0.5, method));
}
BENCHMARK(BM_Propagate)
    ->Arg(int(PropagationMethod::lanczos))
    ->Arg(int(PropagationMethod::split_step))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
