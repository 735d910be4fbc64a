#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include <nlohmann/json.hpp>

#include "sclab/classical_flow.hpp"
#include "sclab/eikonal_wkb.hpp"
#include "sclab/experiments.hpp"
#include "sclab/harmonic_analysis.hpp"
#include "sclab/reference_solver.hpp"

using namespace sclab;
using nlohmann::json;

namespace {

struct ModelArgs {
  std::string name = "flat_free";
  int d = 1;
  std::vector<std::string> params;

  void add(CLI::App* app) {
    app->add_option("--model", name, "catalog model name")->check(CLI::IsMember(catalog::names()));
    app->add_option("--dim", d, "dimension")->check(CLI::Range(1, 2));
    app->add_option("--param", params, "model parameter key=value (repeatable)");
  }
  SymbolModel build() const {
    std::map<std::string, double> p;
    for (const auto& s : params) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw CLI::ValidationError("--param", "expected key=value, got " + s);
      p[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
    }
    return catalog::by_name(name, d, p);
  }
};

struct GridArgs {
  int n = 512;
  double half_width = 16.0;
  void add(CLI::App* app) {
    app->add_option("--n", n, "points per axis (power of two)");
    app->add_option("--half-width", half_width, "box half width");
  }
  Grid build(int d) const {
    Grid g{d, n, half_width};
    g.validate();
    return g;
  }
};

Vec vec_of(const std::vector<double>& v, int d, const char* what) {
  if (int(v.size()) != d) throw CLI::ValidationError(what, "expected " + std::to_string(d) + " components");
  Vec out(d);
  for (int i = 0; i < d; ++i) out[i] = v[i];
  return out;
}

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream(out) << j.dump(2) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sclab: semiclassical propagation laboratory"};
  app.require_subcommand(1);

  // ------------------------------------------------------------------ flow
  auto* flow = app.add_subcommand("flow", "Hamilton flow tools");
  flow->require_subcommand(1);

  ModelArgs trace_model;
  std::vector<double> trace_x, trace_xi;
  double trace_t = 1.0, trace_tol = 1e-10;
  int trace_samples = 11;
  std::string trace_choice = "p", trace_out;
  bool trace_jac = false;
  auto* trace = flow->add_subcommand("trace", "integrate one trajectory");
  trace_model.add(trace);
  trace->add_option("--x", trace_x, "start position")->required();
  trace->add_option("--xi", trace_xi, "start momentum")->required();
  trace->add_option("--t", trace_t, "final time (negative for backward)");
  trace->add_option("--samples", trace_samples, "output samples")->check(CLI::Range(2, 100000));
  trace->add_option("--tol", trace_tol, "integrator tolerance");
  trace->add_option("--symbol", trace_choice, "p or k")->check(CLI::IsMember({"p", "k"}));
  trace->add_flag("--jacobian", trace_jac, "also output the variational matrix");
  trace->add_option("--out", trace_out, "output CSV file (default stdout)");

  ModelArgs nt_model;
  double nt_energy = 0.5, nt_T = 60.0, nt_R = 6.0, nt_box = 2.0;
  int nt_pos = 9, nt_dirs = 8;
  std::string nt_out;
  auto* nontrap = flow->add_subcommand("nontrap", "sampled escape scan of the kinetic flow");
  nt_model.add(nontrap);
  nontrap->add_option("--energy", nt_energy, "energy shell k = E");
  nontrap->add_option("--T", nt_T, "time budget per direction");
  nontrap->add_option("--R", nt_R, "escape radius");
  nontrap->add_option("--box", nt_box, "start positions in [-box, box]^d");
  nontrap->add_option("--positions", nt_pos, "positions per axis");
  nontrap->add_option("--directions", nt_dirs, "directions (d = 2)");
  nontrap->add_option("--out", nt_out, "output JSON file (default stdout)");

  // ------------------------------------------------------------------ wkb
  auto* wkb = app.add_subcommand("wkb", "phase and amplitude tables");
  wkb->require_subcommand(1);

  ModelArgs ph_model;
  GridArgs ph_grid;
  double ph_eps = 1.0, ph_tmax = 0.1, ph_ximax = 8.0;
  int ph_nt = 11, ph_nxi = 65;
  std::string ph_out = "phase.scl";
  auto* phase = wkb->add_subcommand("phase", "build a phase table on a periodic x grid");
  ph_model.add(phase);
  ph_grid.add(phase);
  phase->add_option("--eps", ph_eps, "quadratic-zone parameter");
  phase->add_option("--t-max", ph_tmax, "last time node");
  phase->add_option("--nt", ph_nt, "time nodes including t = 0")->check(CLI::Range(2, 100000));
  phase->add_option("--xi-max", ph_ximax, "largest |xi| (snapped to the dual grid)");
  phase->add_option("--out", ph_out, "output table file");

  std::string am_in, am_out = "amps.scl", am_chi = "chi_eps";
  int am_order = 1;
  double am_eps = 1.0, am_plateau = 8.0, am_edge = 32.0;
  ModelArgs am_model;
  auto* amps = wkb->add_subcommand("amps", "amplitude hierarchy for a stored phase table");
  am_model.add(amps);
  amps->add_option("--in", am_in, "phase table file")->required();
  amps->add_option("--order", am_order, "number of amplitude orders N")->check(CLI::Range(1, kMaxAmplitudeOrder));
  amps->add_option("--chi", am_chi, "initial amplitude: chi_eps or frequency")->check(CLI::IsMember({"chi_eps", "frequency"}));
  amps->add_option("--chi-eps", am_eps, "epsilon for chi_eps");
  amps->add_option("--plateau", am_plateau, "frequency cutoff plateau");
  amps->add_option("--edge", am_edge, "frequency cutoff edge");
  amps->add_option("--out", am_out, "output file (phase table plus amplitudes)");

  ModelArgs ek_model;
  double ek_xi = 1.0, ek_lo = -10.0, ek_hi = 10.0, ek_h = 0.25, ek_L = 2.0;
  int ek_points = 101;
  std::string ek_dir = "outgoing", ek_out;
  auto* eik = wkb->add_subcommand("eikonal1d", "stationary 1D eikonal solution");
  ek_model.add(eik);
  eik->add_option("--xi", ek_xi, "energy parameter: p~_h(x, S') = xi^2 / 2");
  eik->add_option("--lo", ek_lo, "left end");
  eik->add_option("--hi", ek_hi, "right end");
  eik->add_option("--semi-h", ek_h, "semiclassical parameter");
  eik->add_option("--L", ek_L, "truncation scale");
  eik->add_option("--direction", ek_dir, "outgoing or incoming")->check(CLI::IsMember({"outgoing", "incoming"}));
  eik->add_option("--points", ek_points, "output samples");
  eik->add_option("--out", ek_out, "output JSON file (default stdout)");

  // ------------------------------------------------------------------ solve
  auto* solve = app.add_subcommand("solve", "reference quantum propagation");
  solve->require_subcommand(1);

  ModelArgs ev_model;
  GridArgs ev_grid;
  std::string ev_disc = "spectral_flat", ev_method = "eig", ev_out;
  double ev_t = 1.0, ev_sigma = 1.0, ev_dt = 1e-3;
  std::vector<double> ev_x0, ev_xi0;
  int ev_krylov = 30;
  auto* evolve = solve->add_subcommand("evolve", "propagate a Gaussian packet");
  ev_model.add(evolve);
  ev_grid.add(evolve);
  evolve->add_option("--disc", ev_disc, "spectral_flat or fd4_divergence");
  evolve->add_option("--method", ev_method, "eig, split_step or lanczos")
      ->check(CLI::IsMember({"eig", "split_step", "lanczos"}));
  evolve->add_option("--t", ev_t, "time");
  evolve->add_option("--x0", ev_x0, "packet centre");
  evolve->add_option("--xi0", ev_xi0, "packet frequency");
  evolve->add_option("--sigma", ev_sigma, "packet width");
  evolve->add_option("--dt", ev_dt, "split-step size");
  evolve->add_option("--krylov", ev_krylov, "Krylov dimension");
  evolve->add_option("--out", ev_out, "CSV of the final state (default: summary only)");

  ModelArgs sp_model;
  GridArgs sp_grid;
  std::string sp_disc = "spectral_flat";
  int sp_count = 10;
  auto* spectrum = solve->add_subcommand("spectrum", "lowest eigenvalues of the discrete Hamiltonian");
  sp_model.add(spectrum);
  sp_grid.add(spectrum);
  spectrum->add_option("--disc", sp_disc, "spectral_flat or fd4_divergence");
  spectrum->add_option("--count", sp_count, "number of eigenvalues");

  // ------------------------------------------------------------------ lp
  auto* lp = app.add_subcommand("lp", "Littlewood-Paley tools");
  lp->require_subcommand(1);
  GridArgs lp_grid;
  double lp_x0 = 0.0, lp_xi0 = 3.0, lp_sigma = 1.0;
  std::string lp_filters;
  auto* decompose = lp->add_subcommand("decompose", "band norms of a Gaussian packet");
  lp_grid.add(decompose);
  decompose->add_option("--x0", lp_x0, "packet centre");
  decompose->add_option("--xi0", lp_xi0, "packet frequency");
  decompose->add_option("--sigma", lp_sigma, "packet width");
  decompose->add_option("--filters", lp_filters, "export the sampled filter bank as CSV");

  // ------------------------------------------------------------------ lab
  auto* lab = app.add_subcommand("lab", "scenario experiments");
  lab->require_subcommand(1);
  std::string lab_file, lab_exp = "all", lab_out = "lab_out";
  auto* run = lab->add_subcommand("run", "run experiments from a scenario file");
  run->add_option("scenario", lab_file, "scenario TOML")->required()->check(CLI::ExistingFile);
  std::vector<std::string> exps = experiment_names();
  exps.push_back("all");
  run->add_option("--experiment", lab_exp, "experiment name or all")->check(CLI::IsMember(exps));
  run->add_option("--out", lab_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*trace) {
      SymbolModel m = trace_model.build();
      PhasePoint start{vec_of(trace_x, m.dim, "--x"), vec_of(trace_xi, m.dim, "--xi")};
      std::vector<double> ts;
      for (int i = 1; i < trace_samples; ++i) ts.push_back(trace_t * i / (trace_samples - 1));
      SymbolChoice c = symbol_choice_from_string(trace_choice);
      FlowResult fr = trace_jac ? flow_jacobian(m, c, std::nullopt, start, ts, trace_tol)
                                : integrate_flow(m, c, std::nullopt, start, ts, trace_tol);
      SymbolModel eff = model_for(m, c, std::nullopt);
      std::ofstream file;
      if (!trace_out.empty()) file.open(trace_out);
      std::ostream& out = trace_out.empty() ? std::cout : file;
      const int d = m.dim;
      out << "t";
      for (int a = 0; a < d; ++a) out << ",X" << a;
      for (int a = 0; a < d; ++a) out << ",Xi" << a;
      out << ",energy";
      if (trace_jac)
        for (int a = 0; a < 2 * d; ++a)
          for (int b = 0; b < 2 * d; ++b) out << ",J" << a << b;
      out << "\n";
      auto row = [&](double t, const Vec& X, const Vec& Xi, const PhaseMat* J) {
        out << fmt_num(t);
        for (int a = 0; a < d; ++a) out << "," << fmt_num(X[a]);
        for (int a = 0; a < d; ++a) out << "," << fmt_num(Xi[a]);
        out << "," << fmt_num(eval_symbol_p(eff, X, Xi));
        if (J)
          for (int a = 0; a < 2 * d; ++a)
            for (int b = 0; b < 2 * d; ++b) out << "," << fmt_num((*J)(a, b));
        out << "\n";
      };
      PhaseMat I = PhaseMat::Identity(2 * d, 2 * d);
      row(0.0, start.x, start.xi, trace_jac ? &I : nullptr);
      for (size_t k = 0; k < fr.times.size(); ++k) row(fr.times[k], fr.X[k], fr.Xi[k], trace_jac ? &fr.jac[k] : nullptr);
    } else if (*nontrap) {
      SymbolModel m = nt_model.build();
      NontrapSampling s;
      s.box = nt_box;
      s.n_positions = nt_pos;
      s.n_directions = nt_dirs;
      NontrappingReport r = nontrapping_scan(m, nt_energy, s, nt_T, nt_R);
      emit(r.to_json(), nt_out);
    } else if (*phase) {
      SymbolModel m = ph_model.build();
      Grid g = ph_grid.build(1);
      std::vector<double> ts, xs;
      for (int i = 0; i < ph_nt; ++i) ts.push_back(ph_tmax * i / (ph_nt - 1));
      const int kmax = int(std::floor(ph_ximax / g.dxi()));
      for (int k = -kmax; k <= kmax; ++k) xs.push_back(k * g.dxi());
      PhaseTable T = build_phase(m, ph_eps, PhaseGrids::on_grid(g, ts, xs));
      save_phase_table(ph_out, T);
      PhaseResidual res = phase_residual(m, T);
      json j = {{"model_id", m.id},          {"out", ph_out},      {"nt", T.nt()},
                {"nx", T.nx()},               {"nxi", T.nk()},      {"phase_residual", res.max_residual},
                {"residual_samples", res.n_samples}};
      emit(j, "");
    } else if (*amps) {
      SymbolModel m = am_model.build();
      LoadedTables L = load_phase_table(am_in);
      if (L.table.model_id != m.id) throw DomainError("table was built for " + L.table.model_id);
      AmplitudeCutoff chi = am_chi == "chi_eps" ? chi_epsilon_cutoff(am_eps) : frequency_cutoff(am_plateau, am_edge);
      if (am_order >= 2) {
        // characteristics are not stored; rebuild them
        PhaseGrids gr{L.table.t_grid, L.table.x_grid, L.table.xi_grid, L.table.periodic};
        PhaseBuildOptions po;
        po.t_eps = L.table.t_eps;
        L.table = build_phase(m, L.table.epsilon, gr, po);
      }
      AmplitudeSet A = build_amplitudes(m, L.table, chi, am_order);
      save_phase_table(am_out, L.table, &A);
      json j = {{"model_id", m.id}, {"out", am_out}, {"order", am_order}, {"chi", A.chi_name}};
      if (L.table.has_characteristics) j["transport_residual"] = transport_residual(m, L.table, A);
      emit(j, "");
    } else if (*eik) {
      SymbolModel m = ek_model.build();
      EikonalSolution s = solve_eikonal_1d(m, TruncationParams{ek_h, ek_L}, ek_xi, ek_lo, ek_hi,
                                           ek_dir == "outgoing" ? EikonalDirection::outgoing : EikonalDirection::incoming);
      json rows = json::array();
      for (int i = 0; i < ek_points; ++i) {
        const double x = ek_lo + (ek_hi - ek_lo) * i / std::max(1, ek_points - 1);
        rows.push_back({{"x", x}, {"S", s.S(x)}, {"dS", s.dS(x)}});
      }
      json j = {{"model_id", m.id},
                {"anchor_rule", s.anchor_rule},
                {"anchor_x", s.anchor_x},
                {"tail_correction", s.tail_correction},
                {"samples", rows}};
      emit(j, ek_out);
    } else if (*evolve) {
      SymbolModel m = ev_model.build();
      Grid g = ev_grid.build(m.dim);
      Vec x0 = ev_x0.empty() ? Vec(Vec::Zero(m.dim)) : vec_of(ev_x0, m.dim, "--x0");
      Vec xi0 = ev_xi0.empty() ? Vec(Vec::Zero(m.dim)) : vec_of(ev_xi0, m.dim, "--xi0");
      DiscreteHamiltonian Hd = build_discrete_hamiltonian(m, g, discretization_from_string(ev_disc));
      GridState u = gaussian_packet(g, x0, xi0, ev_sigma);
      PropagateOptions po;
      po.dt = ev_dt;
      po.krylov_dim = ev_krylov;
      GridState v = propagate(Hd, u, ev_t, propagation_method_from_string(ev_method), po);
      json j = {{"model_id", m.id},
                {"method", ev_method},
                {"t", ev_t},
                {"norm_initial", u.norm()},
                {"norm_final", v.norm()},
                {"boundary_mass", boundary_mass(v)},
                {"spectral_tail", spectral_tail_mass(v)},
                {"asymmetry", Hd.asymmetry}};
      if (!ev_out.empty()) {
        std::ofstream out(ev_out);
        out << (m.dim == 1 ? "x" : "x0,x1") << ",re,im\n";
        for (size_t i = 0; i < v.values.size(); ++i) {
          Vec x = g.point(i);
          for (int a = 0; a < m.dim; ++a) out << fmt_num(x[a]) << ",";
          out << fmt_num(v.values[i].real()) << "," << fmt_num(v.values[i].imag()) << "\n";
        }
        j["out"] = ev_out;
      }
      emit(j, "");
    } else if (*spectrum) {
      SymbolModel m = sp_model.build();
      Grid g = sp_grid.build(m.dim);
      DiscreteHamiltonian Hd = build_discrete_hamiltonian(m, g, discretization_from_string(sp_disc));
      auto e = eigen_pairs(Hd);
      std::vector<double> vals(e->values.data(), e->values.data() + e->values.size());
      std::sort(vals.begin(), vals.end());
      vals.resize(std::min<size_t>(vals.size(), size_t(std::max(0, sp_count))));
      emit({{"model_id", m.id}, {"eigenvalues", vals}, {"asymmetry", Hd.asymmetry}}, "");
    } else if (*decompose) {
      Grid g = lp_grid.build(1);
      GridState u = gaussian_packet(g, Vec::Constant(1, lp_x0), Vec::Constant(1, lp_xi0), lp_sigma);
      DyadicLP L = build_lp(g);
      json bands = json::array();
      GridState sum(g);
      double sq = 0.0;
      for (int j = 0; j <= L.j_max; ++j) {
        GridState b = lp_apply(L, j, u);
        sum += b;
        sq += b.norm() * b.norm();
        bands.push_back({{"j", j}, {"norm", b.norm()}});
      }
      if (!lp_filters.empty()) {
        std::ofstream out(lp_filters);
        out << "xi";
        for (int j = 0; j <= L.j_max; ++j) out << ",S" << j;
        out << "\n";
        for (int k = 0; k < g.n; ++k) {
          const double xi = -g.xi_max() + k * g.dxi();
          out << fmt_num(xi);
          for (int j = 0; j <= L.j_max; ++j) out << "," << fmt_num(L.filter(j, Vec::Constant(1, xi)));
          out << "\n";
        }
      }
      emit({{"j_max", L.j_max},
            {"bands", bands},
            {"reconstruction_error", (sum - u).norm()},
            {"square_sum_ratio", sq / (u.norm() * u.norm())}},
           "");
    } else if (*run) {
      Scenario sc = load_scenario(lab_file);
      std::vector<ExperimentReport> reps;
      std::vector<std::string> names = lab_exp == "all" ? experiment_names() : std::vector<std::string>{lab_exp};
      bool pass = true;
      for (const auto& n : names) {
        ExperimentReport r = run_experiment(sc, n);
        std::cout << (r.gated ? (r.pass ? "PASS " : "FAIL ") : "PROBE ") << n << "\n";
        if (r.gated) pass = pass && r.pass;
        reps.push_back(std::move(r));
      }
      write_reports(lab_out, sc, reps);
      return pass ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
