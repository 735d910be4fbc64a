#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sclab/harmonic_analysis.hpp"
#include "sclab/reference_solver.hpp"

namespace sclab {

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;

  std::string model_name = "flat_free";
  int d = 1;
  std::map<std::string, double> model_params;

  Grid grid;
  Discretization disc = Discretization::spectral_flat;

  double epsilon = 1.0;
  double t_eps = 0.5;
  double T = 0.25;
  std::vector<double> h_list = {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125};
  double bound_factor = 3.0;  // "bounded across h" means max/min <= bound_factor
  int time_samples = 128;
  double R = 0.0;  // F(|x| > R) weight radius; 0 disables

  // Gaussian packet family: centre x0, frequency xi0 = frequency / h, widths sigmas
  double x0 = 0.0;
  double frequency = 1.0;
  std::vector<double> sigmas = {0.5, 1.0, 2.0, 4.0};

  // dispersive / annulus kernel scans
  std::string localization = "chi_eps";   // none | chi_eps | outgoing | incoming
  std::vector<double> x_samples = {1.0};  // units of 1/h
  std::vector<double> velocities = {0.75, 1.0, 1.25};  // units of 1/h
  std::vector<double> t_fractions = {0.25, 0.5, 0.75, 1.0};
  double kernel_t_max = 1.0;
  double delta = 0.5;
  double annulus_R = 1.0;

  // Strichartz / loss scan
  std::vector<std::pair<double, double>> pairs = {{8.0, 4.0}, {12.0, 3.0}, {INFINITY, 2.0}};
  std::string normalization = "l2";  // l2 | loss
  double symbol_x_extent = 4.0;      // Op_h(a) spatial extent for the loss scan

  // local smoothing
  std::vector<double> smoothing_sigmas = {0.1, 0.5, 2.0};
  int j_max = 5;

  // truncated-potential comparison for outgoing and incoming data
  std::vector<double> L_list = {2.0, 4.0, 8.0};
  double L_min = 4.0;
  double ik_tol = 1e-4;
  double ik_x0 = 0.5;  // packet centre in units of 1/h
  int ik_time_samples = 64;

  SymbolModel model() const;
  nlohmann::json to_json() const;
};

Scenario parse_scenario(const std::string& toml_text);
Scenario load_scenario(const std::string& path);

// CSV table with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  void add(std::vector<std::string> r) { rows.push_back(std::move(r)); }
  std::string csv() const;
};

struct ExperimentReport {
  std::string experiment;
  std::string scenario;
  bool pass = false;
  bool gated = true;  // false for probes with no pass/fail
  nlohmann::json report;
  std::map<std::string, Table> tables;
};

ExperimentReport run_dispersive_scan(const Scenario& sc);
ExperimentReport run_strichartz_table(const Scenario& sc, const std::vector<AdmissiblePair>& pairs);
ExperimentReport run_semiclassical_loss_scan(const Scenario& sc);
ExperimentReport run_local_smoothing(const Scenario& sc, double sigma);
ExperimentReport run_ik_comparison(const Scenario& sc, const std::vector<double>& L_list);
ExperimentReport run_annulus_scan(const Scenario& sc);

std::vector<std::string> experiment_names();
// Dispatches by name using the scenario's own knobs.
ExperimentReport run_experiment(const Scenario& sc, const std::string& name);

// report.json, tables/<experiment>_<table>.csv, meta.json
void write_reports(const std::string& dir, const Scenario& sc, const std::vector<ExperimentReport>& reports);

// Formatting used by every table (17 significant digits, "inf" for infinities).
std::string fmt_num(double v);

// Least-squares slope of log2(y) against log2(x).
double log2_slope(const std::vector<double>& x, const std::vector<double>& y);

// Pairs from the scenario's (p, q) list, validated as admissible.
std::vector<AdmissiblePair> scenario_pairs(const Scenario& sc);

}  // namespace sclab
