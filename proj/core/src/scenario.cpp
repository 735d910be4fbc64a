#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "sclab/experiments.hpp"

namespace sclab {

namespace {

void check_keys(const toml::table& t, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : t) {
    (void)v;
    if (!allowed.count(std::string(k.str())))
      throw DomainError("unknown key '" + std::string(k.str()) + "' in " + where);
  }
}

double num(const toml::node& n, const std::string& what) {
  if (auto v = n.value<double>()) return *v;
  if (auto s = n.value<std::string>()) {
    if (*s == "inf") return INFINITY;
  }
  throw DomainError(what + " must be a number");
}

std::vector<double> num_list(const toml::node& n, const std::string& what) {
  const auto* a = n.as_array();
  if (!a) throw DomainError(what + " must be an array");
  std::vector<double> out;
  for (const auto& e : *a) out.push_back(num(e, what));
  return out;
}

template <class F>
void opt(const toml::table* t, const char* key, F&& f) {
  if (!t) return;
  if (const toml::node* n = t->get(key)) f(*n);
}

}  // namespace

SymbolModel Scenario::model() const { return catalog::by_name(model_name, d, model_params); }

nlohmann::json Scenario::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["seed"] = seed;
  j["model"] = {{"name", model_name}, {"d", d}, {"params", model_params}, {"id", model().id}};
  j["grid"] = {{"n", grid.n}, {"half_width", grid.half_width}, {"discretization", to_string(disc)}};
  j["params"] = {{"epsilon", epsilon}, {"t_eps", t_eps},       {"T", T},
                 {"h_list", h_list},   {"bound_factor", bound_factor}, {"time_samples", time_samples},
                 {"R", R}};
  j["family"] = {{"x0", x0}, {"frequency", frequency}, {"sigmas", sigmas}};
  j["kernel"] = {{"localization", localization}, {"x_samples", x_samples}, {"velocities", velocities},
                 {"t_fractions", t_fractions},   {"t_max", kernel_t_max}, {"delta", delta},
                 {"annulus_R", annulus_R}};
  nlohmann::json pj = nlohmann::json::array();
  for (auto [p, q] : pairs) pj.push_back({fmt_num(p), fmt_num(q)});
  j["strichartz"] = {{"pairs", pj}, {"normalization", normalization}, {"symbol_x_extent", symbol_x_extent}};
  j["smoothing"] = {{"sigmas", smoothing_sigmas}, {"j_max", j_max}};
  j["ik"] = {{"L_list", L_list}, {"L_min", L_min}, {"tol", ik_tol}, {"x0", ik_x0}, {"time_samples", ik_time_samples}};
  return j;
}

Scenario parse_scenario(const std::string& text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "scenario parse error: " << e.description() << " at line " << e.source().begin.line;
    throw DomainError(os.str());
  }
  check_keys(root, "scenario", {"name", "seed", "model", "grid", "params", "family", "kernel", "strichartz",
                                "smoothing", "ik"});
  Scenario s;
  if (auto v = root["name"].value<std::string>()) s.name = *v;
  if (auto v = root["seed"].value<int64_t>()) s.seed = std::uint64_t(*v);

  const toml::table* model = root["model"].as_table();
  if (!model) throw DomainError("scenario needs a [model] table");
  check_keys(*model, "[model]", {"name", "d", "params"});
  if (auto v = (*model)["name"].value<std::string>()) s.model_name = *v;
  if (auto v = (*model)["d"].value<int64_t>()) s.d = int(*v);
  if (const toml::table* p = (*model)["params"].as_table())
    for (const auto& [k, v] : *p) s.model_params[std::string(k.str())] = num(v, "model parameter");

  const toml::table* grid = root["grid"].as_table();
  if (!grid) throw DomainError("scenario needs a [grid] table");
  check_keys(*grid, "[grid]", {"n", "half_width", "discretization"});
  s.grid.d = s.d;
  if (auto v = (*grid)["n"].value<int64_t>()) s.grid.n = int(*v);
  if (auto v = (*grid)["half_width"].value<double>()) s.grid.half_width = *v;
  if (auto v = (*grid)["discretization"].value<std::string>()) s.disc = discretization_from_string(*v);
  s.grid.validate();

  const toml::table* params = root["params"].as_table();
  if (params)
    check_keys(*params, "[params]", {"epsilon", "t_eps", "T", "h_list", "bound_factor", "time_samples", "R"});
  opt(params, "epsilon", [&](const toml::node& n) { s.epsilon = num(n, "epsilon"); });
  opt(params, "t_eps", [&](const toml::node& n) { s.t_eps = num(n, "t_eps"); });
  opt(params, "T", [&](const toml::node& n) { s.T = num(n, "T"); });
  opt(params, "h_list", [&](const toml::node& n) { s.h_list = num_list(n, "h_list"); });
  opt(params, "bound_factor", [&](const toml::node& n) { s.bound_factor = num(n, "bound_factor"); });
  opt(params, "time_samples", [&](const toml::node& n) { s.time_samples = int(num(n, "time_samples")); });
  opt(params, "R", [&](const toml::node& n) { s.R = num(n, "R"); });

  const toml::table* fam = root["family"].as_table();
  if (fam) check_keys(*fam, "[family]", {"x0", "frequency", "sigmas"});
  opt(fam, "x0", [&](const toml::node& n) { s.x0 = num(n, "x0"); });
  opt(fam, "frequency", [&](const toml::node& n) { s.frequency = num(n, "frequency"); });
  opt(fam, "sigmas", [&](const toml::node& n) { s.sigmas = num_list(n, "sigmas"); });

  const toml::table* ker = root["kernel"].as_table();
  if (ker)
    check_keys(*ker, "[kernel]",
               {"localization", "x_samples", "velocities", "t_fractions", "t_max", "delta", "annulus_R"});
  opt(ker, "localization", [&](const toml::node& n) {
    auto v = n.value<std::string>();
    if (!v || (*v != "none" && *v != "chi_eps" && *v != "outgoing" && *v != "incoming"))
      throw DomainError("localization must be none, chi_eps, outgoing or incoming");
    s.localization = *v;
  });
  opt(ker, "x_samples", [&](const toml::node& n) { s.x_samples = num_list(n, "x_samples"); });
  opt(ker, "velocities", [&](const toml::node& n) { s.velocities = num_list(n, "velocities"); });
  opt(ker, "t_fractions", [&](const toml::node& n) { s.t_fractions = num_list(n, "t_fractions"); });
  opt(ker, "t_max", [&](const toml::node& n) { s.kernel_t_max = num(n, "t_max"); });
  opt(ker, "delta", [&](const toml::node& n) { s.delta = num(n, "delta"); });
  opt(ker, "annulus_R", [&](const toml::node& n) { s.annulus_R = num(n, "annulus_R"); });

  const toml::table* st = root["strichartz"].as_table();
  if (st) check_keys(*st, "[strichartz]", {"pairs", "normalization", "symbol_x_extent"});
  opt(st, "pairs", [&](const toml::node& n) {
    const auto* a = n.as_array();
    if (!a) throw DomainError("pairs must be an array of [p, q]");
    s.pairs.clear();
    for (const auto& e : *a) {
      auto pq = num_list(e, "pair");
      if (pq.size() != 2) throw DomainError("each pair must have two entries");
      s.pairs.emplace_back(pq[0], pq[1]);
    }
  });
  opt(st, "normalization", [&](const toml::node& n) {
    auto v = n.value<std::string>();
    if (!v || (*v != "l2" && *v != "loss")) throw DomainError("normalization must be l2 or loss");
    s.normalization = *v;
  });
  opt(st, "symbol_x_extent", [&](const toml::node& n) { s.symbol_x_extent = num(n, "symbol_x_extent"); });

  const toml::table* sm = root["smoothing"].as_table();
  if (sm) check_keys(*sm, "[smoothing]", {"sigmas", "j_max"});
  opt(sm, "sigmas", [&](const toml::node& n) { s.smoothing_sigmas = num_list(n, "smoothing sigmas"); });
  opt(sm, "j_max", [&](const toml::node& n) { s.j_max = int(num(n, "j_max")); });

  const toml::table* ik = root["ik"].as_table();
  if (ik) check_keys(*ik, "[ik]", {"L_list", "L_min", "tol", "x0", "time_samples"});
  opt(ik, "L_list", [&](const toml::node& n) { s.L_list = num_list(n, "L_list"); });
  opt(ik, "L_min", [&](const toml::node& n) { s.L_min = num(n, "L_min"); });
  opt(ik, "tol", [&](const toml::node& n) { s.ik_tol = num(n, "ik tol"); });
  opt(ik, "x0", [&](const toml::node& n) { s.ik_x0 = num(n, "ik x0"); });
  opt(ik, "time_samples", [&](const toml::node& n) { s.ik_time_samples = int(num(n, "ik time_samples")); });

  for (double h : s.h_list) {
    const double l = std::log2(h);
    if (!(h > 0.0 && h <= 1.0) || l != std::round(l)) throw DomainError("h_list entries must be powers of two in (0, 1]");
  }
  if (s.time_samples < 2) throw DomainError("time_samples must be >= 2");
  if (!(s.T > 0.0)) throw DomainError("T must be positive");
  s.model();  // validates name and parameters
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace sclab
