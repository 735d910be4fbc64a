#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sclab/experiments.hpp"

using namespace sclab;

namespace {

const char* kSmall = R"(
name = "small"
seed = 7
[model]
name = "flat_free"
d = 1
[grid]
n = 256
half_width = 16.0
[params]
epsilon = 0.015625
T = 0.25
h_list = [1.0, 0.5]
time_samples = 64
R = 2.0
[family]
sigmas = [0.5, 1.0]
[kernel]
localization = "none"
x_samples = [0.0, 1.0]
velocities = [1.0]
t_fractions = [0.25, 0.5, 1.0]
[ik]
L_list = [2.0, 4.0]
L_min = 4.0
x0 = 0.25
time_samples = 16
)";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_threshold(const nlohmann::json& j) {
  if (j.is_object())
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key().find("threshold") != std::string::npos || it.key() == "tolerance" || has_threshold(it.value()))
        return true;
  if (j.is_array())
    for (const auto& e : j)
      if (has_threshold(e)) return true;
  return false;
}

}  // namespace

TEST(ScenarioParse, DefaultsAndFields) {
  Scenario s = parse_scenario(kSmall);
  EXPECT_EQ(s.name, "small");
  EXPECT_EQ(s.seed, 7u);
  EXPECT_EQ(s.grid.n, 256);
  EXPECT_EQ(s.h_list, (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(s.localization, "none");
  EXPECT_EQ(s.pairs.size(), 3u);
  EXPECT_TRUE(std::isinf(s.pairs[2].first));
  EXPECT_EQ(s.model().id, catalog::flat_free(1).id);
}

TEST(ScenarioParse, Rejections) {
  const std::string base = kSmall;
  EXPECT_THROW(parse_scenario(base + "bogus = 1\n"), DomainError);
  EXPECT_THROW(parse_scenario("[grid]\nn = 64\n"), DomainError);
  auto with = [&](const std::string& from, const std::string& to) {
    std::string t = base;
    t.replace(t.find(from), from.size(), to);
    return t;
  };
  EXPECT_THROW(parse_scenario(with("h_list = [1.0, 0.5]", "h_list = [0.3]")), DomainError);
  EXPECT_THROW(parse_scenario(with("h_list = [1.0, 0.5]", "h_list = [2.0]")), DomainError);
  EXPECT_THROW(parse_scenario(with("localization = \"none\"", "localization = \"sideways\"")), DomainError);
  EXPECT_THROW(parse_scenario(with("name = \"flat_free\"", "name = \"nope\"")), DomainError);
  EXPECT_THROW(parse_scenario(with("n = 256", "n = 100")), DomainError);
  EXPECT_THROW(parse_scenario(with("time_samples = 64", "time_samples = 1")), DomainError);
  EXPECT_THROW(parse_scenario(with("[ik]", "[ik]\nfoo = 1")), DomainError);
  EXPECT_THROW(parse_scenario("name = \"x\"\n[model\n"), DomainError);
}

TEST(ScenarioParse, NonAdmissiblePairRejected) {
  Scenario s = parse_scenario(kSmall);
  s.pairs = {{8.0, 3.0}};
  EXPECT_THROW(scenario_pairs(s), DomainError);
  s.pairs = {{4.0, INFINITY}};
  EXPECT_EQ(scenario_pairs(s).size(), 1u);
}

TEST(Helpers, FormattingAndSlope) {
  EXPECT_EQ(fmt_num(INFINITY), "inf");
  EXPECT_EQ(std::stod(fmt_num(0.1)), 0.1);
  EXPECT_NEAR(log2_slope({1.0, 0.5, 0.25}, {3.0, 1.5, 0.75}), 1.0, 1e-14);
  EXPECT_NEAR(log2_slope({1.0, 0.5, 0.25}, {1.0, 2.0, 4.0}), -1.0, 1e-14);
  Table t{{"a", "b"}, {}};
  t.add({"1", "2"});
  EXPECT_EQ(t.csv(), "a,b\n1,2\n");
}

TEST(Dispersive, FreeKernelConstantAtSmallH) {
  Scenario s = parse_scenario(kSmall);
  s.h_list = {0.03125};
  s.x_samples = {1.0};
  s.t_fractions = {0.1, 0.5, 1.0};
  auto r = run_dispersive_scan(s);
  ASSERT_TRUE(r.pass);
  const double sup = r.report["sups"][0].get<double>();
  EXPECT_NEAR(sup, 1.0 / std::sqrt(2 * M_PI), 0.01 / std::sqrt(2 * M_PI));
}

TEST(Strichartz, WeightDominationAndSampling) {
  Scenario s = parse_scenario(kSmall);
  auto r = run_strichartz_table(s, scenario_pairs(s));
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.report["weighted_dominated_by_unweighted"].get<bool>());
  EXPECT_TRUE(r.report["time_sampling_converged"].get<bool>());
  for (const auto& p : r.report["pairs"]) {
    EXPECT_GE(p["max_over_min"].get<double>(), 1.0);
    if (p["p"] == "inf") EXPECT_NEAR(p["max_ratio"].get<double>(), 1.0, 1e-12);  // unitarity
  }
}

TEST(Strichartz, GuardAborts) {
  Scenario s = parse_scenario(kSmall);
  s.T = 4.0;  // packets at frequency 2 reach the box edge
  auto r = run_strichartz_table(s, scenario_pairs(s));
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(r.report.contains("aborted"));
}

TEST(Norms, Linearity) {
  Grid g{1, 256, 16.0};
  GridState u = gaussian_packet(g, Vec::Constant(1, 0.0), Vec::Constant(1, 1.0), 1.0);
  std::vector<GridState> a = {u, u}, b = {cplx(2.0) * u, cplx(2.0) * u};
  std::vector<double> ts = {0.0, 1.0};
  for (auto [p, q] : std::vector<std::pair<double, double>>{{8, 4}, {12, 3}, {INFINITY, 2}})
    EXPECT_NEAR(mixed_norm(b, ts, p, q), 2.0 * mixed_norm(a, ts, p, q), 1e-13);
}

TEST(Loss, FreeEnvelopeCertified) {
  Scenario s = parse_scenario(kSmall);
  auto r = run_semiclassical_loss_scan(s);
  EXPECT_TRUE(r.pass);
  for (const auto& f : r.report["fits"]) EXPECT_GE(f["slope"].get<double>(), f["threshold"].get<double>());
}

TEST(LocalSmoothing, FreeBoundedAndMonotoneInSigma) {
  Scenario s = parse_scenario(kSmall);
  s.j_max = 3;
  s.smoothing_sigmas = {2.0, 0.1};
  auto r = run_experiment(s, "local_smoothing");
  EXPECT_TRUE(r.gated);
  EXPECT_EQ(r.report["nontrapping_verdict"], "escaped_all");
  EXPECT_TRUE(r.report["monotone_decreasing_in_sigma"].get<bool>());
  EXPECT_TRUE(r.pass);
}

TEST(Ik, ZeroCoefficientsGiveExactZero) {
  Scenario s = parse_scenario(kSmall);
  s.h_list = {0.25};
  s.L_list = {1.0, 2.0};
  auto r = run_ik_comparison(s, s.L_list);
  EXPECT_TRUE(r.report["zero_coefficient_control_exact"].get<bool>());
  for (const auto& row : r.report["rows"]) EXPECT_EQ(row["gap_outgoing"].get<double>(), 0.0);
  // identical operators give no evidence for the incoming control
  EXPECT_FALSE(r.report["incoming_control_ge_10x"].get<bool>());
}

TEST(Annulus, WindowHonored) {
  Scenario s = parse_scenario(kSmall);
  s.h_list = {0.125};
  auto r = run_annulus_scan(s);
  EXPECT_TRUE(r.report["window_honored"].get<bool>());
  EXPECT_TRUE(r.pass);
}

TEST(Reports, ThresholdsPresentAndDeterministic) {
  Scenario s = parse_scenario(kSmall);
  std::vector<ExperimentReport> reps;
  for (const auto& name : {"dispersive", "strichartz", "loss", "annulus"}) {
    reps.push_back(run_experiment(s, name));
    EXPECT_TRUE(has_threshold(reps.back().report)) << name;
  }
  namespace fs = std::filesystem;
  const fs::path a = fs::path(testing::TempDir()) / "sclab_rep_a", b = fs::path(testing::TempDir()) / "sclab_rep_b";
  fs::remove_all(a);
  fs::remove_all(b);
  write_reports(a.string(), s, reps);
  std::vector<ExperimentReport> again;
  for (const auto& name : {"dispersive", "strichartz", "loss", "annulus"}) again.push_back(run_experiment(s, name));
  write_reports(b.string(), s, again);
  for (const auto& f : fs::recursive_directory_iterator(a)) {
    if (!f.is_regular_file()) continue;
    EXPECT_EQ(slurp(f.path()), slurp(b / fs::relative(f.path(), a))) << f.path();
  }
  EXPECT_TRUE(fs::exists(a / "meta.json"));
  EXPECT_TRUE(fs::exists(a / "tables" / "strichartz_ratios.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Reports, TwoDimensionalCapabilityGate) {
  Scenario s = parse_scenario(kSmall);
  s.d = 2;
  s.grid = Grid{2, 32, 8.0};
  s.h_list = {1.0};
  auto r = run_dispersive_scan(s);
  EXPECT_FALSE(r.gated);
  EXPECT_TRUE(r.tables.count("norm_probe"));
  EXPECT_THROW(run_experiment(s, "nope"), DomainError);
}
