#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "stochlift/errors.hpp"
#include "stochlift/montecarlo.hpp"
#include "stochlift/scenarios.hpp"

namespace stochlift {
namespace {

int CountLcc(const Problem& p) {
  int n = 0;
  for (const auto& c : p.constraints) n += std::holds_alternative<MixedLCC>(c);
  return n;
}

TEST(QuadrotorZoh, Entries) {
  const SystemDef s = QuadrotorZoh(0.1, 0.01, 0.02);
  EXPECT_EQ(s.nx(), 8);
  EXPECT_EQ(s.nu(), 2);
  EXPECT_EQ(s.nw(), 2);
  EXPECT_EQ(s.horizon(), 50);
  EXPECT_NEAR(s.A(0)(0, 2), 0.1, 1e-15);
  EXPECT_NEAR(s.A(0)(0, 4), 0.005, 1e-15);
  EXPECT_NEAR(s.A(0)(0, 6), 0.001 / 6.0, 1e-15);
  EXPECT_NEAR(s.A(0)(1, 7), 0.001 / 6.0, 1e-15);
  EXPECT_EQ(s.A(0)(2, 0), 0.0);
  EXPECT_NEAR(s.B(0)(0, 0), 1e-4 / 24.0, 1e-18);
  EXPECT_NEAR(s.B(0)(6, 0), 0.1, 1e-15);
  EXPECT_EQ(s.B(0)(0, 1), 0.0);
  EXPECT_NEAR(s.D(0)(0, 0), 0.005 * 0.01, 1e-16);
  EXPECT_NEAR(s.D(0)(5, 1), 0.02, 1e-16);
  EXPECT_EQ(s.D(0).row(6).norm(), 0.0);
  EXPECT_NEAR(s.Sigma0()(3, 3), 1e-5, 1e-20);
  EXPECT_EQ(QuadrotorZoh(0.1, 0.0, 0.0).D(0).norm(), 0.0);
}

TEST(CircleArena, Structure) {
  ScenarioConfig cfg;
  cfg.risk.eps_control = 0.1;
  const Problem p = CircleArena(cfg);
  EXPECT_EQ(CountLcc(p), 20 * 51 + 4 * 50);
  ASSERT_EQ(p.cost.waypoints.size(), 4u);
  const int steps[] = {10, 20, 30, 40};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(p.cost.waypoints[i].step, steps[i]);
    EXPECT_NEAR(p.cost.waypoints[i].mu_star.head<2>().norm(), 0.8, 1e-12);
  }
  EXPECT_NEAR(p.cost.waypoints[1].mu_star(1), 0.8, 1e-12);
}

TEST(CircleArena, PolygonInsideCircle) {
  ScenarioConfig cfg;
  const Problem p = CircleArena(cfg);
  // Extract the step-0 face normals and bounds.
  std::vector<std::pair<Eigen::Vector2d, double>> faces;
  for (int j = 0; j < 20; ++j) {
    const auto& c = std::get<MixedLCC>(p.constraints[j * 51]);
    faces.emplace_back(c.a.head<2>(), c.b);
  }
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 20000; ++i) {
    const Eigen::Vector2d q(u(rng), u(rng));
    bool inside = true;
    for (const auto& [a, b] : faces) inside = inside && a.dot(q) <= b;
    if (inside) EXPECT_LE(q.norm(), 1.5 + 1e-12);
  }
  // Vertices of the inscribed polygon touch the circle.
  const double R = 1.5, th = std::numbers::pi / 20;
  const Eigen::Vector2d v(R * std::cos(th), R * std::sin(th));
  EXPECT_NEAR(faces[0].first.dot(v), faces[0].second, 1e-12);
}

TEST(FunnelCorridor, Rows) {
  ScenarioConfig cfg;
  cfg.geometry.type = "funnel";
  cfg.risk.control_box = false;
  const Problem p = FunnelCorridor(cfg);
  EXPECT_EQ(CountLcc(p), 4 * 51);
  const auto& up = std::get<MixedLCC>(p.constraints[0]);
  // At x_min the half-width is h_entry, at x_max it is h_exit.
  const double s = -up.a(0);
  EXPECT_NEAR(up.a(1), 1.0, 0.0);
  EXPECT_NEAR(up.b + s * -0.3, 0.4, 1e-12);
  EXPECT_NEAR(up.b + s * 2.5, 0.2, 1e-12);
  ASSERT_EQ(p.cost.waypoints.size(), 3u);
  EXPECT_EQ(p.cost.waypoints[2].step, 36);
  EXPECT_NEAR(p.cost.waypoints[2].mu_star(0), -0.3 + 0.75 * 2.8, 1e-12);
  // A parallel corridor is allowed; a widening one is not.
  cfg.geometry.h_entry = cfg.geometry.h_exit = 0.3;
  EXPECT_NO_THROW(FunnelCorridor(cfg));
  cfg.geometry.h_exit = 0.5;
  EXPECT_THROW(FunnelCorridor(cfg), ConfigError);
}

TEST(TerminalQccCase, Structure) {
  ScenarioConfig cfg;
  cfg.qcc.mode = QccMode::kQuadratic;
  const Problem p = TerminalQccCase(cfg);
  int qcc = 0;
  for (const auto& c : p.constraints) {
    if (const auto* q = std::get_if<QCCSpec>(&c)) {
      ++qcc;
      EXPECT_EQ(q->step, 50);
      EXPECT_EQ(q->mode, QccMode::kQuadratic);
      EXPECT_TRUE(q->Q_cc.isIdentity());
    }
  }
  EXPECT_EQ(qcc, 1);
  EXPECT_EQ(CountLcc(p), 4 * 50);
  EXPECT_EQ(ConfigFor(cfg, Method::kMarkov).qcc.mode, QccMode::kMarkov);
  EXPECT_TRUE(ConfigFor(cfg, Method::kLmi).qcc.enabled);
}

TEST(ParseScenario, RoundTripsFields) {
  const ScenarioConfig c = ParseScenario(R"({
    "name": "t", "model": {"N": 20, "sigma1": 0.03},
    "geometry": {"type": "funnel", "h_entry": 0.5, "h_exit": 0.3},
    "risk": {"eps_control": 0.1, "terminal_cov": {"diag": [1, 2], "kron_eye": 4, "scale": 0.5}},
    "qcc": {"mode": "markov", "eps": 0.1},
    "solver": {"lowering": "epigraph"}})");
  EXPECT_EQ(c.name, "t");
  EXPECT_EQ(c.model.N, 20);
  EXPECT_EQ(c.model.sigma1, 0.03);
  EXPECT_EQ(c.geometry.h_entry, 0.5);
  ASSERT_TRUE(c.risk.terminal_cov);
  EXPECT_EQ(c.risk.terminal_cov->rows(), 8);
  EXPECT_EQ((*c.risk.terminal_cov)(1, 1), 0.5);
  EXPECT_EQ((*c.risk.terminal_cov)(4, 4), 1.0);
  EXPECT_TRUE(c.qcc.enabled);
  EXPECT_EQ(c.qcc.mode, QccMode::kMarkov);
  EXPECT_EQ(c.solver.lowering, ObjectiveLowering::kEpigraph);
}

std::string ConfigMessage(const std::string& text) {
  try {
    BuildProblem(ParseScenario(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ParseScenario, Errors) {
  EXPECT_NE(ConfigMessage(R"({"model": {"horizon": 5}})").find("model.horizon: unknown key"),
            std::string::npos);
  const std::string bad = ConfigMessage("{\n  \"model\": {\n    \"N\": 5,\n  }\n}");
  EXPECT_NE(bad.find("malformed JSON"), std::string::npos);
  EXPECT_NE(bad.find("line 4"), std::string::npos) << bad;
  EXPECT_NE(ConfigMessage(R"({"risk": {"eps_control": 0.6}})").find("risk level out of range"),
            std::string::npos);
  EXPECT_NE(ConfigMessage(R"({"model": {"N": "x"}})").find("model.N"), std::string::npos);
  EXPECT_NE(ConfigMessage(R"({"geometry": {"M": 2}})").find("geometry.M"), std::string::npos);
  EXPECT_NE(ConfigMessage(R"({"geometry": {"half_planes": [{"a": [1, 0], "b": 1}]}})").find("geometry.half_planes[0]"),
            std::string::npos);
  EXPECT_THROW(LoadScenario("/nonexistent/scenario.json"), ConfigError);
}

TEST(ParseScenario, LinearModelAndMixedLcc) {
  const ScenarioConfig c = ParseScenario(R"({
    "model": {"type": "linear", "N": 3, "A": [[1]], "B": [[1]], "D": [[0.1]], "mu0": [0], "Sigma0": [[0]]},
    "geometry": {"type": "linear", "mixed_lccs": [{"terms": [{"step": 1, "a": [1]}, {"step": 2, "a": [1]}], "b": 1}]},
    "risk": {"control_box": false},
    "cost": {"preset": "custom", "Q": [[1]], "R": [[1]], "Q_N": [[1]], "x_star": [0]},
    "waypoints": {"defaults": false}})");
  const Problem p = BuildProblem(c);
  ASSERT_EQ(p.constraints.size(), 1u);
  const auto& m = std::get<MixedLCC>(p.constraints[0]);
  EXPECT_EQ(m.a.size(), 4);
  EXPECT_EQ(m.a(1), 1.0);
  EXPECT_EQ(m.a(2), 1.0);
  EXPECT_EQ(SolveProblem(p, Method::kExact).status, SolveStatus::kOptimal);
  EXPECT_THROW(SolveProblem(p, Method::kBaseline), UnsupportedError);
  std::ostringstream dump;
  EXPECT_THROW(SolveProblem(p, Method::kBaseline, &dump), ConfigError);
}

TEST(Method, Names) {
  for (Method m : {Method::kExact, Method::kBaseline, Method::kOpenLoop, Method::kLmi, Method::kQuadratic,
                   Method::kMarkov}) {
    EXPECT_EQ(ParseMethod(ToString(m)), m);
  }
  EXPECT_THROW(ParseMethod("fast"), ConfigError);
}

const char* kSmallBase = R"({"name": "small", "model": {"N": 10}, "geometry": {"type": "funnel"},
  "risk": {"eps_control": 0.1}})";

TEST(Sweep, ParseAndRun) {
  const SweepSpec s = ParseSweep(std::string(R"({"base": )") + kSmallBase +
                                 R"(, "cells": [{"sigma1": 0.01, "param1": 0.45, "param2": 0.25}]})");
  ASSERT_EQ(s.cells.size(), 1u);
  EXPECT_EQ(s.cells[0].sigma2, 0.01);
  ASSERT_EQ(s.methods.size(), 2u);
  const ScenarioConfig applied = ApplyCell(s.cells[0]);
  EXPECT_EQ(applied.geometry.h_entry, 0.45);
  EXPECT_EQ(applied.geometry.h_exit, 0.25);
  const auto rows = RunSweep(s);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, "OPTIMAL");
  EXPECT_EQ(rows[1].status, "OPTIMAL");
  ASSERT_TRUE(rows[0].cost_reduction);
  EXPECT_NEAR(*rows[0].cost_reduction, 1.0 - rows[0].objective / rows[1].objective, 1e-15);
  EXPECT_GE(*rows[0].cost_reduction, -1e-8);
  std::ostringstream out;
  WriteSweepCsv(rows, out);
  const std::string csv = out.str();
  EXPECT_EQ(csv.rfind("scenario,method,sigma1,sigma2,param1,param2,status,objective,solve_ms,mc_rate_min,"
                      "cost_reduction\n",
                      0),
            0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Sweep, InfeasibleBaselineRendersFullReduction) {
  SweepRow exact, base;
  exact.scenario = base.scenario = "x";
  exact.status = "OPTIMAL";
  exact.objective = 3.0;
  exact.cost_reduction = 1.0;
  base.method = Method::kBaseline;
  base.status = "INFEASIBLE";
  std::ostringstream out;
  WriteSweepCsv({exact, base}, out);
  EXPECT_NE(out.str().find(",100%\n"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("INFEASIBLE,,"), std::string::npos) << out.str();
}

TEST(Sweep, ErrorsAndEmptyGrid) {
  const SweepSpec empty = ParseSweep(std::string(R"({"base": )") + kSmallBase + R"(, "cells": []})");
  EXPECT_TRUE(RunSweep(empty).empty());
  std::ostringstream out;
  WriteSweepCsv({}, out);
  const std::string header = out.str();
  EXPECT_EQ(std::count(header.begin(), header.end(), '\n'), 1);
  EXPECT_THROW(ParseSweep(R"({"base": "missing.json", "cells": [{"sigma1": 0}]})", "/nonexistent"),
               ConfigError);
  EXPECT_THROW(ParseSweep(std::string(R"({"base": )") + kSmallBase +
                          R"(, "cells": [{"sigma1": 0.01, "param1": 0.2, "param2": 0.4}]})"),
               ConfigError);
  // A cell that parses but fails to build is recorded and the sweep goes on.
  const SweepSpec s = ParseSweep(
      R"({"base": {"model": {"N": 5}, "geometry": {"type": "funnel", "half_planes": [{"a": [1, 0], "b": 1}]},
          "risk": {"eps_control": 0.1}}, "methods": ["exact", "baseline"], "cells": [{"sigma1": 0.01}]})");
  const auto rows = RunSweep(s);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, "ERROR");
  EXPECT_EQ(rows[1].status, "ERROR");
  EXPECT_NE(rows[0].message.find("half_planes"), std::string::npos) << rows[0].message;
}

TEST(Sweep, NoNoiseGivesCertainOutcomes) {
  const SweepSpec s = ParseSweep(std::string(R"({"base": )") + kSmallBase +
                                 R"(, "methods": ["exact"], "mc_samples": 500,
                                    "cells": [{"sigma1": 0, "param1": 0.4, "param2": 0.2}]})");
  ScenarioConfig c = ApplyCell(s.cells[0]);
  c.model.sigma0_scale = 0.0;
  SweepSpec det = s;
  det.cells[0].config = c;
  const auto rows = RunSweep(det);
  ASSERT_EQ(rows[0].status, "OPTIMAL");
  ASSERT_TRUE(rows[0].mc_rate_min);
  EXPECT_EQ(*rows[0].mc_rate_min, 1.0);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e10}) EXPECT_EQ(std::stod(FormatDouble(v)), v);
}

}  // namespace
}  // namespace stochlift
