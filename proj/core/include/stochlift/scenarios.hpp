#pragma once

// Planar quadrotor experiments (circle arena, funnel corridor, terminal QCC)
// and small explicit systems, described as data and compiled into problems.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stochlift/baseline.hpp"
#include "stochlift/constraints.hpp"
#include "stochlift/cost.hpp"
#include "stochlift/lifted.hpp"
#include "stochlift/program.hpp"

namespace stochlift {

struct ModelConfig {
  /// "quadrotor_zoh" or "linear".
  std::string type = "quadrotor_zoh";
  double T = 0.1;
  double sigma1 = 0.01;
  double sigma2 = 0.01;
  int N = 50;
  /// Initial covariance is sigma0_scale I for the quadrotor.
  double sigma0_scale = 1e-5;
  /// Explicit time-invariant data for "linear"; mu0/Sigma0 also override the
  /// quadrotor defaults when given.
  Eigen::MatrixXd A, B, D;
  std::optional<Eigen::VectorXd> mu0;
  std::optional<Eigen::MatrixXd> Sigma0;
};

/// Explicit half-plane chance constraint a' x_k <= b on the state.
struct StateHalfPlane {
  int step = -1;  // -1 applies it at every step 0..N
  Eigen::VectorXd a;
  double b = 0.0;
  std::optional<double> eps;
};

/// One step's share of a mixed chance constraint: a' x_step + alpha' u_step.
struct LccTerm {
  int step = 0;
  Eigen::VectorXd a;      // empty or n_x
  Eigen::VectorXd alpha;  // empty or n_u
};

/// Sum of terms <= b, possibly spanning several steps.
struct MixedLccConfig {
  std::vector<LccTerm> terms;
  double b = 0.0;
  std::optional<double> eps;
};

struct GeometryConfig {
  /// "circle", "funnel", "none" or "linear".
  std::string type = "circle";
  double R = 1.5;
  int M = 20;
  double r_wp = 0.8;
  double x_min = -0.3;
  double x_max = 2.5;
  double h_entry = 0.4;
  double h_exit = 0.2;
  std::vector<StateHalfPlane> half_planes;
  std::vector<MixedLccConfig> mixed_lccs;
};

struct RiskConfig {
  double eps_state = 0.05;
  double eps_control = 0.05;
  double u_max = 25.0;
  bool control_box = true;
  std::optional<Eigen::MatrixXd> terminal_cov;
};

struct CostConfig {
  /// "circle", "funnel" or "custom"; empty picks the preset matching the
  /// geometry (funnel for "none").
  std::string preset;
  std::optional<Eigen::MatrixXd> Q, R, Q_N;
  std::optional<Eigen::VectorXd> x_star;
};

struct WaypointConfig {
  /// Use the geometry's default schedule; explicit points are appended.
  bool defaults = true;
  double weight = 1e5;
  std::vector<Waypoint> points;
};

struct QccConfig {
  bool enabled = false;
  QccMode mode = QccMode::kLmi;
  double eps = 0.05;
  int step = -1;  // -1 means N
  std::optional<Eigen::MatrixXd> Q_cc;  // identity when empty
};

struct ScenarioConfig {
  std::string name = "scenario";
  ModelConfig model;
  GeometryConfig geometry;
  RiskConfig risk;
  CostConfig cost;
  WaypointConfig waypoints;
  QccConfig qcc;
  SolveOptions solver;

  /// Throws ConfigError naming the offending field.
  void Validate() const;
};

/// A fully built instance.
struct Problem {
  std::string name;
  SystemDef sys;
  CostSpec cost;
  std::vector<ConstraintSpec> constraints;
  SolveOptions solver;
};

/// Parses a scenario document. Throws ConfigError with the JSON line or the
/// field path on malformed input.
ScenarioConfig ParseScenario(const std::string& json_text);
ScenarioConfig LoadScenario(const std::string& path);

/// Planar double quadruple integrator under zero-order hold; state
/// [p, v, a, j] (x and y interleaved), control is snap, noise enters the
/// acceleration level scaled by diag(sigma1, sigma2).
SystemDef QuadrotorZoh(double T, double sigma1, double sigma2, int N = 50,
                       double sigma0_scale = 1e-5);

Problem CircleArena(const ScenarioConfig& cfg);
Problem FunnelCorridor(const ScenarioConfig& cfg);
Problem TerminalQccCase(const ScenarioConfig& cfg);
/// Dispatches on the geometry type; also handles "linear" models.
Problem BuildProblem(const ScenarioConfig& cfg);

/// Solution method for one sweep cell.
enum class Method { kExact, kBaseline, kOpenLoop, kLmi, kQuadratic, kMarkov };
std::string ToString(Method m);
Method ParseMethod(const std::string& s);

/// Solves with the given method. QCC methods override the scenario's QCC
/// mode (and enable the QCC).
SolveResult SolveWith(const ScenarioConfig& cfg, Method m);

/// Solves a built problem. QCC methods solve the problem as given (use
/// ConfigFor to switch modes first). When `dump` is set the compiled conic
/// program is written to it; the baseline has no single program and rejects
/// this with ConfigError.
SolveResult SolveProblem(const Problem& p, Method m, std::ostream* dump = nullptr);

/// The scenario with the QCC enabled in the method's mode for lmi, quadratic
/// and markov; unchanged otherwise.
ScenarioConfig ConfigFor(const ScenarioConfig& cfg, Method m);

struct SweepCell {
  ScenarioConfig config;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double param1 = 0.0;
  double param2 = 0.0;
};

struct SweepSpec {
  std::vector<SweepCell> cells;
  std::vector<Method> methods;
  int64_t mc_samples = 0;
  uint64_t seed = 0;
};

struct SweepRow {
  std::string scenario;
  Method method = Method::kExact;
  double sigma1 = 0.0, sigma2 = 0.0, param1 = 0.0, param2 = 0.0;
  std::string status;  // SolveStatus name, or ERROR
  double objective = 0.0;
  double solve_ms = 0.0;
  std::optional<double> mc_rate_min;
  /// 1 - J/J_baseline for non-baseline rows of a cell that also ran the
  /// baseline; 1 when the baseline is infeasible and this row is optimal.
  std::optional<double> cost_reduction;
  std::string message;
};

/// Applies the cell's noise and geometry parameters to `cell.config`:
/// param1/param2 are r_wp for circles and (h_entry, h_exit) for funnels.
ScenarioConfig ApplyCell(const SweepCell& cell);

/// Parses a sweep document: {"base": scenario, "methods": [...],
/// "cells": [{sigma1, sigma2, param1, param2}], "mc_samples", "seed"}.
/// `base_dir` resolves a string-valued "base" as a scenario path.
SweepSpec ParseSweep(const std::string& json_text, const std::string& base_dir = ".");

/// Runs every (cell, method) pair in grid order. Failing cells are recorded
/// with status ERROR and the sweep continues.
std::vector<SweepRow> RunSweep(const SweepSpec& spec);

/// CSV with the standard columns followed by cost_reduction.
void WriteSweepCsv(const std::vector<SweepRow>& rows, std::ostream& out);

/// Fixed 17-significant-digit rendering used by every text output.
std::string FormatDouble(double v);

}  // namespace stochlift
