#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stochlift/affine.hpp"
#include "stochlift/constraints.hpp"
#include "stochlift/cost.hpp"
#include "stochlift/index.hpp"
#include "stochlift/lifted.hpp"

namespace stochlift {

/// Solver-independent conic program over a flat decision vector:
///   minimize    objective(x)
///   subject to  equalities(x) = 0, ||tail(x)|| <= head(x), blocks(x) PSD.
struct ConicProgram {
  int num_vars = 0;
  QuadraticObjective objective;
  std::vector<AffineExpr> equalities;
  std::vector<SocRow> socs;
  std::vector<PsdBlock> psds;
  /// Layout of a lifted program; empty for hand-built programs.
  std::optional<DecisionIndex> index;

  /// Throws IndexError when any expression references a variable outside
  /// [0, num_vars).
  void CheckWellFormed() const;
};

/// Constraint violations of a point.
struct Residuals {
  /// max |eq(x)| / (1 + |eq constant|).
  double equality = 0.0;
  /// max over cones of (||tail|| - head) / (1 + |head|), or 0.
  double soc = 0.0;
  /// max over blocks of -lambda_min / (1 + max |entry|), or 0.
  double psd = 0.0;

  double Worst() const;
};

Residuals Evaluate(const ConicProgram& p, std::span<const double> x);

/// Dynamics equalities, the lifted objective and one cone per constraint.
/// Validation errors are rethrown with the index of the offending
/// constraint.
ConicProgram Compile(const SystemDef& sys, const CostSpec& cost,
                     const std::vector<ConstraintSpec>& constraints);

/// Copy of `p` with every V_u[k] entry pinned to zero.
ConicProgram RestrictOpenLoop(const ConicProgram& p, const DecisionIndex& idx);

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kNumericalLimit };

std::string ToString(SolveStatus s);

enum class ObjectiveLowering {
  /// Quadratic objective handed to the backend as 0.5 x'Px + q'x.
  kNative,
  /// One extra variable t with ||r||^2 <= t as a rotated cone; linear
  /// objective.
  kEpigraph,
};

struct SolveOptions {
  double tolerance = 1e-8;
  int max_iters = 200;
  bool verbose = false;
  double time_limit_s = 0.0;  // 0 disables the limit
  ObjectiveLowering lowering = ObjectiveLowering::kNative;
  /// Residual ceiling a returned point must meet to be reported OPTIMAL.
  double accept_residual = 1e-6;
  /// Multiplier applied to the objective before it reaches the backend; 0
  /// normalizes the largest lowered coefficient to 1.
  double objective_scale = 0.0;
  /// After MaxIterations, NumericalError or InsufficientProgress, re-solve
  /// the constraints alone and report INFEASIBLE on a certificate.
  bool certify_infeasibility = true;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kNumericalLimit;
  /// Primal objective at x, including constants.
  double objective = 0.0;
  std::vector<double> x;
  /// Present iff status is kOptimal and the program carries an index.
  std::optional<LiftedTrajectory> trajectory;
  int iterations = 0;
  double solve_seconds = 0.0;
  std::string backend_status;
  std::string diagnostics;
  Residuals residuals;
};

SolveResult Solve(const ConicProgram& p, const SolveOptions& opts = {});

/// Plain-text dump with VARS, OBJ, EQ, SOC and PSD sections.
void DumpProgram(const ConicProgram& p, std::ostream& out);

}  // namespace stochlift
