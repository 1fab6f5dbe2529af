#pragma once

// Monte-Carlo verification of lifted policies on the original stochastic
// system.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stochlift/constraints.hpp"
#include "stochlift/cost.hpp"
#include "stochlift/lifted.hpp"

namespace stochlift {

/// Counter-based standard normal: a pure function of (seed, sample, j).
double GaussianAt(uint64_t seed, uint64_t sample, uint64_t j);

struct MCOptions {
  uint64_t seed = 0;
  int64_t count = 100000;
  /// Worker threads; results do not depend on this value.
  int threads = 1;
  bool per_step_covariance = false;
  double replay_tol = 1e-6;
};

/// Empirical satisfaction of one constraint. Covariance constraints have no
/// per-sample event and are reported with `has_event` false.
struct ConstraintRate {
  int index = 0;
  std::string kind;
  bool has_event = true;
  double rate = 0.0;
  double std_error = 0.0;
  /// Required probability 1 - eps.
  double target = 0.0;

  /// rate >= target - 3 std_error.
  bool Passes() const;
};

struct MCReport {
  int64_t samples = 0;
  uint64_t seed = 0;
  bool has_cost = false;
  double cost_mean = 0.0;
  double cost_stderr = 0.0;
  std::vector<ConstraintRate> constraints;
  Eigen::VectorXd terminal_mean;
  Eigen::MatrixXd terminal_covariance;
  /// Filled when MCOptions::per_step_covariance is set.
  std::vector<Eigen::MatrixXd> step_covariance;

  /// Smallest event rate, or 1 when there are none.
  double MinRate() const;
};

/// Simulates x_{k+1} = A x_k + B u_k + D w_k with u_k = mu_u[k] + V_u[k] xi_k
/// for `opts.count` samples. The trajectory must replay through the
/// dynamics within `opts.replay_tol` (InconsistencyError otherwise). When
/// `cost` is null the cost fields stay empty.
MCReport Rollout(const SystemDef& sys, const LiftedTrajectory& traj, const CostSpec* cost,
                 const std::vector<ConstraintSpec>& constraints, const MCOptions& opts = {});

/// V_x[k] V_x[k]' for every k. When every V_u[k] is zero the result is also
/// checked against Sigma_{k+1} = A Sigma_k A' + D D' (InconsistencyError
/// beyond 1e-10 relative).
std::vector<Eigen::MatrixXd> CovarianceOracle(const SystemDef& sys,
                                              const LiftedTrajectory& traj);

/// Estimate of Pr[||L^{-1} V xi||^2 <= 1] for standard normal xi.
double QccEmpirical(const Eigen::MatrixXd& L, const Eigen::MatrixXd& V, uint64_t seed,
                    int64_t count);

/// sqrt(r (1 - r) / n).
double BinomialStderr(double rate, int64_t n);

/// JSON document of a report.
std::string ToJson(const MCReport& r);

}  // namespace stochlift
