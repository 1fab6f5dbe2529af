#pragma once

// Decoupled reference method: fixed finite-horizon LQR feedback, covariance
// propagated under that feedback, chance constraints tightened with the
// resulting variances, and only the means optimized.

#include <optional>
#include <vector>

#include "stochlift/constraints.hpp"
#include "stochlift/cost.hpp"
#include "stochlift/lifted.hpp"
#include "stochlift/program.hpp"

namespace stochlift {

struct BaselinePolicy {
  std::vector<Eigen::MatrixXd> K;      // N gains, n_u x n_x
  std::vector<Eigen::VectorXd> mu_x;   // N + 1
  std::vector<Eigen::VectorXd> mu_u;   // N
  std::vector<Eigen::MatrixXd> Sigma;  // N + 1 closed-loop state covariances
};

struct BaselineOptions {
  SolveOptions solve;
  /// Weights for the Riccati recursion; the problem's cost when empty.
  std::optional<CostSpec> riccati_weights;
};

/// Finite-horizon Riccati gains K[k] = -(R + B'PB)^{-1} B'PA with P_N = Q_N.
/// Throws NumericalError when R + B'PB is not positive definite.
std::vector<Eigen::MatrixXd> RiccatiGains(const SystemDef& sys, const CostSpec& cost);

/// Sigma[k+1] = (A + B K) Sigma[k] (A + B K)' + D D', Sigma[0] = Sigma0.
std::vector<Eigen::MatrixXd> ClosedLoopCovariances(const SystemDef& sys,
                                                   const std::vector<Eigen::MatrixXd>& K);

/// Lifted form of u_k = mu_u[k] + K[k] (x_k - mu_x[k]): V_u[k] = K[k] V_x[k].
/// The state means are recomputed from mu_u.
LiftedTrajectory EmbedPolicy(const SystemDef& sys, const std::vector<Eigen::MatrixXd>& K,
                             const std::vector<Eigen::VectorXd>& mu_u);

/// Mean-only program with tightened constraints. The reported objective is
/// the full expected cost of the closed-loop policy, and the trajectory is
/// its lifted embedding. LCCs must involve a single step (state and/or
/// control at the same k); others raise UnsupportedError. Covariance and
/// QCC constraints are checked against the fixed closed-loop covariance.
SolveResult SolveBaseline(const SystemDef& sys, const CostSpec& cost,
                          const std::vector<ConstraintSpec>& constraints,
                          const BaselineOptions& opts = {},
                          BaselinePolicy* policy = nullptr);

}  // namespace stochlift
