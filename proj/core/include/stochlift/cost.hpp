#pragma once

#include <vector>

#include "stochlift/affine.hpp"
#include "stochlift/index.hpp"
#include "stochlift/lifted.hpp"

namespace stochlift {

/// Soft waypoint (mu_x[step] - mu_star)' Q_star (mu_x[step] - mu_star). Acts on
/// the state mean only.
struct Waypoint {
  int step = 0;
  Eigen::VectorXd mu_star;
  Eigen::MatrixXd Q_star;
};

/// Expected quadratic cost
///   sum_k E[x_k' Q_k x_k + u_k' R_k u_k] + E[(x_N - x*)' Q_N (x_N - x*)]
///   + sum_wp (E[x_t] - mu*)' Q* (E[x_t] - mu*).
struct CostSpec {
  std::vector<Eigen::MatrixXd> Q;  // N entries
  std::vector<Eigen::MatrixXd> R;  // N entries
  Eigen::MatrixXd Q_N;
  Eigen::VectorXd x_star;
  std::vector<Waypoint> waypoints;

  /// Same stage weights at every step, no waypoints.
  static CostSpec Uniform(const SystemDef& sys, const Eigen::MatrixXd& Q,
                          const Eigen::MatrixXd& R, const Eigen::MatrixXd& Q_N,
                          const Eigen::VectorXd& x_star);
  /// All-zero weights.
  static CostSpec Zero(const SystemDef& sys);

  /// Returns a copy with every weight symmetrized. Throws ShapeError on size
  /// mismatches, NotPsdError on indefinite weights and ConfigError on
  /// waypoint steps outside 0..N.
  CostSpec Validated(const SystemDef& sys) const;
};

/// E[x' W x] for x = mu + V xi with xi standard normal:
/// mu' W mu + vec(V)' (I kron W) vec(V).
double ExpectedQuadratic(const Eigen::VectorXd& mu, const Eigen::MatrixXd& V,
                         const Eigen::MatrixXd& W);

/// Lifted objective in factored form. With a means-only index the
/// basis-coefficient terms are omitted.
QuadraticObjective AssembleObjective(const SystemDef& sys, const CostSpec& cost,
                                     const DecisionIndex& idx);

/// Closed-form expected cost of a trajectory.
double ExpectedCost(const SystemDef& sys, const CostSpec& cost,
                    const LiftedTrajectory& traj);

}  // namespace stochlift
