#pragma once

#include <vector>

#include "stochlift/affine.hpp"
#include "stochlift/index.hpp"
#include "stochlift/lifted.hpp"

namespace stochlift {

/// mu_x[k+1] = A_k mu_x[k] + B_k mu_u[k].
Eigen::VectorXd PropagateMean(const SystemDef& sys, const Eigen::VectorXd& mu_x,
                              const Eigen::VectorXd& mu_u, int k);

/// V_x[k+1] = [A_k V_x[k] + B_k V_u[k] | D_k].
Eigen::MatrixXd PropagateBasis(const SystemDef& sys, const Eigen::MatrixXd& V_x,
                               const Eigen::MatrixXd& V_u, int k);

/// Builds the trajectory induced by the given control means and basis
/// coefficients, starting from (mu0, V0).
LiftedTrajectory ForwardPropagate(const SystemDef& sys,
                                  const std::vector<Eigen::VectorXd>& mu_u,
                                  const std::vector<Eigen::MatrixXd>& V_u);

/// Rows of one block of the lifted dynamics. `step` is -1 for the initial
/// condition, otherwise the k of the k -> k+1 transition.
struct EqualityGroup {
  int step;
  std::vector<AffineExpr> rows;  // each row reads expr(x) = 0
};

/// Initial condition plus one group per transition. Each transition group
/// pins mu_x[k+1] (n_x rows) and every entry of V_x[k+1] (n_x ell(k+1) rows,
/// including the trailing D_k block). A means-only index yields the mean
/// rows only.
std::vector<EqualityGroup> DynamicsEqualities(const SystemDef& sys,
                                              const DecisionIndex& idx);

/// Largest deviation of the trajectory's states from a replay of its own
/// controls through the dynamics, scaled by 1 + |replayed entry|.
double ReplayError(const SystemDef& sys, const LiftedTrajectory& traj);

/// Throws InconsistencyError when ReplayError exceeds `tol`.
void CheckReplay(const SystemDef& sys, const LiftedTrajectory& traj,
                 double tol = 1e-6);

}  // namespace stochlift
