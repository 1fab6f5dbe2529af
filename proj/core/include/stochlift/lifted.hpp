#pragma once

// Stochastic basis bookkeeping and the lifted (mean + basis coefficient)
// representation of states and controls.
//
// The basis at step k stacks the n_x standard normals that generate the
// initial state with the n_w noise normals of steps 0..k-1, so it has
// ell(k) = n_x + k * n_w entries. A state is x_k = mu_x[k] + V_x[k] xi_k and a
// causal affine control is u_k = mu_u[k] + V_u[k] xi_k.

#include <Eigen/Dense>

#include <vector>

namespace stochlift {

/// Discrete-time linear time-varying system with Gaussian initial state and
/// unit Gaussian process noise entering through D[k].
class SystemDef {
 public:
  /// Time-varying system. All lists must have `horizon` entries.
  SystemDef(std::vector<Eigen::MatrixXd> A, std::vector<Eigen::MatrixXd> B,
            std::vector<Eigen::MatrixXd> D, Eigen::VectorXd mu0,
            Eigen::MatrixXd Sigma0);

  /// Time-invariant convenience constructor.
  static SystemDef Lti(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                       const Eigen::MatrixXd& D, int horizon,
                       Eigen::VectorXd mu0, Eigen::MatrixXd Sigma0);

  int horizon() const { return horizon_; }
  int nx() const { return nx_; }
  int nu() const { return nu_; }
  int nw() const { return nw_; }

  const Eigen::MatrixXd& A(int k) const;
  const Eigen::MatrixXd& B(int k) const;
  const Eigen::MatrixXd& D(int k) const;
  const Eigen::VectorXd& mu0() const { return mu0_; }
  /// Symmetrized initial covariance with tiny negative eigenvalues clamped.
  const Eigen::MatrixXd& Sigma0() const { return Sigma0_; }
  /// Factor V0 with V0 V0' = Sigma0 (see InitialFactor).
  const Eigen::MatrixXd& V0() const { return V0_; }

 private:
  int horizon_;
  int nx_;
  int nu_;
  int nw_;
  std::vector<Eigen::MatrixXd> A_;
  std::vector<Eigen::MatrixXd> B_;
  std::vector<Eigen::MatrixXd> D_;
  Eigen::VectorXd mu0_;
  Eigen::MatrixXd Sigma0_;
  Eigen::MatrixXd V0_;
};

/// Basis dimension n_x + k n_w at step k, 0 <= k <= N.
int BasisDim(const SystemDef& sys, int k);

/// Column-major stacking of a matrix.
Eigen::VectorXd Vec(const Eigen::MatrixXd& M);

/// Inverse of Vec for a p x q matrix.
Eigen::MatrixXd Unvec(const Eigen::VectorXd& v, int p, int q);

/// Returns V0 with V0 V0' = Sigma0. Lower triangular (Cholesky) when Sigma0
/// is positive definite; otherwise built from the eigendecomposition with
/// eigenvalues in [-1e-10, 0) clamped to zero.
Eigen::MatrixXd InitialFactor(const Eigen::MatrixXd& Sigma0);

/// Same factorization rules as InitialFactor, used for PSD weights:
/// returns L with L L' = W.
Eigen::MatrixXd PsdFactor(const Eigen::MatrixXd& W, double tol = 1e-10);

/// Symmetrizes W and checks its smallest eigenvalue is >= -tol.
Eigen::MatrixXd SymmetrizedPsd(const Eigen::MatrixXd& W, const char* what,
                               double tol = 1e-10);

/// Means and basis coefficient matrices of an affine causal policy and the
/// states it induces.
struct LiftedTrajectory {
  std::vector<Eigen::VectorXd> mu_x;  // N + 1 entries, n_x each
  std::vector<Eigen::MatrixXd> V_x;   // N + 1 entries, n_x x ell(k)
  std::vector<Eigen::VectorXd> mu_u;  // N entries, n_u each
  std::vector<Eigen::MatrixXd> V_u;   // N entries, n_u x ell(k)

  /// Throws ShapeError when any block does not match `sys`.
  void CheckShapes(const SystemDef& sys) const;

  /// Covariance V_x[k] V_x[k]'.
  Eigen::MatrixXd StateCovariance(int k) const;
};

}  // namespace stochlift
