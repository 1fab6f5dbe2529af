#include "stochlift/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stochlift/errors.hpp"

namespace stochlift {

Eigen::VectorXd PropagateMean(const SystemDef& sys, const Eigen::VectorXd& mu_x,
                              const Eigen::VectorXd& mu_u, int k) {
  if (mu_x.size() != sys.nx() || mu_u.size() != sys.nu()) {
    throw ShapeError("propagate_mean: state/control length mismatch");
  }
  return sys.A(k) * mu_x + sys.B(k) * mu_u;
}

Eigen::MatrixXd PropagateBasis(const SystemDef& sys, const Eigen::MatrixXd& V_x,
                               const Eigen::MatrixXd& V_u, int k) {
  const int ell = BasisDim(sys, k);
  if (V_x.rows() != sys.nx() || V_x.cols() != ell) {
    throw ShapeError("propagate_basis: V_x must be n_x x ell(k)");
  }
  if (V_u.rows() != sys.nu() || V_u.cols() != ell) {
    throw ShapeError("propagate_basis: V_u must be n_u x ell(k)");
  }
  Eigen::MatrixXd next(sys.nx(), ell + sys.nw());
  next.leftCols(ell) = sys.A(k) * V_x + sys.B(k) * V_u;
  next.rightCols(sys.nw()) = sys.D(k);
  return next;
}

LiftedTrajectory ForwardPropagate(const SystemDef& sys,
                                  const std::vector<Eigen::VectorXd>& mu_u,
                                  const std::vector<Eigen::MatrixXd>& V_u) {
  const int N = sys.horizon();
  if (static_cast<int>(mu_u.size()) != N || static_cast<int>(V_u.size()) != N) {
    throw ShapeError("forward propagation needs one control block per step");
  }
  LiftedTrajectory t;
  t.mu_x.push_back(sys.mu0());
  t.V_x.push_back(sys.V0());
  for (int k = 0; k < N; ++k) {
    t.mu_x.push_back(PropagateMean(sys, t.mu_x[k], mu_u[k], k));
    t.V_x.push_back(PropagateBasis(sys, t.V_x[k], V_u[k], k));
  }
  t.mu_u = mu_u;
  t.V_u = V_u;
  return t;
}

std::vector<EqualityGroup> DynamicsEqualities(const SystemDef& sys,
                                              const DecisionIndex& idx) {
  const int N = sys.horizon();
  const int nx = sys.nx();
  const int nu = sys.nu();
  std::vector<EqualityGroup> groups;
  groups.reserve(N + 1);

  EqualityGroup init{-1, {}};
  for (int i = 0; i < nx; ++i) {
    AffineExpr row(-sys.mu0()(i));
    row.Add(idx.mu_x(0, i), 1.0);
    init.rows.push_back(std::move(row));
  }
  if (idx.has_basis()) {
    const Eigen::MatrixXd& V0 = sys.V0();
    for (int c = 0; c < nx; ++c) {
      for (int i = 0; i < nx; ++i) {
        AffineExpr row(-V0(i, c));
        row.Add(idx.V_x(0, i, c), 1.0);
        init.rows.push_back(std::move(row));
      }
    }
  }
  groups.push_back(std::move(init));

  for (int k = 0; k < N; ++k) {
    const Eigen::MatrixXd& A = sys.A(k);
    const Eigen::MatrixXd& B = sys.B(k);
    const Eigen::MatrixXd& D = sys.D(k);
    EqualityGroup g{k, {}};
    for (int i = 0; i < nx; ++i) {
      AffineExpr row;
      row.Add(idx.mu_x(k + 1, i), -1.0);
      for (int j = 0; j < nx; ++j) row.Add(idx.mu_x(k, j), A(i, j));
      for (int j = 0; j < nu; ++j) row.Add(idx.mu_u(k, j), B(i, j));
      g.rows.push_back(std::move(row));
    }
    if (idx.has_basis()) {
      const int ell = idx.ell(k);
      // Column c of V_x[k+1] for c < ell(k): (I kron A_k) vec(V_x[k]) +
      // (I kron B_k) vec(V_u[k]) restricted to that column.
      for (int c = 0; c < ell; ++c) {
        for (int i = 0; i < nx; ++i) {
          AffineExpr row;
          row.Add(idx.V_x(k + 1, i, c), -1.0);
          for (int j = 0; j < nx; ++j) row.Add(idx.V_x(k, j, c), A(i, j));
          for (int j = 0; j < nu; ++j) row.Add(idx.V_u(k, j, c), B(i, j));
          g.rows.push_back(std::move(row));
        }
      }
      for (int c = 0; c < sys.nw(); ++c) {
        for (int i = 0; i < nx; ++i) {
          AffineExpr row(-D(i, c));
          row.Add(idx.V_x(k + 1, i, ell + c), 1.0);
          g.rows.push_back(std::move(row));
        }
      }
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

double ReplayError(const SystemDef& sys, const LiftedTrajectory& traj) {
  traj.CheckShapes(sys);
  const LiftedTrajectory replay = ForwardPropagate(sys, traj.mu_u, traj.V_u);
  double worst = 0.0;
  auto scan = [&worst](const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
    for (Eigen::Index j = 0; j < got.cols(); ++j) {
      for (Eigen::Index i = 0; i < got.rows(); ++i) {
        const double e = std::abs(got(i, j) - want(i, j)) / (1.0 + std::abs(want(i, j)));
        worst = std::max(worst, e);
      }
    }
  };
  for (int k = 0; k <= sys.horizon(); ++k) {
    scan(traj.mu_x[k], replay.mu_x[k]);
    scan(traj.V_x[k], replay.V_x[k]);
  }
  return worst;
}

void CheckReplay(const SystemDef& sys, const LiftedTrajectory& traj, double tol) {
  const double err = ReplayError(sys, traj);
  if (!(err <= tol)) {
    throw InconsistencyError("trajectory does not replay through the dynamics (max error " +
                             std::to_string(err) + ")");
  }
}

}  // namespace stochlift
