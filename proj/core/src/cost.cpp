#include "stochlift/cost.hpp"

#include <string>

#include "stochlift/errors.hpp"

namespace stochlift {

namespace {

// Rows of L' for W = L L' with all-zero rows dropped, so that
// ||rows * v||^2 = v' W v.
Eigen::MatrixXd WeightRoot(const Eigen::MatrixXd& W) {
  const Eigen::MatrixXd Lt = PsdFactor(W).transpose();
  std::vector<int> keep;
  for (int r = 0; r < Lt.rows(); ++r) {
    if (Lt.row(r).cwiseAbs().maxCoeff() > 0.0) keep.push_back(r);
  }
  Eigen::MatrixXd out(keep.size(), Lt.cols());
  for (size_t i = 0; i < keep.size(); ++i) out.row(i) = Lt.row(keep[i]);
  return out;
}

// Appends ||root * (v - target)||^2 for the vector block starting at
// `offset`.
void AddMeanTerm(QuadraticObjective& obj, const Eigen::MatrixXd& root,
                 int offset, const Eigen::VectorXd* target) {
  if (root.rows() == 0) return;
  std::vector<AffineExpr> rows;
  for (int r = 0; r < root.rows(); ++r) {
    AffineExpr e;
    for (int j = 0; j < root.cols(); ++j) e.Add(offset + j, root(r, j));
    if (target != nullptr) e.constant = -root.row(r).dot(*target);
    rows.push_back(std::move(e));
  }
  obj.squares.push_back(std::move(rows));
}

// Appends vec(V)' (I kron W) vec(V) = sum_c ||root * V[:, c]||^2 for a
// column-major n x cols block at `offset`.
void AddBasisTerm(QuadraticObjective& obj, const Eigen::MatrixXd& root,
                  int offset, int cols) {
  if (root.rows() == 0 || cols == 0) return;
  const int n = static_cast<int>(root.cols());
  std::vector<AffineExpr> rows;
  rows.reserve(static_cast<size_t>(root.rows()) * cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < root.rows(); ++r) {
      AffineExpr e;
      for (int j = 0; j < n; ++j) e.Add(offset + c * n + j, root(r, j));
      rows.push_back(std::move(e));
    }
  }
  obj.squares.push_back(std::move(rows));
}

void CheckSquare(const Eigen::MatrixXd& W, int n, const std::string& what) {
  if (W.rows() != n || W.cols() != n) {
    throw ShapeError(what + " must be " + std::to_string(n) + "x" + std::to_string(n));
  }
}

}  // namespace

CostSpec CostSpec::Uniform(const SystemDef& sys, const Eigen::MatrixXd& Q,
                           const Eigen::MatrixXd& R, const Eigen::MatrixXd& Q_N,
                           const Eigen::VectorXd& x_star) {
  CostSpec c;
  c.Q.assign(sys.horizon(), Q);
  c.R.assign(sys.horizon(), R);
  c.Q_N = Q_N;
  c.x_star = x_star;
  return c;
}

CostSpec CostSpec::Zero(const SystemDef& sys) {
  return Uniform(sys, Eigen::MatrixXd::Zero(sys.nx(), sys.nx()),
                 Eigen::MatrixXd::Zero(sys.nu(), sys.nu()),
                 Eigen::MatrixXd::Zero(sys.nx(), sys.nx()),
                 Eigen::VectorXd::Zero(sys.nx()));
}

CostSpec CostSpec::Validated(const SystemDef& sys) const {
  const int N = sys.horizon();
  if (static_cast<int>(Q.size()) != N || static_cast<int>(R.size()) != N) {
    throw ShapeError("cost needs one Q and one R per step");
  }
  CostSpec out;
  for (int k = 0; k < N; ++k) {
    CheckSquare(Q[k], sys.nx(), "Q[" + std::to_string(k) + "]");
    CheckSquare(R[k], sys.nu(), "R[" + std::to_string(k) + "]");
    out.Q.push_back(SymmetrizedPsd(Q[k], "Q"));
    out.R.push_back(SymmetrizedPsd(R[k], "R"));
  }
  CheckSquare(Q_N, sys.nx(), "Q_N");
  out.Q_N = SymmetrizedPsd(Q_N, "Q_N");
  if (x_star.size() != sys.nx()) throw ShapeError("x_star must have n_x entries");
  out.x_star = x_star;
  for (size_t i = 0; i < waypoints.size(); ++i) {
    const Waypoint& w = waypoints[i];
    if (w.step < 0 || w.step > N) {
      throw ConfigError("waypoint " + std::to_string(i) + " at step " +
                        std::to_string(w.step) + " is outside 0.." + std::to_string(N));
    }
    if (w.mu_star.size() != sys.nx()) throw ShapeError("waypoint mean must have n_x entries");
    CheckSquare(w.Q_star, sys.nx(), "waypoint weight");
    out.waypoints.push_back({w.step, w.mu_star, SymmetrizedPsd(w.Q_star, "Q_star")});
  }
  return out;
}

double ExpectedQuadratic(const Eigen::VectorXd& mu, const Eigen::MatrixXd& V,
                         const Eigen::MatrixXd& W) {
  if (W.rows() != W.cols()) throw ShapeError("expected_quadratic: W must be square");
  if (mu.size() != W.rows() || (V.size() > 0 && V.rows() != W.rows())) {
    throw ShapeError("expected_quadratic: dimension mismatch");
  }
  double v = mu.dot(W * mu);
  for (Eigen::Index c = 0; c < V.cols(); ++c) v += V.col(c).dot(W * V.col(c));
  return v;
}

QuadraticObjective AssembleObjective(const SystemDef& sys, const CostSpec& raw,
                                     const DecisionIndex& idx) {
  const CostSpec cost = raw.Validated(sys);
  const int N = sys.horizon();
  QuadraticObjective obj;
  for (int k = 0; k < N; ++k) {
    const Eigen::MatrixXd Qr = WeightRoot(cost.Q[k]);
    const Eigen::MatrixXd Rr = WeightRoot(cost.R[k]);
    AddMeanTerm(obj, Qr, idx.MuX(k).offset, nullptr);
    AddMeanTerm(obj, Rr, idx.MuU(k).offset, nullptr);
    if (idx.has_basis()) {
      AddBasisTerm(obj, Qr, idx.VecVx(k).offset, idx.ell(k));
      AddBasisTerm(obj, Rr, idx.VecVu(k).offset, idx.ell(k));
    }
  }
  const Eigen::MatrixXd QNr = WeightRoot(cost.Q_N);
  AddMeanTerm(obj, QNr, idx.MuX(N).offset, &cost.x_star);
  if (idx.has_basis()) AddBasisTerm(obj, QNr, idx.VecVx(N).offset, idx.ell(N));
  // A waypoint at t = N is an extra term on top of the terminal cost.
  for (const Waypoint& w : cost.waypoints) {
    AddMeanTerm(obj, WeightRoot(w.Q_star), idx.MuX(w.step).offset, &w.mu_star);
  }
  return obj;
}

double ExpectedCost(const SystemDef& sys, const CostSpec& raw,
                    const LiftedTrajectory& traj) {
  const CostSpec cost = raw.Validated(sys);
  traj.CheckShapes(sys);
  const int N = sys.horizon();
  double J = 0.0;
  for (int k = 0; k < N; ++k) {
    J += ExpectedQuadratic(traj.mu_x[k], traj.V_x[k], cost.Q[k]);
    J += ExpectedQuadratic(traj.mu_u[k], traj.V_u[k], cost.R[k]);
  }
  J += ExpectedQuadratic(traj.mu_x[N] - cost.x_star, traj.V_x[N], cost.Q_N);
  for (const Waypoint& w : cost.waypoints) {
    const Eigen::VectorXd d = traj.mu_x[w.step] - w.mu_star;
    J += d.dot(w.Q_star * d);
  }
  return J;
}

}  // namespace stochlift
