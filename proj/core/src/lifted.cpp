#include "stochlift/lifted.hpp"

#include <string>

#include "stochlift/errors.hpp"

namespace stochlift {

namespace {

constexpr double kPsdTolerance = 1e-10;

void CheckDims(const Eigen::MatrixXd& M, int rows, int cols, const char* what,
               int k) {
  if (M.rows() != rows || M.cols() != cols) {
    throw ShapeError(std::string(what) + "[" + std::to_string(k) + "] is " +
                     std::to_string(M.rows()) + "x" + std::to_string(M.cols()) +
                     ", expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

}  // namespace

SystemDef::SystemDef(std::vector<Eigen::MatrixXd> A,
                     std::vector<Eigen::MatrixXd> B,
                     std::vector<Eigen::MatrixXd> D, Eigen::VectorXd mu0,
                     Eigen::MatrixXd Sigma0)
    : horizon_(static_cast<int>(A.size())),
      A_(std::move(A)),
      B_(std::move(B)),
      D_(std::move(D)),
      mu0_(std::move(mu0)) {
  if (horizon_ < 1) throw ShapeError("system horizon must be positive");
  if (B_.size() != A_.size() || D_.size() != A_.size()) {
    throw ShapeError("A, B, D lists must all have horizon entries");
  }
  nx_ = static_cast<int>(A_[0].rows());
  nu_ = static_cast<int>(B_[0].cols());
  nw_ = static_cast<int>(D_[0].cols());
  if (nx_ < 1 || nu_ < 1 || nw_ < 1) {
    throw ShapeError("system dimensions must be positive");
  }
  for (int k = 0; k < horizon_; ++k) {
    CheckDims(A_[k], nx_, nx_, "A", k);
    CheckDims(B_[k], nx_, nu_, "B", k);
    CheckDims(D_[k], nx_, nw_, "D", k);
  }
  if (mu0_.size() != nx_) throw ShapeError("mu0 length must equal n_x");
  Sigma0_ = SymmetrizedPsd(Sigma0, "Sigma0");
  if (Sigma0_.rows() != nx_) throw ShapeError("Sigma0 must be n_x x n_x");
  V0_ = InitialFactor(Sigma0_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma0_);
  if (es.eigenvalues().minCoeff() < 0.0) {
    Sigma0_ = V0_ * V0_.transpose();
  }
}

SystemDef SystemDef::Lti(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const Eigen::MatrixXd& D, int horizon,
                         Eigen::VectorXd mu0, Eigen::MatrixXd Sigma0) {
  if (horizon < 1) throw ShapeError("system horizon must be positive");
  return SystemDef(std::vector<Eigen::MatrixXd>(horizon, A),
                   std::vector<Eigen::MatrixXd>(horizon, B),
                   std::vector<Eigen::MatrixXd>(horizon, D), std::move(mu0),
                   std::move(Sigma0));
}

const Eigen::MatrixXd& SystemDef::A(int k) const {
  if (k < 0 || k >= horizon_) throw IndexError("A: step out of range");
  return A_[k];
}

const Eigen::MatrixXd& SystemDef::B(int k) const {
  if (k < 0 || k >= horizon_) throw IndexError("B: step out of range");
  return B_[k];
}

const Eigen::MatrixXd& SystemDef::D(int k) const {
  if (k < 0 || k >= horizon_) throw IndexError("D: step out of range");
  return D_[k];
}

int BasisDim(const SystemDef& sys, int k) {
  if (k < 0 || k > sys.horizon()) {
    throw IndexError("basis step " + std::to_string(k) + " outside [0, " +
                     std::to_string(sys.horizon()) + "]");
  }
  return sys.nx() + k * sys.nw();
}

Eigen::VectorXd Vec(const Eigen::MatrixXd& M) {
  return Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
}

Eigen::MatrixXd Unvec(const Eigen::VectorXd& v, int p, int q) {
  if (p < 0 || q < 0 || v.size() != static_cast<Eigen::Index>(p) * q) {
    throw ShapeError("unvec: vector of length " + std::to_string(v.size()) +
                     " cannot be reshaped to " + std::to_string(p) + "x" +
                     std::to_string(q));
  }
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), p, q);
}

Eigen::MatrixXd SymmetrizedPsd(const Eigen::MatrixXd& W, const char* what,
                               double tol) {
  if (W.rows() != W.cols()) {
    throw ShapeError(std::string(what) + " must be square");
  }
  Eigen::MatrixXd S = 0.5 * (W + W.transpose());
  if (S.size() == 0) return S;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol) {
    throw NotPsdError(std::string(what) + " has eigenvalue " +
                      std::to_string(es.eigenvalues().minCoeff()) +
                      " below -" + std::to_string(tol));
  }
  return S;
}

Eigen::MatrixXd PsdFactor(const Eigen::MatrixXd& W, double tol) {
  if (W.rows() != W.cols()) throw ShapeError("factor: matrix must be square");
  Eigen::MatrixXd S = 0.5 * (W + W.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() == Eigen::Success) {
    // Accept only a numerically faithful Cholesky factor; near-singular
    // inputs fall through to the eigendecomposition.
    Eigen::MatrixXd L = llt.matrixL();
    if ((L * L.transpose() - S).norm() <= 1e-12 * (1.0 + S.norm())) return L;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::VectorXd& lambda = es.eigenvalues();
  if (lambda.size() > 0 && lambda.minCoeff() < -tol) {
    throw NotPsdError("matrix has eigenvalue " +
                      std::to_string(lambda.minCoeff()) + " below -" +
                      std::to_string(tol));
  }
  Eigen::VectorXd root = lambda.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

Eigen::MatrixXd InitialFactor(const Eigen::MatrixXd& Sigma0) {
  return PsdFactor(Sigma0, kPsdTolerance);
}

void LiftedTrajectory::CheckShapes(const SystemDef& sys) const {
  const int N = sys.horizon();
  if (static_cast<int>(mu_x.size()) != N + 1 ||
      static_cast<int>(V_x.size()) != N + 1 ||
      static_cast<int>(mu_u.size()) != N ||
      static_cast<int>(V_u.size()) != N) {
    throw ShapeError("trajectory step counts do not match the horizon");
  }
  for (int k = 0; k <= N; ++k) {
    const int ell = BasisDim(sys, k);
    if (mu_x[k].size() != sys.nx()) throw ShapeError("mu_x length mismatch");
    CheckDims(V_x[k], sys.nx(), ell, "V_x", k);
    if (k < N) {
      if (mu_u[k].size() != sys.nu()) throw ShapeError("mu_u length mismatch");
      CheckDims(V_u[k], sys.nu(), ell, "V_u", k);
    }
  }
}

Eigen::MatrixXd LiftedTrajectory::StateCovariance(int k) const {
  if (k < 0 || k >= static_cast<int>(V_x.size())) {
    throw IndexError("state covariance: step out of range");
  }
  return V_x[k] * V_x[k].transpose();
}

}  // namespace stochlift
