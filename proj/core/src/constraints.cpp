#include "stochlift/constraints.hpp"

#include <cmath>

#include "stochlift/errors.hpp"
#include "stochlift/special.hpp"

namespace stochlift {

namespace {

void CheckLccRisk(double eps) {
  if (!(eps > 0.0 && eps < 0.5)) {
    throw UnsupportedError("risk level out of range: LCC eps must lie in (0, 0.5), got " +
                           std::to_string(eps));
  }
}

void CheckQccRisk(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw DomainError("risk level out of range: QCC eps must lie in (0, 1), got " +
                      std::to_string(eps));
  }
}

void CheckStep(int k, int last) {
  if (k < 0 || k > last) {
    throw IndexError("step " + std::to_string(k) + " outside 0.." + std::to_string(last));
  }
}

// Appends the rows of L^{-1} V_x[step][:, c] for every basis column.
void AppendWhitenedColumns(const DecisionIndex& idx, int step,
                           const Eigen::MatrixXd& Linv, std::vector<AffineExpr>& tail) {
  const int nx = idx.nx();
  for (int c = 0; c < idx.ell(step); ++c) {
    for (int r = 0; r < nx; ++r) {
      AffineExpr e;
      for (int j = 0; j <= r; ++j) e.Add(idx.V_x(step, j, c), Linv(r, j));
      if (!e.terms.empty()) tail.push_back(std::move(e));
    }
  }
}

SocRow WhitenedTraceRow(const SystemDef& sys, const DecisionIndex& idx,
                        const QCCSpec& c, double budget) {
  Validate(sys, c);
  if (!idx.has_basis()) throw UnsupportedError("QCC rows need basis variables");
  const Eigen::MatrixXd L = QccFactor(c.Q_cc);
  const Eigen::MatrixXd Linv = L.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(sys.nx(), sys.nx()));
  SocRow row;
  row.head.constant = std::sqrt(budget);
  AppendWhitenedColumns(idx, c.step, Linv, row.tail);
  return row;
}

PsdBlock SchurBlock(const DecisionIndex& idx, int step, const Eigen::MatrixXd& S) {
  const int nx = idx.nx();
  const int ell = idx.ell(step);
  PsdBlock blk(nx + ell);
  for (int j = 0; j < nx; ++j) {
    for (int i = j; i < nx; ++i) blk.Lower(i, j).constant = S(i, j);
  }
  for (int c = 0; c < ell; ++c) {
    for (int i = 0; i < nx; ++i) blk.Lower(nx + c, i).Add(idx.V_x(step, i, c), 1.0);
    blk.Lower(nx + c, nx + c).constant = 1.0;
  }
  return blk;
}

}  // namespace

std::string ToString(QccMode mode) {
  switch (mode) {
    case QccMode::kLmi:
      return "lmi";
    case QccMode::kQuadratic:
      return "quadratic";
    case QccMode::kMarkov:
      return "markov";
  }
  return "?";
}

QccMode ParseQccMode(const std::string& s) {
  if (s == "lmi") return QccMode::kLmi;
  if (s == "quadratic") return QccMode::kQuadratic;
  if (s == "markov") return QccMode::kMarkov;
  throw ConfigError("unknown QCC mode '" + s + "' (expected lmi, quadratic or markov)");
}

MixedLCC StateLcc(const SystemDef& sys, int k, const Eigen::VectorXd& a_k, double b,
                  double eps) {
  CheckStep(k, sys.horizon());
  if (a_k.size() != sys.nx()) throw ShapeError("state LCC coefficients must have n_x entries");
  MixedLCC c;
  c.a = Eigen::VectorXd::Zero((sys.horizon() + 1) * sys.nx());
  c.alpha = Eigen::VectorXd::Zero(sys.horizon() * sys.nu());
  c.a.segment(k * sys.nx(), sys.nx()) = a_k;
  c.b = b;
  c.eps = eps;
  return c;
}

MixedLCC ControlLcc(const SystemDef& sys, int k, const Eigen::VectorXd& alpha_k, double b,
                    double eps) {
  CheckStep(k, sys.horizon() - 1);
  if (alpha_k.size() != sys.nu()) {
    throw ShapeError("control LCC coefficients must have n_u entries");
  }
  MixedLCC c;
  c.a = Eigen::VectorXd::Zero((sys.horizon() + 1) * sys.nx());
  c.alpha = Eigen::VectorXd::Zero(sys.horizon() * sys.nu());
  c.alpha.segment(k * sys.nu(), sys.nu()) = alpha_k;
  c.b = b;
  c.eps = eps;
  return c;
}

std::vector<MixedLCC> ControlBox(const SystemDef& sys, int k, double u_max, double eps) {
  std::vector<MixedLCC> out;
  for (int j = 0; j < sys.nu(); ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Unit(sys.nu(), j);
    out.push_back(ControlLcc(sys, k, e, u_max, eps));
    out.push_back(ControlLcc(sys, k, -e, u_max, eps));
  }
  return out;
}

void Validate(const SystemDef& sys, const ConstraintSpec& spec) {
  const int N = sys.horizon();
  const int nx = sys.nx();
  if (const auto* c = std::get_if<MixedLCC>(&spec)) {
    if (c->a.size() != (N + 1) * nx || c->alpha.size() != N * sys.nu()) {
      throw ShapeError("LCC needs (N+1) n_x state and N n_u control coefficients");
    }
    if (!std::isfinite(c->b)) throw DomainError("LCC bound must be finite");
    CheckLccRisk(c->eps);
  } else if (const auto* c = std::get_if<TerminalCovSpec>(&spec)) {
    if (c->Sigma_f.rows() != nx || c->Sigma_f.cols() != nx) {
      throw ShapeError("Sigma_f must be n_x x n_x");
    }
    const Eigen::MatrixXd S = 0.5 * (c->Sigma_f + c->Sigma_f.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0)) {
      throw NotPsdError("Sigma_f must be positive definite");
    }
  } else if (const auto* c = std::get_if<QCCSpec>(&spec)) {
    if (c->Q_cc.rows() != nx || c->Q_cc.cols() != nx) throw ShapeError("Q_cc must be n_x x n_x");
    CheckQccRisk(c->eps);
    CheckStep(c->step, N);
    QccFactor(c->Q_cc);
  }
}

double LccBackoff(double eps) {
  CheckLccRisk(eps);
  return InvNormCdf(1.0 - eps);
}

double QccQuadraticBound(int n, double eps) {
  if (n < 1) throw DomainError("QCC bound: dimension must be >= 1");
  CheckQccRisk(eps);
  // (1 - eps)^{1/n} computed as exp(log1p(-eps) / n) to keep precision near 1.
  const double root = std::exp(std::log1p(-eps) / n);
  const double z = InvNormCdf(0.5 + 0.5 * root);
  return 1.0 / (z * z);
}

SocRow BuildLcc(const SystemDef& sys, const DecisionIndex& idx, const MixedLCC& c) {
  Validate(sys, c);
  if (!idx.has_basis()) throw UnsupportedError("exact LCC rows need basis variables");
  const int N = sys.horizon();
  const int nx = sys.nx();
  const int nu = sys.nu();
  const double z = LccBackoff(c.eps);

  SocRow row;
  row.head.constant = c.b;
  std::vector<AffineExpr> y(idx.ell(N));
  for (int k = 0; k <= N; ++k) {
    const auto a_k = c.a.segment(k * nx, nx);
    if (a_k.isZero(0.0)) continue;
    for (int i = 0; i < nx; ++i) row.head.Add(idx.mu_x(k, i), -a_k(i));
    for (int col = 0; col < idx.ell(k); ++col) {
      for (int i = 0; i < nx; ++i) y[col].Add(idx.V_x(k, i, col), z * a_k(i));
    }
  }
  for (int k = 0; k < N; ++k) {
    const auto al = c.alpha.segment(k * nu, nu);
    if (al.isZero(0.0)) continue;
    for (int i = 0; i < nu; ++i) row.head.Add(idx.mu_u(k, i), -al(i));
    for (int col = 0; col < idx.ell(k); ++col) {
      for (int i = 0; i < nu; ++i) y[col].Add(idx.V_u(k, i, col), z * al(i));
    }
  }
  // Padding columns carry no terms and are left out of the cone.
  for (AffineExpr& e : y) {
    if (!e.terms.empty()) row.tail.push_back(std::move(e));
  }
  return row;
}

PsdBlock BuildTerminalCov(const SystemDef& sys, const DecisionIndex& idx,
                          const TerminalCovSpec& c) {
  Validate(sys, c);
  if (!idx.has_basis()) throw UnsupportedError("covariance blocks need basis variables");
  return SchurBlock(idx, sys.horizon(), 0.5 * (c.Sigma_f + c.Sigma_f.transpose()));
}

PsdBlock BuildQccLmi(const SystemDef& sys, const DecisionIndex& idx, const QCCSpec& c) {
  Validate(sys, c);
  if (!idx.has_basis()) throw UnsupportedError("QCC blocks need basis variables");
  const double zeta = InvChi2Cdf(1.0 - c.eps, sys.nx());
  return SchurBlock(idx, c.step, 0.5 * (c.Q_cc + c.Q_cc.transpose()) / zeta);
}

SocRow BuildQccQuadratic(const SystemDef& sys, const DecisionIndex& idx, const QCCSpec& c) {
  return WhitenedTraceRow(sys, idx, c, QccQuadraticBound(sys.nx(), c.eps));
}

SocRow BuildQccMarkov(const SystemDef& sys, const DecisionIndex& idx, const QCCSpec& c) {
  return WhitenedTraceRow(sys, idx, c, c.eps);
}

Eigen::MatrixXd QccFactor(const Eigen::MatrixXd& Q_cc) {
  const Eigen::MatrixXd S = 0.5 * (Q_cc + Q_cc.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw NotPsdError("Q_cc must be positive definite");
  return llt.matrixL();
}

}  // namespace stochlift
