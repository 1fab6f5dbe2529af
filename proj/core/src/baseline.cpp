#include "stochlift/baseline.hpp"

#include <cmath>
#include <set>

#include "context.hpp"
#include "stochlift/dynamics.hpp"
#include "stochlift/errors.hpp"
#include "stochlift/special.hpp"

namespace stochlift {

namespace {

double MinEig(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Whether the fixed covariance Sigma satisfies the QCC relaxation in its mode.
bool QccHolds(const QCCSpec& c, const Eigen::MatrixXd& Sigma) {
  const int n = static_cast<int>(Sigma.rows());
  const double tol = 1e-9 * (1.0 + Sigma.norm());
  if (c.mode == QccMode::kLmi) {
    const double zeta = InvChi2Cdf(1.0 - c.eps, n);
    return MinEig(c.Q_cc / zeta - Sigma) >= -tol;
  }
  const Eigen::MatrixXd L = QccFactor(c.Q_cc);
  const Eigen::MatrixXd W = L.triangularView<Eigen::Lower>().solve(
      L.triangularView<Eigen::Lower>().solve(Sigma).transpose());
  const double budget = c.mode == QccMode::kQuadratic ? QccQuadraticBound(n, c.eps) : c.eps;
  return W.trace() <= budget + tol;
}

}  // namespace

std::vector<Eigen::MatrixXd> RiccatiGains(const SystemDef& sys, const CostSpec& raw) {
  const CostSpec cost = raw.Validated(sys);
  const int N = sys.horizon();
  std::vector<Eigen::MatrixXd> K(N);
  Eigen::MatrixXd P = cost.Q_N;
  for (int k = N - 1; k >= 0; --k) {
    const Eigen::MatrixXd& A = sys.A(k);
    const Eigen::MatrixXd& B = sys.B(k);
    const Eigen::MatrixXd S = cost.R[k] + B.transpose() * P * B;
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (S + S.transpose()));
    if (llt.info() != Eigen::Success || MinEig(S) <= 1e-14 * (1.0 + S.norm())) {
      throw NumericalError("Riccati recursion: R + B'PB is singular at step " +
                           std::to_string(k));
    }
    K[k] = -llt.solve(B.transpose() * P * A);
    const Eigen::MatrixXd Acl = A + B * K[k];
    P = cost.Q[k] + A.transpose() * P * Acl;
    P = 0.5 * (P + P.transpose());
  }
  return K;
}

std::vector<Eigen::MatrixXd> ClosedLoopCovariances(const SystemDef& sys,
                                                   const std::vector<Eigen::MatrixXd>& K) {
  const int N = sys.horizon();
  if (static_cast<int>(K.size()) != N) throw ShapeError("need one gain per step");
  std::vector<Eigen::MatrixXd> Sigma{sys.Sigma0()};
  for (int k = 0; k < N; ++k) {
    if (K[k].rows() != sys.nu() || K[k].cols() != sys.nx()) {
      throw ShapeError("gain K[" + std::to_string(k) + "] must be n_u x n_x");
    }
    const Eigen::MatrixXd Acl = sys.A(k) + sys.B(k) * K[k];
    Eigen::MatrixXd next = Acl * Sigma[k] * Acl.transpose() + sys.D(k) * sys.D(k).transpose();
    Sigma.push_back(0.5 * (next + next.transpose()));
  }
  return Sigma;
}

LiftedTrajectory EmbedPolicy(const SystemDef& sys, const std::vector<Eigen::MatrixXd>& K,
                             const std::vector<Eigen::VectorXd>& mu_u) {
  const int N = sys.horizon();
  if (static_cast<int>(K.size()) != N || static_cast<int>(mu_u.size()) != N) {
    throw ShapeError("need one gain and one control mean per step");
  }
  LiftedTrajectory t;
  t.mu_x.push_back(sys.mu0());
  t.V_x.push_back(sys.V0());
  for (int k = 0; k < N; ++k) {
    t.mu_u.push_back(mu_u[k]);
    t.V_u.push_back(K[k] * t.V_x[k]);
    t.mu_x.push_back(PropagateMean(sys, t.mu_x[k], mu_u[k], k));
    t.V_x.push_back(PropagateBasis(sys, t.V_x[k], t.V_u[k], k));
  }
  return t;
}

SolveResult SolveBaseline(const SystemDef& sys, const CostSpec& raw,
                          const std::vector<ConstraintSpec>& constraints,
                          const BaselineOptions& opts, BaselinePolicy* policy) {
  const CostSpec cost = raw.Validated(sys);
  const int N = sys.horizon();
  const int nx = sys.nx();
  const int nu = sys.nu();
  const std::vector<Eigen::MatrixXd> K = RiccatiGains(sys, opts.riccati_weights.value_or(cost));
  const std::vector<Eigen::MatrixXd> Sigma = ClosedLoopCovariances(sys, K);

  const DecisionIndex idx(sys, /*with_basis=*/false);
  ConicProgram p;
  p.num_vars = idx.total();
  p.objective = AssembleObjective(sys, cost, idx);
  // Covariance part of the expected cost; fixed once K is fixed.
  double trace_cost = (cost.Q_N * Sigma[N]).trace();
  for (int k = 0; k < N; ++k) {
    trace_cost += (cost.Q[k] * Sigma[k]).trace();
    trace_cost += (cost.R[k] * K[k] * Sigma[k] * K[k].transpose()).trace();
  }
  p.objective.linear.constant += trace_cost;
  for (EqualityGroup& g : DynamicsEqualities(sys, idx)) {
    for (AffineExpr& e : g.rows) p.equalities.push_back(std::move(e));
  }

  std::string violated;
  for (size_t i = 0; i < constraints.size(); ++i) {
    try {
      const ConstraintSpec& spec = constraints[i];
      Validate(sys, spec);
      if (const auto* c = std::get_if<MixedLCC>(&spec)) {
        std::set<int> steps;
        for (int k = 0; k <= N; ++k) {
          if (!c->a.segment(k * nx, nx).isZero(0.0)) steps.insert(k);
        }
        for (int k = 0; k < N; ++k) {
          if (!c->alpha.segment(k * nu, nu).isZero(0.0)) steps.insert(k);
        }
        if (steps.size() > 1) {
          throw UnsupportedError(
              "unsupported constraint: the baseline handles single-step LCCs only");
        }
        SocRow row;
        row.head.constant = c->b;
        if (!steps.empty()) {
          const int k = *steps.begin();
          const Eigen::VectorXd a = c->a.segment(k * nx, nx);
          Eigen::VectorXd w = a;
          if (k < N) {
            const Eigen::VectorXd al = c->alpha.segment(k * nu, nu);
            w += K[k].transpose() * al;
            for (int j = 0; j < nu; ++j) row.head.Add(idx.mu_u(k, j), -al(j));
          }
          for (int j = 0; j < nx; ++j) row.head.Add(idx.mu_x(k, j), -a(j));
          const double var = std::max(0.0, w.dot(Sigma[k] * w));
          row.head.constant -= LccBackoff(c->eps) * std::sqrt(var);
        }
        p.socs.push_back(std::move(row));
      } else if (const auto* c = std::get_if<TerminalCovSpec>(&spec)) {
        if (MinEig(c->Sigma_f - Sigma[N]) < -1e-9 * (1.0 + c->Sigma_f.norm())) {
          violated = "constraint " + std::to_string(i) +
                     ": closed-loop terminal covariance exceeds Sigma_f";
        }
      } else if (const auto* c = std::get_if<QCCSpec>(&spec)) {
        if (!QccHolds(*c, Sigma[c->step])) {
          violated = "constraint " + std::to_string(i) +
                     ": closed-loop covariance violates the QCC budget";
        }
      }
    } catch (const Error&) {
      internal::RethrowWithContext("constraint " + std::to_string(i) + ": ");
    }
  }

  SolveResult res;
  if (!violated.empty()) {
    res.status = SolveStatus::kInfeasible;
    res.backend_status = "FixedCovarianceCheck";
    res.diagnostics = violated;
    return res;
  }
  res = Solve(p, opts.solve);
  if (res.status != SolveStatus::kOptimal) return res;

  const LiftedTrajectory mean_plan = idx.Unpack(res.x);
  LiftedTrajectory traj = EmbedPolicy(sys, K, mean_plan.mu_u);
  res.objective = ExpectedCost(sys, cost, traj);
  if (policy != nullptr) {
    policy->K = K;
    policy->mu_x = traj.mu_x;
    policy->mu_u = traj.mu_u;
    policy->Sigma = Sigma;
  }
  res.trajectory = std::move(traj);
  return res;
}

}  // namespace stochlift
