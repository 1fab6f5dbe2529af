#pragma once

#include <string>
#include <variant>
#include <vector>

#include "stochlift/affine.hpp"
#include "stochlift/index.hpp"
#include "stochlift/lifted.hpp"

namespace stochlift {

/// Pr[a' x_{0:N} + alpha' u_{0:N-1} <= b] >= 1 - eps over the stacked state
/// and control sequences. `a` has (N+1) n_x entries, `alpha` has N n_u.
struct MixedLCC {
  Eigen::VectorXd a;
  Eigen::VectorXd alpha;
  double b = 0.0;
  double eps = 0.05;
};

/// V_x[N] V_x[N]' <= Sigma_f.
struct TerminalCovSpec {
  Eigen::MatrixXd Sigma_f;
};

enum class QccMode { kLmi, kQuadratic, kMarkov };

/// Pr[(x_i - mu_x[i])' Q_cc^{-1} (x_i - mu_x[i]) <= 1] >= 1 - eps at step i.
struct QCCSpec {
  Eigen::MatrixXd Q_cc;
  double eps = 0.05;
  int step = 0;
  QccMode mode = QccMode::kLmi;
};

using ConstraintSpec = std::variant<MixedLCC, TerminalCovSpec, QCCSpec>;

std::string ToString(QccMode mode);
/// Accepts "lmi", "quadratic" and "markov". Throws ConfigError otherwise.
QccMode ParseQccMode(const std::string& s);

/// a_k' x_k <= b at a single step k.
MixedLCC StateLcc(const SystemDef& sys, int k, const Eigen::VectorXd& a_k,
                  double b, double eps);
/// alpha_k' u_k <= b at a single step k.
MixedLCC ControlLcc(const SystemDef& sys, int k, const Eigen::VectorXd& alpha_k,
                    double b, double eps);
/// |u_k^(j)| <= u_max for every component j, as 2 n_u LCCs.
std::vector<MixedLCC> ControlBox(const SystemDef& sys, int k, double u_max,
                                 double eps);

/// Throws ShapeError, DomainError, UnsupportedError or NotPsdError when the
/// constraint does not fit `sys`.
void Validate(const SystemDef& sys, const ConstraintSpec& c);

/// Phi^{-1}(1 - eps), the back-off coefficient of an LCC.
double LccBackoff(double eps);

/// Trace budget 1 / Phi^{-1}((1 + (1 - eps)^{1/n}) / 2)^2.
double QccQuadraticBound(int n, double eps);

/// y0 + Phi^{-1}(1 - eps) ||y|| <= b, as the cone ||z y|| <= b - y0.
SocRow BuildLcc(const SystemDef& sys, const DecisionIndex& idx, const MixedLCC& c);

/// [[Sigma_f, V_x[N]], [V_x[N]', I]] >= 0.
PsdBlock BuildTerminalCov(const SystemDef& sys, const DecisionIndex& idx,
                          const TerminalCovSpec& c);

/// [[Q_cc / zeta, V_x[i]], [V_x[i]', I]] >= 0 with zeta the chi-squared
/// quantile at 1 - eps.
PsdBlock BuildQccLmi(const SystemDef& sys, const DecisionIndex& idx, const QCCSpec& c);

/// ||(I kron L^{-1}) vec(V_x[i])|| <= sqrt(QccQuadraticBound(n_x, eps)).
SocRow BuildQccQuadratic(const SystemDef& sys, const DecisionIndex& idx,
                         const QCCSpec& c);

/// ||(I kron L^{-1}) vec(V_x[i])|| <= sqrt(eps).
SocRow BuildQccMarkov(const SystemDef& sys, const DecisionIndex& idx, const QCCSpec& c);

/// Lower Cholesky factor of Q_cc. Throws NotPsdError when Q_cc is not
/// positive definite.
Eigen::MatrixXd QccFactor(const Eigen::MatrixXd& Q_cc);

}  // namespace stochlift
