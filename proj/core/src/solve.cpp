// Lowering of ConicProgram onto the Clarabel interior-point solver.

#include <Eigen/Sparse>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>

#include "stochlift/errors.hpp"
#include "stochlift/program.hpp"

extern "C" {

struct ShimSettings {
  uint32_t max_iter;
  double time_limit;
  double tol_feas;
  double tol_gap_abs;
  double tol_gap_rel;
  double tol_infeas_abs;
  double tol_infeas_rel;
  uint8_t verbose;
};

struct ShimInfo {
  int32_t status;
  uint32_t iterations;
  double solve_time;
  double obj_val;
  double r_prim;
  double r_dual;
};

int32_t clarabel_shim_solve(size_t n, size_t m, const size_t* p_colptr, const size_t* p_rowval,
                            const double* p_nzval, const double* q, const size_t* a_colptr,
                            const size_t* a_rowval, const double* a_nzval, const double* b,
                            size_t ncones, const uint8_t* cone_kind, const size_t* cone_dim,
                            const ShimSettings* settings, double* x_out, ShimInfo* info);
}

namespace stochlift {

namespace {

enum ConeKind : uint8_t { kZero = 0, kNonneg = 1, kSoc = 2, kPsdTriangle = 3 };

enum BackendStatus {
  kUnsolved = 0,
  kSolved = 1,
  kPrimalInfeasible = 2,
  kDualInfeasible = 3,
  kAlmostSolved = 4,
  kAlmostPrimalInfeasible = 5,
  kAlmostDualInfeasible = 6,
  kMaxIterations = 7,
  kMaxTime = 8,
  kNumericalError = 9,
  kInsufficientProgress = 10,
  kCallbackTerminated = 11,
};

const char* BackendStatusName(int s) {
  static const char* names[] = {"Unsolved",
                                "Solved",
                                "PrimalInfeasible",
                                "DualInfeasible",
                                "AlmostSolved",
                                "AlmostPrimalInfeasible",
                                "AlmostDualInfeasible",
                                "MaxIterations",
                                "MaxTime",
                                "NumericalError",
                                "InsufficientProgress",
                                "CallbackTerminated"};
  return s >= 0 && s < 12 ? names[s] : "Unknown";
}

using Triplet = Eigen::Triplet<double, int64_t>;
using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int64_t>;

struct Csc {
  std::vector<size_t> colptr;
  std::vector<size_t> rowval;
  std::vector<double> nzval;
};

Csc ToCsc(SpMat M) {
  M.prune(0.0);
  M.makeCompressed();
  Csc c;
  c.colptr.assign(M.outerIndexPtr(), M.outerIndexPtr() + M.cols() + 1);
  c.rowval.assign(M.innerIndexPtr(), M.innerIndexPtr() + M.nonZeros());
  c.nzval.assign(M.valuePtr(), M.valuePtr() + M.nonZeros());
  return c;
}

// Constraint rows in Clarabel form A x + s = b, s in K.
class ConeRows {
 public:
  // Appends the row s = e(x), i.e. A row -c and b = const.
  void Slack(const AffineExpr& e, double scale = 1.0) {
    for (const Term& t : e.terms) trip_.emplace_back(m_, t.var, -scale * t.coef);
    b_.push_back(scale * e.constant);
    ++m_;
  }
  // Appends the row s = t(x) for a single variable with coefficient and
  // offset.
  void SlackVar(int var, double coef, double constant) {
    trip_.emplace_back(m_, var, -coef);
    b_.push_back(constant);
    ++m_;
  }
  void Cone(uint8_t kind, size_t dim) {
    if ((kind == kZero || kind == kNonneg) && !kinds_.empty() && kinds_.back() == kind) {
      dims_.back() += dim;
      return;
    }
    kinds_.push_back(kind);
    dims_.push_back(dim);
  }

  int64_t m() const { return m_; }
  const std::vector<double>& b() const { return b_; }
  const std::vector<uint8_t>& kinds() const { return kinds_; }
  const std::vector<size_t>& dims() const { return dims_; }
  SpMat Matrix(int64_t n) const {
    SpMat A(m_, n);
    A.setFromTriplets(trip_.begin(), trip_.end());
    return A;
  }

 private:
  int64_t m_ = 0;
  std::vector<Triplet> trip_;
  std::vector<double> b_;
  std::vector<uint8_t> kinds_;
  std::vector<size_t> dims_;
};

void AddSocRow(ConeRows& rows, const SocRow& s) {
  if (s.tail.empty()) {
    rows.Slack(s.head);
    rows.Cone(kNonneg, 1);
    return;
  }
  rows.Slack(s.head);
  for (const AffineExpr& e : s.tail) rows.Slack(e);
  rows.Cone(kSoc, 1 + s.tail.size());
}

// svec of the upper triangle, column by column, off-diagonals scaled by
// sqrt(2).
void AddPsdBlock(ConeRows& rows, const PsdBlock& blk) {
  const int side = blk.side();
  for (int c = 0; c < side; ++c) {
    for (int r = 0; r <= c; ++r) rows.Slack(blk.At(r, c), r == c ? 1.0 : std::sqrt(2.0));
  }
  rows.Cone(kPsdTriangle, side);
}

SolveStatus MapStatus(int s) {
  switch (s) {
    case kSolved:
    case kAlmostSolved:
      return SolveStatus::kOptimal;
    case kPrimalInfeasible:
    case kAlmostPrimalInfeasible:
      return SolveStatus::kInfeasible;
    case kDualInfeasible:
    case kAlmostDualInfeasible:
      return SolveStatus::kUnbounded;
    default:
      return SolveStatus::kNumericalLimit;
  }
}

}  // namespace

namespace {

struct BackendRun {
  int32_t rc = 0;
  ShimInfo info{};
  std::vector<double> x;
};

struct Lowered {
  int64_t n = 0;
  Csc P, A;
  std::vector<double> q, b;
  std::vector<uint8_t> kinds;
  std::vector<size_t> dims;
};

// Lowers p with its objective multiplied by `scale`; scale 0 keeps only the
// constraints.
Lowered Lower(const ConicProgram& p, ObjectiveLowering lowering, double scale) {
  const bool epigraph = scale > 0.0 && lowering == ObjectiveLowering::kEpigraph;
  const int64_t n = p.num_vars + (epigraph ? 1 : 0);
  const int t_var = p.num_vars;

  ConeRows rows;
  for (const AffineExpr& e : p.equalities) rows.Slack(e);
  rows.Cone(kZero, p.equalities.size());
  for (const SocRow& s : p.socs) {
    if (s.tail.empty()) AddSocRow(rows, s);
  }
  for (const SocRow& s : p.socs) {
    if (!s.tail.empty()) AddSocRow(rows, s);
  }

  std::vector<double> q(n, 0.0);
  SpMat P(n, n);
  size_t nres = 0;
  for (const auto& sq : p.objective.squares) nres += sq.size();
  if (scale > 0.0) {
    for (const Term& t : p.objective.linear.terms) q[t.var] += scale * t.coef;
  }
  if (epigraph) {
    q[t_var] += scale;
    if (nres > 0) {
      // ||r||^2 <= t  <=>  ||(2 r, t - 1)|| <= t + 1.
      rows.SlackVar(t_var, 1.0, 1.0);
      for (const auto& sq : p.objective.squares) {
        for (const AffineExpr& e : sq) rows.Slack(e, 2.0);
      }
      rows.SlackVar(t_var, 1.0, -1.0);
      rows.Cone(kSoc, nres + 2);
    }
  } else if (scale > 0.0 && nres > 0) {
    std::vector<Triplet> trip;
    Eigen::VectorXd d(static_cast<Eigen::Index>(nres));
    int64_t r = 0;
    for (const auto& sq : p.objective.squares) {
      for (const AffineExpr& e : sq) {
        for (const Term& t : e.terms) trip.emplace_back(r, t.var, t.coef);
        d(r++) = e.constant;
      }
    }
    SpMat M(static_cast<int64_t>(nres), n);
    M.setFromTriplets(trip.begin(), trip.end());
    const SpMat H = (2.0 * scale) * SpMat(M.transpose() * M);
    P = H.triangularView<Eigen::Upper>();
    const Eigen::VectorXd g = (2.0 * scale) * (M.transpose() * d);
    for (int64_t i = 0; i < n; ++i) q[i] += g(i);
  }
  for (const PsdBlock& blk : p.psds) AddPsdBlock(rows, blk);

  Lowered out;
  out.n = n;
  out.P = ToCsc(P);
  out.A = ToCsc(rows.Matrix(n));
  out.q = std::move(q);
  out.b = rows.b();
  out.kinds = rows.kinds();
  out.dims = rows.dims();
  return out;
}

BackendRun RunBackend(const Lowered& l, const SolveOptions& opts, double time_limit) {
  ShimSettings st{};
  st.max_iter = static_cast<uint32_t>(opts.max_iters);
  st.time_limit = time_limit > 0.0 ? time_limit : std::numeric_limits<double>::infinity();
  st.tol_feas = opts.tolerance;
  st.tol_gap_abs = opts.tolerance;
  st.tol_gap_rel = opts.tolerance;
  st.tol_infeas_abs = opts.tolerance;
  st.tol_infeas_rel = opts.tolerance;
  st.verbose = opts.verbose ? 1 : 0;
  BackendRun run;
  run.x.assign(l.n, 0.0);
  run.rc = clarabel_shim_solve(l.n, static_cast<int64_t>(l.b.size()), l.P.colptr.data(),
                               l.P.rowval.data(), l.P.nzval.data(), l.q.data(),
                               l.A.colptr.data(), l.A.rowval.data(), l.A.nzval.data(),
                               l.b.data(), l.kinds.size(), l.kinds.data(), l.dims.data(), &st,
                               run.x.data(), &run.info);
  return run;
}

// Largest objective coefficient magnitude after lowering, P counted as 2 M'M.
double ObjectiveMagnitude(const Lowered& l) {
  double m = 0.0;
  for (double v : l.P.nzval) m = std::max(m, std::abs(v));
  for (double v : l.q) m = std::max(m, std::abs(v));
  return m;
}

bool Inconclusive(int s) {
  return s == kMaxIterations || s == kNumericalError || s == kInsufficientProgress;
}

}  // namespace

SolveResult Solve(const ConicProgram& p, const SolveOptions& opts) {
  p.CheckWellFormed();
  if (!(opts.tolerance > 0.0) || opts.max_iters < 1) {
    throw ConfigError("solver tolerance must be positive and max_iters at least 1");
  }
  if (opts.objective_scale < 0.0) throw ConfigError("objective_scale must be >= 0");
  const auto wall0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  };

  double scale = opts.objective_scale;
  Lowered low;
  if (scale == 0.0) {
    low = Lower(p, opts.lowering, 1.0);
    const double mag = ObjectiveMagnitude(low);
    scale = mag > 1.0 ? 1.0 / mag : 1.0;
    if (scale != 1.0) low = Lower(p, opts.lowering, scale);
  } else {
    low = Lower(p, opts.lowering, scale);
  }
  BackendRun run = RunBackend(low, opts, opts.time_limit_s);

  SolveResult res;
  if (run.rc != 0) {
    res.solve_seconds = elapsed();
    res.status = SolveStatus::kNumericalLimit;
    res.backend_status = "SetupFailed";
    res.diagnostics = "backend setup failed with code " + std::to_string(run.rc);
    return res;
  }
  res.iterations = static_cast<int>(run.info.iterations);
  res.backend_status = BackendStatusName(run.info.status);
  res.status = MapStatus(run.info.status);
  run.x.resize(p.num_vars);
  res.x = std::move(run.x);
  res.objective = p.objective.Evaluate(res.x);
  res.residuals = Evaluate(p, res.x);
  res.diagnostics = "r_prim=" + std::to_string(run.info.r_prim) +
                    " r_dual=" + std::to_string(run.info.r_dual) +
                    " residual=" + std::to_string(res.residuals.Worst());

  if (opts.certify_infeasibility && Inconclusive(run.info.status)) {
    // Constraints alone: a primal infeasibility certificate here settles the
    // status of the original problem.
    double budget = 0.0;
    if (opts.time_limit_s > 0.0) budget = std::max(1e-3, opts.time_limit_s - elapsed());
    const BackendRun feas = RunBackend(Lower(p, opts.lowering, 0.0), opts, budget);
    res.iterations += static_cast<int>(feas.info.iterations);
    if (feas.rc == 0) {
      res.backend_status += std::string("; feasibility re-solve: ") +
                            BackendStatusName(feas.info.status);
      if (MapStatus(feas.info.status) == SolveStatus::kInfeasible) {
        res.status = SolveStatus::kInfeasible;
      }
    }
  }
  if (res.status == SolveStatus::kOptimal) {
    if (!(res.residuals.Worst() <= opts.accept_residual)) {
      res.status = SolveStatus::kNumericalLimit;
      res.diagnostics += " (point fails the residual check)";
    } else if (p.index) {
      res.trajectory = p.index->Unpack(res.x);
    }
  }
  res.solve_seconds = elapsed();
  return res;
}

}  // namespace stochlift
