#include <gtest/gtest.h>

#include <sstream>

#include "stochlift/dynamics.hpp"
#include "stochlift/errors.hpp"
#include "stochlift/program.hpp"
#include "test_util.hpp"

namespace stochlift {
namespace {

const Eigen::MatrixXd kOne = Eigen::MatrixXd::Identity(1, 1);

CostSpec ScalarLq(const SystemDef& sys) {
  return CostSpec::Uniform(sys, Eigen::MatrixXd::Zero(1, 1), kOne, kOne, Eigen::VectorXd::Zero(1));
}

TEST(Compile, ZeroCostNoConstraints) {
  const SystemDef sys = testing::Scalar(1.0, 1.0, 0.5, 1, 0.0, 1.0);
  const ConicProgram p = Compile(sys, CostSpec::Zero(sys), {});
  EXPECT_TRUE(p.socs.empty());
  EXPECT_TRUE(p.psds.empty());
  EXPECT_FALSE(p.equalities.empty());
  std::vector<double> x(p.num_vars, 1.0);
  EXPECT_EQ(p.objective.Evaluate(x), 0.0);
}

TEST(Compile, QuadrotorScaleDecisionDimension) {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(8, 8);
  const SystemDef sys = SystemDef::Lti(A, Eigen::MatrixXd::Zero(8, 2), Eigen::MatrixXd::Zero(8, 2), 50,
                                       Eigen::VectorXd::Zero(8), Eigen::MatrixXd::Zero(8, 8));
  int expect = 0;
  for (int k = 0; k <= 50; ++k) expect += 8 * (1 + 8 + 2 * k);
  for (int k = 0; k < 50; ++k) expect += 2 * (1 + 8 + 2 * k);
  EXPECT_EQ(expect, 29872);
  EXPECT_EQ(DecisionIndex(sys).total(), expect);
}

TEST(Compile, TerminalCovAddsOneBlock) {
  std::mt19937_64 rng(31);
  const SystemDef sys = testing::RandomLtv(rng, 3, 2, 2, 4);
  const ConicProgram a = Compile(sys, CostSpec::Zero(sys), {});
  const ConicProgram b =
      Compile(sys, CostSpec::Zero(sys), {TerminalCovSpec{Eigen::MatrixXd::Identity(3, 3)}});
  ASSERT_EQ(b.psds.size(), a.psds.size() + 1);
  EXPECT_EQ(b.psds.back().side(), 3 + BasisDim(sys, 4));
}

TEST(Compile, ErrorsNameTheConstraint) {
  const SystemDef sys = testing::Scalar(1.0, 1.0, 0.5, 1, 0.0, 1.0);
  try {
    Compile(sys, CostSpec::Zero(sys),
            {StateLcc(sys, 0, kOne.col(0), 1.0, 0.05), StateLcc(sys, 1, kOne.col(0), 1.0, 0.7)});
    FAIL() << "expected UnsupportedError";
  } catch (const UnsupportedError& e) {
    EXPECT_NE(std::string(e.what()).find("constraint 1"), std::string::npos) << e.what();
  }
}

TEST(Index, DisjointAndExhaustive) {
  std::mt19937_64 rng(32);
  const SystemDef sys = testing::RandomLtv(rng, 3, 2, 2, 5);
  const DecisionIndex idx(sys);
  std::vector<int> hits(idx.total(), 0);
  for (int k = 0; k <= 5; ++k) {
    for (Range r : {idx.MuX(k), idx.VecVx(k)}) {
      for (int i = 0; i < r.size; ++i) ++hits[r.offset + i];
    }
    if (k < 5) {
      for (Range r : {idx.MuU(k), idx.VecVu(k)}) {
        for (int i = 0; i < r.size; ++i) ++hits[r.offset + i];
      }
    }
  }
  for (int h : hits) EXPECT_EQ(h, 1);
  std::vector<Eigen::VectorXd> mu_u;
  std::vector<Eigen::MatrixXd> V_u;
  testing::RandomControls(rng, sys, mu_u, V_u);
  const LiftedTrajectory t = ForwardPropagate(sys, mu_u, V_u);
  const LiftedTrajectory u = idx.Unpack(idx.Pack(t));
  for (int k = 0; k <= 5; ++k) EXPECT_EQ(u.V_x[k], t.V_x[k]);
}

TEST(Solve, ScalarLq) {
  const SystemDef sys = testing::Scalar(1.0, 1.0, 0.0, 1, 1.0, 0.0);
  const SolveResult r = Solve(Compile(sys, ScalarLq(sys), {}));
  ASSERT_EQ(r.status, SolveStatus::kOptimal) << r.backend_status;
  ASSERT_TRUE(r.trajectory);
  EXPECT_NEAR(r.trajectory->mu_u[0](0), -0.5, 1e-6);
  EXPECT_NEAR(r.objective, 0.5, 1e-6);
}

TEST(Solve, EpigraphLoweringAgrees) {
  const SystemDef sys = testing::Scalar(1.0, 1.0, 0.3, 3, 1.0, 0.1);
  const ConicProgram p = Compile(sys, ScalarLq(sys), {StateLcc(sys, 2, kOne.col(0), 0.2, 0.1)});
  SolveOptions o;
  const SolveResult a = Solve(p, o);
  o.lowering = ObjectiveLowering::kEpigraph;
  const SolveResult b = Solve(p, o);
  ASSERT_EQ(a.status, SolveStatus::kOptimal);
  ASSERT_EQ(b.status, SolveStatus::kOptimal);
  EXPECT_NEAR(a.objective, b.objective, 1e-6 * (1.0 + std::abs(a.objective)));
}

TEST(Solve, InfeasiblePair) {
  const SystemDef sys = testing::Scalar(1.0, 1.0, 0.0, 1, 0.0, 0.0);
  const SolveResult r = Solve(Compile(sys, ScalarLq(sys),
                                      {StateLcc(sys, 1, kOne.col(0), -1.0, 0.05),
                                       StateLcc(sys, 1, -kOne.col(0), -1.0, 0.05)}));
  EXPECT_EQ(r.status, SolveStatus::kInfeasible);
  EXPECT_FALSE(r.trajectory);
}

TEST(Solve, UnboundedLinearObjective) {
  ConicProgram p;
  p.num_vars = 1;
  p.objective.linear.Add(0, 1.0);
  const SolveResult r = Solve(p);
  EXPECT_EQ(r.status, SolveStatus::kUnbounded);
}

TEST(Solve, OptimalPointsMeetResidualContract) {
  std::mt19937_64 rng(33);
  const SystemDef sys = testing::RandomLtv(rng, 3, 2, 2, 5);
  const CostSpec c = CostSpec::Uniform(sys, Eigen::MatrixXd::Identity(3, 3),
                                       Eigen::MatrixXd::Identity(2, 2),
                                       10.0 * Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(1, 0, 0));
  const ConicProgram p =
      Compile(sys, c, {StateLcc(sys, 3, Eigen::Vector3d(1, 1, 0), 3.0, 0.05),
                       TerminalCovSpec{5.0 * Eigen::MatrixXd::Identity(3, 3)}});
  const SolveResult r = Solve(p);
  ASSERT_EQ(r.status, SolveStatus::kOptimal) << r.diagnostics;
  const Residuals res = Evaluate(p, r.x);
  EXPECT_LE(res.equality, 1e-6);
  EXPECT_LE(res.soc, 1e-6);
  EXPECT_LE(res.psd, 1e-6);
  // Replaying the extracted policy reproduces its states.
  EXPECT_LE(ReplayError(sys, *r.trajectory), 1e-6);
  // Identical programs solve identically.
  const SolveResult again = Solve(p);
  EXPECT_NEAR(again.objective, r.objective, 1e-7 * std::abs(r.objective));
}

TEST(RestrictOpenLoop, CovarianceFollowsOpenLoopRecursion) {
  std::mt19937_64 rng(34);
  const SystemDef sys = testing::RandomLtv(rng, 2, 1, 1, 4);
  const CostSpec c = CostSpec::Uniform(sys, Eigen::MatrixXd::Identity(2, 2), kOne,
                                       Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
  const ConicProgram p = Compile(sys, c, {});
  const SolveResult r = Solve(RestrictOpenLoop(p, *p.index));
  ASSERT_EQ(r.status, SolveStatus::kOptimal);
  Eigen::MatrixXd S = sys.Sigma0();
  for (int k = 0; k <= 4; ++k) {
    EXPECT_LE((r.trajectory->StateCovariance(k) - S).norm(), 1e-7 * (1.0 + S.norm()));
    if (k < 4) S = sys.A(k) * S * sys.A(k).transpose() + sys.D(k) * sys.D(k).transpose();
  }
  const SolveResult free = Solve(p);
  EXPECT_GE(r.objective, free.objective - 1e-6 * (1.0 + std::abs(free.objective)));
}

TEST(RestrictOpenLoop, TightTerminalCovarianceNeedsFeedback) {
  // x1 = x0 + u0 + 2 w0 with Sigma0 = 1: open loop gives Var(x1) = 5; feedback
  // on the initial-state column removes 1 of it, so Sigma_f = 4.5 separates.
  const SystemDef sys = testing::Scalar(1.0, 1.0, 2.0, 1, 0.0, 1.0);
  const ConicProgram p =
      Compile(sys, ScalarLq(sys), {TerminalCovSpec{Eigen::MatrixXd::Constant(1, 1, 4.5)}});
  EXPECT_EQ(Solve(p).status, SolveStatus::kOptimal);
  EXPECT_EQ(Solve(RestrictOpenLoop(p, *p.index)).status, SolveStatus::kInfeasible);
}

TEST(Monotonicity, AddingConstraintsNeverHelps) {
  std::mt19937_64 rng(35);
  for (int t = 0; t < 5; ++t) {
    const SystemDef sys = testing::RandomLtv(rng, 2, 1, 1, 4);
    const CostSpec c = CostSpec::Uniform(sys, Eigen::MatrixXd::Identity(2, 2), kOne,
                                         5.0 * Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1.0, -1.0));
    std::vector<ConstraintSpec> cons;
    double prev = Solve(Compile(sys, c, cons)).objective;
    for (int k = 1; k <= 4; ++k) {
      cons.push_back(StateLcc(sys, k, Eigen::Vector2d(1.0, 0.0), 0.5, 0.1));
      const SolveResult r = Solve(Compile(sys, c, cons));
      if (r.status != SolveStatus::kOptimal) break;
      EXPECT_GE(r.objective, prev - 1e-6 * (1.0 + std::abs(prev)));
      prev = r.objective;
    }
  }
}

TEST(CheckWellFormed, RejectsOutOfRangeVariables) {
  ConicProgram p;
  p.num_vars = 2;
  AffineExpr e;
  e.Add(2, 1.0);
  p.equalities.push_back(e);
  EXPECT_THROW(p.CheckWellFormed(), IndexError);
  EXPECT_THROW(Solve(p), IndexError);
}

TEST(DumpProgram, Sections) {
  const SystemDef sys = testing::Scalar(1.0, 1.0, 0.5, 1, 0.0, 1.0);
  const ConicProgram p = Compile(sys, ScalarLq(sys),
                                 {StateLcc(sys, 1, kOne.col(0), 1.0, 0.05),
                                  TerminalCovSpec{Eigen::MatrixXd::Constant(1, 1, 2.0)}});
  std::ostringstream out;
  DumpProgram(p, out);
  const std::string s = out.str();
  for (const char* sec : {"VARS ", "OBJ ", "EQ ", "SOC 1", "PSD 1"}) {
    EXPECT_NE(s.find(sec), std::string::npos) << sec;
  }
  EXPECT_EQ(s.rfind("VARS " + std::to_string(p.num_vars), 0), 0u);
}

}  // namespace
}  // namespace stochlift
