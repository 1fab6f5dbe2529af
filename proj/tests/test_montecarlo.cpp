#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "stochlift/dynamics.hpp"
#include "stochlift/errors.hpp"
#include "stochlift/montecarlo.hpp"
#include "stochlift/program.hpp"
#include "stochlift/special.hpp"
#include "test_util.hpp"

namespace stochlift {
namespace {

const Eigen::MatrixXd kOne = Eigen::MatrixXd::Identity(1, 1);

TEST(GaussianAt, PureAndStandard) {
  EXPECT_EQ(GaussianAt(3, 17, 2), GaussianAt(3, 17, 2));
  EXPECT_NE(GaussianAt(3, 17, 2), GaussianAt(4, 17, 2));
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = GaussianAt(9, i, 0);
    s += g;
    s2 += g * g;
  }
  EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(BinomialStderr, Formula) {
  EXPECT_DOUBLE_EQ(BinomialStderr(0.95, 100000), std::sqrt(0.95 * 0.05 / 100000));
  EXPECT_EQ(BinomialStderr(1.0, 10), 0.0);
}

TEST(Rollout, NoNoiseIsDeterministic) {
  const SystemDef sys = testing::Scalar(1.0, 1.0, 0.0, 2, 1.0, 0.0);
  const LiftedTrajectory t = ForwardPropagate(
      sys, {Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, -0.25)},
      {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 2)});
  const CostSpec c = CostSpec::Uniform(sys, kOne, kOne, kOne, Eigen::VectorXd::Zero(1));
  MCOptions o;
  o.count = 1000;
  const MCReport r = Rollout(sys, t, &c, {StateLcc(sys, 2, kOne.col(0), 1.25, 0.05)}, o);
  EXPECT_EQ(r.samples, 1000);
  EXPECT_EQ(r.constraints[0].rate, 1.0);
  EXPECT_EQ(r.constraints[0].std_error, 0.0);
  EXPECT_NEAR(r.terminal_mean(0), 1.25, 1e-15);
  EXPECT_EQ(r.terminal_covariance(0, 0), 0.0);
  EXPECT_NEAR(r.cost_mean, ExpectedCost(sys, c, t), 1e-12);
  EXPECT_NEAR(r.cost_stderr, 0.0, 1e-12);
}

TEST(Rollout, ActiveLccHitsItsRiskLevel) {
  const SystemDef sys = testing::Scalar(1.0, 1.0, 1.0, 1, 0.0, 0.0);
  const CostSpec c = CostSpec::Uniform(sys, Eigen::MatrixXd::Zero(1, 1), kOne, Eigen::MatrixXd::Zero(1, 1),
                                       Eigen::VectorXd::Zero(1));
  // Pushing the mean up against the bound with a linear reward makes the LCC active.
  const std::vector<ConstraintSpec> cons = {StateLcc(sys, 1, kOne.col(0), 1.0, 0.05)};
  ConicProgram p = Compile(sys, c, cons);
  p.objective.linear.Add(p.index->MuX(1).offset, -1.0);
  const SolveResult s = Solve(p);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.trajectory->mu_x[1](0), 1.0 - InvNormCdf(0.95), 1e-6);
  MCOptions o;
  o.count = 100000;
  const MCReport r = Rollout(sys, *s.trajectory, nullptr, cons, o);
  EXPECT_NEAR(r.constraints[0].rate, 0.95, 3.0 * std::sqrt(0.95 * 0.05 / 1e5));
  EXPECT_FALSE(r.has_cost);
}

TEST(Rollout, TerminalCovarianceMatchesLifted) {
  std::mt19937_64 rng(51);
  const SystemDef sys = testing::RandomLtv(rng, 3, 2, 2, 4);
  std::vector<Eigen::VectorXd> mu_u;
  std::vector<Eigen::MatrixXd> V_u;
  testing::RandomControls(rng, sys, mu_u, V_u);
  const LiftedTrajectory t = ForwardPropagate(sys, mu_u, V_u);
  MCOptions o;
  o.count = 200000;
  o.per_step_covariance = true;
  const MCReport r = Rollout(sys, t, nullptr, {}, o);
  const Eigen::MatrixXd S = t.StateCovariance(4);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double se = std::sqrt((S(i, i) * S(j, j) + S(i, j) * S(i, j)) / o.count);
      EXPECT_NEAR(r.terminal_covariance(i, j), S(i, j), 5.0 * se);
    }
  }
  ASSERT_EQ(r.step_covariance.size(), 5u);
  EXPECT_LE((r.step_covariance[4] - r.terminal_covariance).norm(), 1e-12);
}

TEST(Rollout, DeterministicAcrossSeedsAndThreads) {
  std::mt19937_64 rng(52);
  const SystemDef sys = testing::RandomLtv(rng, 2, 1, 1, 3);
  std::vector<Eigen::VectorXd> mu_u;
  std::vector<Eigen::MatrixXd> V_u;
  testing::RandomControls(rng, sys, mu_u, V_u);
  const LiftedTrajectory t = ForwardPropagate(sys, mu_u, V_u);
  const CostSpec c = CostSpec::Uniform(sys, Eigen::MatrixXd::Identity(2, 2), kOne,
                                       Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
  const std::vector<ConstraintSpec> cons = {StateLcc(sys, 3, Eigen::Vector2d(1, 0), 0.5, 0.1)};
  MCOptions o;
  o.count = 20000;
  o.seed = 7;
  const MCReport a = Rollout(sys, t, &c, cons, o);
  o.threads = 4;
  const MCReport b = Rollout(sys, t, &c, cons, o);
  EXPECT_EQ(ToJson(a), ToJson(b));
  o.seed = 8;
  EXPECT_NE(ToJson(a), ToJson(Rollout(sys, t, &c, cons, o)));
  // The cost estimate agrees with the analytic expectation.
  EXPECT_NEAR(a.cost_mean, ExpectedCost(sys, c, t), 4.0 * a.cost_stderr);
}

TEST(Rollout, RejectsInconsistentTrajectoryAndBadCount) {
  std::mt19937_64 rng(53);
  const SystemDef sys = testing::RandomLtv(rng, 2, 1, 1, 3);
  std::vector<Eigen::VectorXd> mu_u;
  std::vector<Eigen::MatrixXd> V_u;
  testing::RandomControls(rng, sys, mu_u, V_u);
  LiftedTrajectory t = ForwardPropagate(sys, mu_u, V_u);
  MCOptions o;
  o.count = 0;
  EXPECT_THROW(Rollout(sys, t, nullptr, {}, o), DomainError);
  o.count = 10;
  t.V_u[1](0, 0) += 1e-3;
  EXPECT_THROW(Rollout(sys, t, nullptr, {}, o), InconsistencyError);
}

TEST(Rollout, JsonFields) {
  const SystemDef sys = testing::Scalar(1.0, 1.0, 0.5, 1, 0.0, 0.0);
  const LiftedTrajectory t =
      ForwardPropagate(sys, {Eigen::VectorXd::Zero(1)}, {Eigen::MatrixXd::Zero(1, 1)});
  MCOptions o;
  o.count = 100;
  const MCReport r = Rollout(sys, t, nullptr,
                             {StateLcc(sys, 1, kOne.col(0), 1.0, 0.05),
                              TerminalCovSpec{Eigen::MatrixXd::Constant(1, 1, 1.0)}},
                             o);
  const auto j = nlohmann::json::parse(ToJson(r));
  EXPECT_EQ(j["samples"], 100);
  EXPECT_TRUE(j["cost_mean"].is_null());
  ASSERT_EQ(j["constraints"].size(), 2u);
  EXPECT_EQ(j["constraints"][0]["kind"], "lcc");
  EXPECT_TRUE(j["constraints"][0].contains("rate"));
  EXPECT_EQ(j["constraints"][1]["kind"], "terminal_cov");
  EXPECT_FALSE(j["constraints"][1].contains("rate"));
  EXPECT_DOUBLE_EQ(r.MinRate(), r.constraints[0].rate);
}

TEST(CovarianceOracle, Examples) {
  const SystemDef sys = testing::Scalar(2.0, 1.0, 1.0, 2, 0.0, 1.0);
  const LiftedTrajectory t = ForwardPropagate(sys, {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)},
                                              {Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 2)});
  const auto S = CovarianceOracle(sys, t);
  ASSERT_EQ(S.size(), 3u);
  EXPECT_NEAR(S[0](0, 0), 1.0, 1e-15);
  EXPECT_NEAR(S[1](0, 0), 5.0, 1e-14);
  EXPECT_NEAR(S[2](0, 0), 21.0, 1e-13);
  // With feedback the open-loop check does not apply.
  LiftedTrajectory fb =
      ForwardPropagate(sys, {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)},
                       {Eigen::MatrixXd::Constant(1, 1, -2.0), Eigen::MatrixXd::Zero(1, 2)});
  EXPECT_NEAR(CovarianceOracle(sys, fb)[1](0, 0), 1.0, 1e-14);
  // A corrupted open-loop basis is caught.
  t.CheckShapes(sys);
  LiftedTrajectory bad = t;
  bad.V_x[2](0, 0) *= 1.1;
  EXPECT_THROW(CovarianceOracle(sys, bad), InconsistencyError);
}

TEST(QccEmpirical, Examples) {
  const Eigen::MatrixXd L = Eigen::MatrixXd::Identity(1, 1);
  EXPECT_EQ(QccEmpirical(L, Eigen::MatrixXd::Zero(1, 3), 0, 1000), 1.0);
  // ||xi||^2 <= 1 for a scalar: 2 Phi(1) - 1.
  const double p = 1.0 - 2.0 * NormCdf(-1.0);
  EXPECT_NEAR(QccEmpirical(L, Eigen::MatrixXd::Identity(1, 1), 1, 200000), p,
              4.0 * std::sqrt(p * (1 - p) / 200000));
  // Chi-square with 2 degrees of freedom: 1 - exp(-1/2) after scaling by L = 1.
  const double q = 1.0 - std::exp(-0.5);
  EXPECT_NEAR(QccEmpirical(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2), 2, 200000), q,
              4.0 * std::sqrt(q * (1 - q) / 200000));
  EXPECT_THROW(QccEmpirical(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(1, 1), 0, 10),
               ShapeError);
  EXPECT_THROW(QccEmpirical(L, L, 0, 0), DomainError);
}

}  // namespace
}  // namespace stochlift
