#include <benchmark/benchmark.h>

#include "stochlift/dynamics.hpp"
#include "stochlift/montecarlo.hpp"
#include "stochlift/program.hpp"
#include "stochlift/scenarios.hpp"

namespace {

using namespace stochlift;

Problem Funnel(int N) {
  ScenarioConfig cfg;
  cfg.geometry.type = "funnel";
  cfg.model.N = N;
  cfg.risk.eps_control = 0.1;
  return BuildProblem(cfg);
}

void BM_Compile(benchmark::State& state) {
  const Problem p = Funnel(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    ConicProgram prog = Compile(p.sys, p.cost, p.constraints);
    benchmark::DoNotOptimize(prog.num_vars);
  }
}
BENCHMARK(BM_Compile)->Arg(10)->Arg(25)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_SolveExact(benchmark::State& state) {
  const Problem p = Funnel(static_cast<int>(state.range(0)));
  const ConicProgram prog = Compile(p.sys, p.cost, p.constraints);
  for (auto _ : state) {
    SolveResult r = Solve(prog, p.solver);
    benchmark::DoNotOptimize(r.objective);
  }
}
BENCHMARK(BM_SolveExact)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Rollout(benchmark::State& state) {
  const Problem p = Funnel(20);
  const SolveResult r = Solve(Compile(p.sys, p.cost, p.constraints), p.solver);
  MCOptions mo;
  mo.count = state.range(0);
  for (auto _ : state) {
    MCReport rep = Rollout(p.sys, *r.trajectory, &p.cost, p.constraints, mo);
    benchmark::DoNotOptimize(rep.cost_mean);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Rollout)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ForwardPropagate(benchmark::State& state) {
  const Problem p = Funnel(50);
  std::vector<Eigen::VectorXd> mu_u(50, Eigen::VectorXd::Zero(2));
  std::vector<Eigen::MatrixXd> V_u;
  for (int k = 0; k < 50; ++k) V_u.push_back(Eigen::MatrixXd::Zero(2, BasisDim(p.sys, k)));
  for (auto _ : state) {
    LiftedTrajectory t = ForwardPropagate(p.sys, mu_u, V_u);
    benchmark::DoNotOptimize(t.V_x.back().data());
  }
}
BENCHMARK(BM_ForwardPropagate);

}  // namespace
BENCHMARK_MAIN();
