// stochlift: plan, verify, sweep and compare over scenario files.
//
// Exit codes: 0 optimal (or all checks passed), 2 infeasible, 1 anything else.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "stochlift/errors.hpp"
#include "stochlift/io.hpp"
#include "stochlift/montecarlo.hpp"
#include "stochlift/scenarios.hpp"

namespace {

using nlohmann::json;
using namespace stochlift;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

std::vector<Method> ParseMethods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(ParseMethod(item));
  }
  if (out.empty()) throw ConfigError("--methods: empty list");
  return out;
}

json Nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct Common {
  std::optional<double> tol;
  std::string qcc;
};

ScenarioConfig ApplyFlags(ScenarioConfig cfg, const Common& c) {
  if (c.tol) {
    if (!(*c.tol > 0.0)) throw ConfigError("--tol: must be positive");
    cfg.solver.tolerance = *c.tol;
  }
  if (!c.qcc.empty()) {
    cfg.qcc.enabled = true;
    cfg.qcc.mode = ParseQccMode(c.qcc);
  }
  cfg.Validate();
  return cfg;
}

int ExitFor(SolveStatus s) {
  if (s == SolveStatus::kOptimal) return kExitOk;
  if (s == SolveStatus::kInfeasible) return kExitInfeasible;
  return kExitError;
}

int Plan(const std::string& scenario, const std::string& method, const Common& common,
         const std::string& out, const std::string& dump_path) {
  const ScenarioConfig cfg = ApplyFlags(LoadScenario(scenario), common);
  const Method m = ParseMethod(method);
  if (m != Method::kExact && m != Method::kBaseline && m != Method::kOpenLoop) {
    throw ConfigError("--method: expected exact, baseline or openloop (use --qcc for QCC modes)");
  }
  const Problem prob = BuildProblem(cfg);
  std::ostringstream dump;
  const SolveResult r = SolveProblem(prob, m, dump_path.empty() ? nullptr : &dump);
  if (!dump_path.empty()) WriteFile(dump_path, dump.str());

  json summary;
  summary["scenario"] = cfg.name;
  summary["method"] = ToString(m);
  summary["status"] = ToString(r.status);
  summary["objective"] = r.status == SolveStatus::kOptimal ? json(r.objective) : json(nullptr);
  summary["iterations"] = r.iterations;
  summary["solve_seconds"] = r.solve_seconds;
  summary["backend_status"] = r.backend_status;
  summary["diagnostics"] = r.diagnostics;
  summary["residuals"] = {{"equality", r.residuals.equality},
                          {"soc", r.residuals.soc},
                          {"psd", r.residuals.psd}};
  summary["trajectory"] = nullptr;
  if (r.status == SolveStatus::kOptimal && r.trajectory) {
    WriteFile(out, TrajectoryToJson(*r.trajectory));
    summary["trajectory"] = out;
  }
  std::cout << summary.dump(2) << "\n";
  return ExitFor(r.status);
}

int Verify(const std::string& traj_path, const std::string& scenario, const Common& common,
           int64_t samples, uint64_t seed, int threads) {
  if (samples <= 0) throw DomainError("sample count must be positive");
  const ScenarioConfig cfg = ApplyFlags(LoadScenario(scenario), common);
  const Problem prob = BuildProblem(cfg);
  const LiftedTrajectory traj = TrajectoryFromJson(ReadFile(traj_path));
  traj.CheckShapes(prob.sys);
  MCOptions mo;
  mo.seed = seed;
  mo.count = samples;
  mo.threads = threads;
  const MCReport rep = Rollout(prob.sys, traj, &prob.cost, prob.constraints, mo);
  const double objective = ExpectedCost(prob.sys, prob.cost, traj);
  const double slack = std::max(3.0 * rep.cost_stderr, 1e-9 * (1.0 + std::abs(objective)));
  const bool cost_ok = std::abs(rep.cost_mean - objective) <= slack;
  bool all_ok = cost_ok;
  for (const ConstraintRate& c : rep.constraints) all_ok = all_ok && c.Passes();

  json doc = json::parse(ToJson(rep));
  doc["objective"] = objective;
  doc["cost_within_3se"] = cost_ok;
  doc["pass"] = all_ok;
  std::cout << doc.dump(2) << "\n";
  return all_ok ? kExitOk : kExitError;
}

int Sweep(const std::string& path, const std::string& out, const std::string& methods,
          std::optional<int64_t> samples, std::optional<uint64_t> seed) {
  const std::string dir = std::filesystem::path(path).parent_path().string();
  SweepSpec spec = ParseSweep(ReadFile(path), dir.empty() ? "." : dir);
  if (!methods.empty()) spec.methods = ParseMethods(methods);
  if (samples) {
    if (*samples < 0) throw DomainError("sample count must be non-negative");
    spec.mc_samples = *samples;
  }
  if (seed) spec.seed = *seed;
  const std::vector<SweepRow> rows = RunSweep(spec);
  if (out.empty()) {
    WriteSweepCsv(rows, std::cout);
  } else {
    std::ostringstream ss;
    WriteSweepCsv(rows, ss);
    WriteFile(out, ss.str());
  }
  for (const SweepRow& r : rows) {
    if (r.status == "ERROR") std::cerr << "cell error (" << ToString(r.method) << "): " << r.message << "\n";
  }
  return kExitOk;
}

int Compare(const std::string& scenario, const std::string& methods, const Common& common,
            int64_t samples, uint64_t seed) {
  const ScenarioConfig cfg = ApplyFlags(LoadScenario(scenario), common);
  SweepSpec spec;
  SweepCell cell;
  cell.config = cfg;
  cell.sigma1 = cfg.model.sigma1;
  cell.sigma2 = cfg.model.sigma2;
  const bool circle = cfg.geometry.type == "circle";
  cell.param1 = circle ? cfg.geometry.r_wp : cfg.geometry.h_entry;
  cell.param2 = circle ? 0.0 : cfg.geometry.h_exit;
  spec.cells.push_back(cell);
  spec.methods = ParseMethods(methods);
  if (samples < 0) throw DomainError("sample count must be non-negative");
  spec.mc_samples = samples;
  spec.seed = seed;
  json doc = json::array();
  for (const SweepRow& r : RunSweep(spec)) {
    doc.push_back({{"method", ToString(r.method)},
                   {"status", r.status},
                   {"objective", r.status == "OPTIMAL" ? json(r.objective) : json(nullptr)},
                   {"solve_ms", r.solve_ms},
                   {"mc_rate_min", Nullable(r.mc_rate_min)},
                   {"cost_reduction", Nullable(r.cost_reduction)},
                   {"message", r.message}});
  }
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chance-constrained trajectory planning over lifted affine policies"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--tol", common.tol, "Solver tolerance");
    sub->add_option("--qcc", common.qcc, "Enable the QCC in this mode")
        ->check(CLI::IsMember({"lmi", "quadratic", "markov"}));
  };

  std::string scenario, traj_path, sweep_path, out, sweep_out, sweep_methods, dump_path, method = "exact";
  std::string compare_methods;
  int64_t samples = 100000, compare_samples = 0;
  uint64_t seed = 0, compare_seed = 0;
  int threads = 1;
  std::optional<int64_t> sweep_samples;
  std::optional<uint64_t> sweep_seed;

  CLI::App* plan = app.add_subcommand("plan", "Solve a scenario and write the trajectory");
  plan->add_option("scenario", scenario, "Scenario JSON")->required();
  plan->add_option("--method", method, "exact, baseline or openloop");
  plan->add_option("--out", out, "Trajectory output path")->default_val("trajectory.json");
  plan->add_option("--dump-program", dump_path, "Write the compiled conic program here");
  add_common(plan);

  CLI::App* verify = app.add_subcommand("verify", "Monte-Carlo check of a trajectory");
  verify->add_option("trajectory", traj_path, "Trajectory JSON")->required();
  verify->add_option("scenario", scenario, "Scenario JSON")->required();
  verify->add_option("--samples", samples, "Rollout count")->default_val(100000);
  verify->add_option("--seed", seed, "Random seed")->default_val(0);
  verify->add_option("--threads", threads, "Worker threads")->default_val(1);
  add_common(verify);

  CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter grid and write CSV");
  sweep->add_option("grid", sweep_path, "Sweep JSON")->required();
  sweep->add_option("--out", sweep_out, "CSV output path (stdout when omitted)");
  sweep->add_option("--methods", sweep_methods, "Comma-separated methods, overriding the grid");
  sweep->add_option("--samples", sweep_samples, "Monte-Carlo samples per optimal cell");
  sweep->add_option("--seed", sweep_seed, "Random seed");

  CLI::App* compare = app.add_subcommand("compare", "Solve one scenario with several methods");
  compare->add_option("scenario", scenario, "Scenario JSON")->required();
  compare->add_option("--methods", compare_methods, "Comma-separated methods")
      ->default_val("exact,baseline,openloop");
  compare->add_option("--samples", compare_samples, "Monte-Carlo samples per optimal method")
      ->default_val(0);
  compare->add_option("--seed", compare_seed, "Random seed")->default_val(0);
  add_common(compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (plan->parsed()) return Plan(scenario, method, common, out, dump_path);
    if (verify->parsed()) return Verify(traj_path, scenario, common, samples, seed, threads);
    if (sweep->parsed()) return Sweep(sweep_path, sweep_out, sweep_methods, sweep_samples, sweep_seed);
    if (compare->parsed()) return Compare(scenario, compare_methods, common, compare_samples, compare_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
