#include "stochlift/scenarios.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "stochlift/errors.hpp"
#include "stochlift/montecarlo.hpp"

namespace stochlift {

namespace {

using nlohmann::json;

// Typed, path-aware access to one JSON object. Unknown keys are reported by
// Finish().
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Fail(path_, "expected an object");
  }

  bool Has(const std::string& key) const { return j_.contains(key); }

  double Number(const std::string& key, double def) {
    if (!Use(key)) return def;
    return AsNumber(j_.at(key), Path(key));
  }
  int Int(const std::string& key, int def) {
    if (!Use(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) Fail(Path(key), "expected an integer");
    return v.get<int>();
  }
  int64_t Int64(const std::string& key, int64_t def) {
    if (!Use(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) Fail(Path(key), "expected an integer");
    return v.get<int64_t>();
  }
  bool Bool(const std::string& key, bool def) {
    if (!Use(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) Fail(Path(key), "expected true or false");
    return v.get<bool>();
  }
  std::string String(const std::string& key, const std::string& def) {
    if (!Use(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_string()) Fail(Path(key), "expected a string");
    return v.get<std::string>();
  }
  std::optional<Eigen::VectorXd> Vector(const std::string& key) {
    if (!Use(key)) return std::nullopt;
    return AsVector(j_.at(key), Path(key));
  }
  std::optional<Eigen::MatrixXd> Matrix(const std::string& key) {
    if (!Use(key)) return std::nullopt;
    return AsMatrix(j_.at(key), Path(key));
  }
  std::optional<Reader> Child(const std::string& key) {
    if (!Use(key)) return std::nullopt;
    return Reader(j_.at(key), Path(key));
  }
  const json& Raw(const std::string& key) {
    Use(key);
    return j_.at(key);
  }
  std::string Path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void Finish() const {
    for (const auto& [k, v] : j_.items()) {
      (void)v;
      if (!used_.count(k)) Fail(Path(k), "unknown key");
    }
  }

  [[noreturn]] static void Fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
  }

  static double AsNumber(const json& v, const std::string& path) {
    if (!v.is_number()) Fail(path, "expected a number");
    return v.get<double>();
  }
  static Eigen::VectorXd AsVector(const json& v, const std::string& path) {
    if (!v.is_array()) Fail(path, "expected an array of numbers");
    Eigen::VectorXd out(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
      out(i) = AsNumber(v[i], path + "[" + std::to_string(i) + "]");
    }
    return out;
  }
  // Nested row arrays, or {"diag": [...], "kron_eye": m, "scale": s}.
  static Eigen::MatrixXd AsMatrix(const json& v, const std::string& path) {
    if (v.is_object()) {
      Reader r(v, path);
      const auto d = r.Vector("diag");
      if (!d) Fail(path, "matrix object needs a 'diag' array");
      const int m = r.Int("kron_eye", 1);
      const double s = r.Number("scale", 1.0);
      r.Finish();
      if (m < 1) Fail(path + ".kron_eye", "must be positive");
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d->size() * m, d->size() * m);
      for (Eigen::Index i = 0; i < d->size(); ++i) {
        for (int c = 0; c < m; ++c) M(i * m + c, i * m + c) = s * (*d)(i);
      }
      return M;
    }
    if (!v.is_array() || v.empty()) Fail(path, "expected a non-empty array of rows");
    const size_t cols = v[0].is_array() ? v[0].size() : 0;
    Eigen::MatrixXd M(v.size(), cols);
    for (size_t i = 0; i < v.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (!v[i].is_array() || v[i].size() != cols) Fail(p, "rows must be arrays of equal length");
      for (size_t j = 0; j < cols; ++j) M(i, j) = AsNumber(v[i][j], p);
    }
    return M;
  }

 private:
  bool Use(const std::string& key) {
    if (!j_.contains(key) || j_.at(key).is_null()) {
      used_.insert(key);
      return false;
    }
    used_.insert(key);
    return true;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

json ParseDocument(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ScenarioConfig FromJson(const json& doc) {
  ScenarioConfig cfg;
  Reader top(doc, "");
  cfg.name = top.String("name", cfg.name);
  if (auto m = top.Child("model")) {
    ModelConfig& mc = cfg.model;
    mc.type = m->String("type", mc.type);
    mc.T = m->Number("T", mc.T);
    mc.sigma1 = m->Number("sigma1", mc.sigma1);
    mc.sigma2 = m->Number("sigma2", mc.sigma2);
    mc.N = m->Int("N", mc.N);
    mc.sigma0_scale = m->Number("sigma0_scale", mc.sigma0_scale);
    if (auto A = m->Matrix("A")) mc.A = *A;
    if (auto B = m->Matrix("B")) mc.B = *B;
    if (auto D = m->Matrix("D")) mc.D = *D;
    mc.mu0 = m->Vector("mu0");
    mc.Sigma0 = m->Matrix("Sigma0");
    m->Finish();
  }
  if (auto g = top.Child("geometry")) {
    GeometryConfig& gc = cfg.geometry;
    gc.type = g->String("type", gc.type);
    gc.R = g->Number("R", gc.R);
    gc.M = g->Int("M", gc.M);
    gc.r_wp = g->Number("r_wp", gc.r_wp);
    gc.x_min = g->Number("x_min", gc.x_min);
    gc.x_max = g->Number("x_max", gc.x_max);
    gc.h_entry = g->Number("h_entry", gc.h_entry);
    gc.h_exit = g->Number("h_exit", gc.h_exit);
    if (g->Has("half_planes")) {
      const std::string base = g->Path("half_planes");
      const json& arr = g->Raw("half_planes");
      if (!arr.is_array()) Reader::Fail(base, "expected an array");
      for (size_t i = 0; i < arr.size(); ++i) {
        Reader h(arr[i], base + "[" + std::to_string(i) + "]");
        StateHalfPlane hp;
        hp.step = h.Int("step", -1);
        const auto a = h.Vector("a");
        if (!a) Reader::Fail(h.Path("a"), "required");
        hp.a = *a;
        if (!h.Has("b")) Reader::Fail(h.Path("b"), "required");
        hp.b = h.Number("b", 0.0);
        if (h.Has("eps")) hp.eps = h.Number("eps", 0.0);
        h.Finish();
        gc.half_planes.push_back(std::move(hp));
      }
    }
    if (g->Has("mixed_lccs")) {
      const std::string base = g->Path("mixed_lccs");
      const json& arr = g->Raw("mixed_lccs");
      if (!arr.is_array()) Reader::Fail(base, "expected an array");
      for (size_t i = 0; i < arr.size(); ++i) {
        Reader h(arr[i], base + "[" + std::to_string(i) + "]");
        MixedLccConfig mc;
        if (!h.Has("terms")) Reader::Fail(h.Path("terms"), "required");
        const json& terms = h.Raw("terms");
        const std::string tp = h.Path("terms");
        if (!terms.is_array()) Reader::Fail(tp, "expected an array");
        for (size_t t = 0; t < terms.size(); ++t) {
          Reader tr(terms[t], tp + "[" + std::to_string(t) + "]");
          LccTerm term;
          if (!tr.Has("step")) Reader::Fail(tr.Path("step"), "required");
          term.step = tr.Int("step", 0);
          if (auto a = tr.Vector("a")) term.a = *a;
          if (auto al = tr.Vector("alpha")) term.alpha = *al;
          tr.Finish();
          mc.terms.push_back(std::move(term));
        }
        if (!h.Has("b")) Reader::Fail(h.Path("b"), "required");
        mc.b = h.Number("b", 0.0);
        if (h.Has("eps")) mc.eps = h.Number("eps", 0.0);
        h.Finish();
        gc.mixed_lccs.push_back(std::move(mc));
      }
    }
    g->Finish();
  }
  if (auto r = top.Child("risk")) {
    RiskConfig& rc = cfg.risk;
    rc.eps_state = r->Number("eps_state", rc.eps_state);
    rc.eps_control = r->Number("eps_control", rc.eps_control);
    rc.u_max = r->Number("u_max", rc.u_max);
    rc.control_box = r->Bool("control_box", rc.control_box);
    rc.terminal_cov = r->Matrix("terminal_cov");
    r->Finish();
  }
  if (auto c = top.Child("cost")) {
    CostConfig& cc = cfg.cost;
    cc.preset = c->String("preset", cc.preset);
    cc.Q = c->Matrix("Q");
    cc.R = c->Matrix("R");
    cc.Q_N = c->Matrix("Q_N");
    cc.x_star = c->Vector("x_star");
    c->Finish();
  }
  if (auto w = top.Child("waypoints")) {
    WaypointConfig& wc = cfg.waypoints;
    wc.defaults = w->Bool("defaults", wc.defaults);
    wc.weight = w->Number("weight", wc.weight);
    if (w->Has("points")) {
      const std::string base = w->Path("points");
      const json& arr = w->Raw("points");
      if (!arr.is_array()) Reader::Fail(base, "expected an array");
      for (size_t i = 0; i < arr.size(); ++i) {
        Reader p(arr[i], base + "[" + std::to_string(i) + "]");
        Waypoint wp;
        if (!p.Has("step")) Reader::Fail(p.Path("step"), "required");
        wp.step = p.Int("step", 0);
        const auto mu = p.Vector("mu_star");
        const auto Q = p.Matrix("Q_star");
        if (!mu) Reader::Fail(p.Path("mu_star"), "required");
        if (!Q) Reader::Fail(p.Path("Q_star"), "required");
        wp.mu_star = *mu;
        wp.Q_star = *Q;
        p.Finish();
        wc.points.push_back(std::move(wp));
      }
    }
    w->Finish();
  }
  if (auto q = top.Child("qcc")) {
    QccConfig& qc = cfg.qcc;
    qc.enabled = q->Bool("enabled", true);
    if (q->Has("mode")) {
      const std::string path = q->Path("mode");
      try {
        qc.mode = ParseQccMode(q->String("mode", "lmi"));
      } catch (const ConfigError& e) {
        Reader::Fail(path, e.what());
      }
    }
    qc.eps = q->Number("eps", qc.eps);
    qc.step = q->Int("step", qc.step);
    qc.Q_cc = q->Matrix("Q_cc");
    q->Finish();
  }
  if (auto s = top.Child("solver")) {
    SolveOptions& so = cfg.solver;
    so.tolerance = s->Number("tolerance", so.tolerance);
    so.max_iters = s->Int("max_iters", so.max_iters);
    so.verbose = s->Bool("verbose", so.verbose);
    so.time_limit_s = s->Number("time_limit_s", so.time_limit_s);
    so.accept_residual = s->Number("accept_residual", so.accept_residual);
    so.objective_scale = s->Number("objective_scale", so.objective_scale);
    so.certify_infeasibility = s->Bool("certify_infeasibility", so.certify_infeasibility);
    const std::string low = s->String("lowering", "native");
    if (low == "native") {
      so.lowering = ObjectiveLowering::kNative;
    } else if (low == "epigraph") {
      so.lowering = ObjectiveLowering::kEpigraph;
    } else {
      Reader::Fail(s->Path("lowering"), "expected 'native' or 'epigraph'");
    }
    s->Finish();
  }
  top.Finish();
  cfg.Validate();
  return cfg;
}

Eigen::MatrixXd KronEye2(std::initializer_list<double> d) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * d.size(), 2 * d.size());
  int i = 0;
  for (double v : d) {
    M(2 * i, 2 * i) = v;
    M(2 * i + 1, 2 * i + 1) = v;
    ++i;
  }
  return M;
}

std::string CostPreset(const ScenarioConfig& cfg) {
  if (!cfg.cost.preset.empty()) return cfg.cost.preset;
  const std::string& g = cfg.geometry.type;
  if (g == "circle") return "circle";
  if (g == "funnel" || g == "none") return "funnel";
  return "custom";
}

SystemDef BuildSystem(const ModelConfig& m) {
  if (m.type == "quadrotor_zoh") {
    SystemDef base = QuadrotorZoh(m.T, m.sigma1, m.sigma2, m.N, m.sigma0_scale);
    if (!m.mu0 && !m.Sigma0) return base;
    return SystemDef::Lti(base.A(0), base.B(0), base.D(0), m.N, m.mu0.value_or(base.mu0()),
                          m.Sigma0.value_or(base.Sigma0()));
  }
  const int nx = static_cast<int>(m.A.rows());
  return SystemDef::Lti(m.A, m.B, m.D, m.N, m.mu0.value_or(Eigen::VectorXd::Zero(nx)),
                        m.Sigma0.value_or(Eigen::MatrixXd::Zero(nx, nx)));
}

CostSpec BuildCost(const ScenarioConfig& cfg, const SystemDef& sys) {
  const std::string preset = CostPreset(cfg);
  const int nx = sys.nx();
  Eigen::MatrixXd Q, R, QN;
  Eigen::VectorXd xs = Eigen::VectorXd::Zero(nx);
  if (preset == "circle" || preset == "funnel") {
    if (nx != 8 || sys.nu() != 2) {
      throw ConfigError("cost.preset: '" + preset + "' needs the 8-state quadrotor model");
    }
    R = Eigen::MatrixXd::Identity(2, 2);
    if (preset == "circle") {
      Q = KronEye2({1.0, 0.1, 0.01, 1e-3});
      QN = 1e6 * KronEye2({50.0, 2.0, 0.5, 0.1});
    } else {
      Q = 0.05 * KronEye2({0.0, 1.0, 0.1, 0.01});
      QN = 1e6 * KronEye2({80.0, 3.0, 0.5, 0.1});
      xs(0) = 2.2;
    }
  } else if (preset == "custom") {
    if (!cfg.cost.Q || !cfg.cost.R || !cfg.cost.Q_N) {
      throw ConfigError("cost: custom weights need Q, R and Q_N");
    }
  } else {
    throw ConfigError("cost.preset: unknown preset '" + preset + "'");
  }
  if (cfg.cost.Q) Q = *cfg.cost.Q;
  if (cfg.cost.R) R = *cfg.cost.R;
  if (cfg.cost.Q_N) QN = *cfg.cost.Q_N;
  if (cfg.cost.x_star) xs = *cfg.cost.x_star;
  CostSpec cost = CostSpec::Uniform(sys, Q, R, QN, xs);

  const int N = sys.horizon();
  const std::string& g = cfg.geometry.type;
  if (cfg.waypoints.defaults && (g == "circle" || g == "funnel" || g == "none")) {
    const Eigen::MatrixXd Qs = cfg.waypoints.weight * KronEye2({1.0, 0.0, 0.0, 0.0});
    if (g == "circle") {
      for (int i = 0; i < 4; ++i) {
        const double th = 0.5 * std::numbers::pi * i;
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(nx);
        mu(0) = cfg.geometry.r_wp * std::cos(th);
        mu(1) = cfg.geometry.r_wp * std::sin(th);
        cost.waypoints.push_back({(i + 1) * (N / 5), mu, Qs});
      }
    } else {
      const double x0 = cfg.geometry.x_min;
      const double x1 = cfg.geometry.x_max;
      for (int i = 0; i < 3; ++i) {
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(nx);
        mu(0) = x0 + (x1 - x0) * (i + 1) / 4.0;
        cost.waypoints.push_back({(i + 1) * (N / 4), mu, Qs});
      }
    }
  }
  for (const Waypoint& w : cfg.waypoints.points) cost.waypoints.push_back(w);
  return cost;
}

// Position half-planes a' p <= b, p = (x_0, x_1) of the state.
std::vector<std::pair<Eigen::Vector2d, double>> PositionHalfPlanes(const GeometryConfig& g) {
  std::vector<std::pair<Eigen::Vector2d, double>> out;
  if (g.type == "circle") {
    // Inscribed polygon: faces at distance R cos(pi / M), vertices on the circle.
    const double b = g.R * std::cos(std::numbers::pi / g.M);
    for (int j = 0; j < g.M; ++j) {
      const double th = 2.0 * std::numbers::pi * j / g.M;
      out.emplace_back(Eigen::Vector2d(std::cos(th), std::sin(th)), b);
    }
  } else if (g.type == "funnel") {
    // |y| <= h_entry + s (x - x_min), x_min <= x <= x_max.
    const double s = (g.h_exit - g.h_entry) / (g.x_max - g.x_min);
    const double c = g.h_entry - s * g.x_min;
    out.emplace_back(Eigen::Vector2d(-s, 1.0), c);
    out.emplace_back(Eigen::Vector2d(-s, -1.0), c);
    out.emplace_back(Eigen::Vector2d(1.0, 0.0), g.x_max);
    out.emplace_back(Eigen::Vector2d(-1.0, 0.0), -g.x_min);
  }
  return out;
}

}  // namespace

void ScenarioConfig::Validate() const {
  auto fail = [](const std::string& f, const std::string& w) { throw ConfigError(f + ": " + w); };
  const ModelConfig& m = model;
  if (m.type != "quadrotor_zoh" && m.type != "linear") {
    fail("model.type", "expected 'quadrotor_zoh' or 'linear'");
  }
  if (m.N < 1) fail("model.N", "horizon must be positive");
  if (m.type == "quadrotor_zoh") {
    if (!(m.T > 0.0)) fail("model.T", "step length must be positive");
    if (!(m.sigma1 >= 0.0) || !(m.sigma2 >= 0.0)) fail("model.sigma", "noise scales must be >= 0");
    if (!(m.sigma0_scale >= 0.0)) fail("model.sigma0_scale", "must be >= 0");
  } else {
    if (m.A.size() == 0 || m.B.size() == 0 || m.D.size() == 0) {
      fail("model", "linear models need A, B and D");
    }
  }
  const GeometryConfig& g = geometry;
  if (g.type == "circle") {
    if (g.M < 3) fail("geometry.M", "polygon needs at least 3 sides");
    if (!(g.R > 0.0)) fail("geometry.R", "radius must be positive");
  } else if (g.type == "funnel") {
    if (!(g.h_entry >= g.h_exit && g.h_exit > 0.0)) {
      fail("geometry.h_entry", "need h_entry >= h_exit > 0");
    }
    if (!(g.x_max > g.x_min)) fail("geometry.x_max", "need x_max > x_min");
  } else if (g.type != "none" && g.type != "linear") {
    fail("geometry.type", "expected 'circle', 'funnel', 'none' or 'linear'");
  }
  if (g.type != "none" && g.type != "linear" && m.type != "quadrotor_zoh") {
    fail("geometry.type", "'" + g.type + "' needs the quadrotor model");
  }
  auto lcc_eps = [&](const std::string& f, double e) {
    if (!(e > 0.0 && e < 0.5)) {
      fail(f, "risk level out of range (need 0 < eps < 0.5, got " + FormatDouble(e) + ")");
    }
  };
  lcc_eps("risk.eps_state", risk.eps_state);
  lcc_eps("risk.eps_control", risk.eps_control);
  for (size_t i = 0; i < g.mixed_lccs.size(); ++i) {
    if (g.mixed_lccs[i].eps) {
      lcc_eps("geometry.mixed_lccs[" + std::to_string(i) + "].eps", *g.mixed_lccs[i].eps);
    }
  }
  for (size_t i = 0; i < g.half_planes.size(); ++i) {
    if (g.half_planes[i].eps) {
      lcc_eps("geometry.half_planes[" + std::to_string(i) + "].eps", *g.half_planes[i].eps);
    }
  }
  if (!(risk.u_max > 0.0)) fail("risk.u_max", "must be positive");
  if (qcc.enabled && !(qcc.eps > 0.0 && qcc.eps < 1.0)) {
    fail("qcc.eps", "risk level out of range (need 0 < eps < 1)");
  }
  if (!(solver.tolerance > 0.0)) fail("solver.tolerance", "must be positive");
  if (solver.max_iters < 1) fail("solver.max_iters", "must be at least 1");
  if (!(solver.objective_scale >= 0.0)) fail("solver.objective_scale", "must be >= 0");
}

ScenarioConfig ParseScenario(const std::string& json_text) {
  return FromJson(ParseDocument(json_text));
}

ScenarioConfig LoadScenario(const std::string& path) {
  try {
    return ParseScenario(ReadFile(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

SystemDef QuadrotorZoh(double T, double sigma1, double sigma2, int N, double sigma0_scale) {
  if (!(T > 0.0)) throw ConfigError("quadrotor_zoh: T must be positive");
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  const double c[4] = {1.0, T, T * T / 2.0, T * T * T / 6.0};
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(8, 8);
  for (int r = 0; r < 4; ++r) {
    for (int col = r; col < 4; ++col) A.block<2, 2>(2 * r, 2 * col) = c[col - r] * I;
  }
  Eigen::MatrixXd B(8, 2);
  B << T * T * T * T / 24.0 * I, T * T * T / 6.0 * I, T * T / 2.0 * I, T * I;
  Eigen::MatrixXd G(8, 2);
  G << T * T / 2.0 * I, T * I, I, Eigen::Matrix2d::Zero();
  const Eigen::MatrixXd D = G * Eigen::Vector2d(sigma1, sigma2).asDiagonal();
  return SystemDef::Lti(A, B, D, N, Eigen::VectorXd::Zero(8),
                        sigma0_scale * Eigen::MatrixXd::Identity(8, 8));
}

Problem BuildProblem(const ScenarioConfig& cfg) {
  cfg.Validate();
  SystemDef sys = BuildSystem(cfg.model);
  CostSpec cost = BuildCost(cfg, sys);
  const int N = sys.horizon();
  const int nx = sys.nx();
  std::vector<ConstraintSpec> cons;
  for (const auto& [a, b] : PositionHalfPlanes(cfg.geometry)) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(nx);
    full.head<2>() = a;
    for (int k = 0; k <= N; ++k) cons.push_back(StateLcc(sys, k, full, b, cfg.risk.eps_state));
  }
  for (size_t i = 0; i < cfg.geometry.half_planes.size(); ++i) {
    const StateHalfPlane& h = cfg.geometry.half_planes[i];
    const std::string where = "geometry.half_planes[" + std::to_string(i) + "]";
    if (h.a.size() != nx) throw ConfigError(where + ": 'a' must have n_x entries");
    if (h.step > N) throw ConfigError(where + ": step out of range");
    const double eps = h.eps.value_or(cfg.risk.eps_state);
    if (h.step < 0) {
      for (int k = 0; k <= N; ++k) cons.push_back(StateLcc(sys, k, h.a, h.b, eps));
    } else {
      cons.push_back(StateLcc(sys, h.step, h.a, h.b, eps));
    }
  }
  for (size_t i = 0; i < cfg.geometry.mixed_lccs.size(); ++i) {
    const MixedLccConfig& mc = cfg.geometry.mixed_lccs[i];
    const std::string where = "geometry.mixed_lccs[" + std::to_string(i) + "]";
    MixedLCC c;
    c.a = Eigen::VectorXd::Zero((N + 1) * nx);
    c.alpha = Eigen::VectorXd::Zero(N * sys.nu());
    c.b = mc.b;
    c.eps = mc.eps.value_or(cfg.risk.eps_state);
    for (const LccTerm& t : mc.terms) {
      if (t.step < 0 || t.step > N) throw ConfigError(where + ": step out of range");
      if (t.a.size() > 0) {
        if (t.a.size() != nx) throw ConfigError(where + ": 'a' must have n_x entries");
        c.a.segment(t.step * nx, nx) += t.a;
      }
      if (t.alpha.size() > 0) {
        if (t.alpha.size() != sys.nu() || t.step == N) {
          throw ConfigError(where + ": 'alpha' must have n_u entries and step < N");
        }
        c.alpha.segment(t.step * sys.nu(), sys.nu()) += t.alpha;
      }
    }
    cons.push_back(std::move(c));
  }
  if (cfg.risk.control_box) {
    for (int k = 0; k < N; ++k) {
      for (MixedLCC& c : ControlBox(sys, k, cfg.risk.u_max, cfg.risk.eps_control)) {
        cons.push_back(std::move(c));
      }
    }
  }
  if (cfg.risk.terminal_cov) cons.push_back(TerminalCovSpec{*cfg.risk.terminal_cov});
  if (cfg.qcc.enabled) {
    QCCSpec q;
    q.Q_cc = cfg.qcc.Q_cc.value_or(Eigen::MatrixXd::Identity(nx, nx));
    q.eps = cfg.qcc.eps;
    q.step = cfg.qcc.step < 0 ? N : cfg.qcc.step;
    q.mode = cfg.qcc.mode;
    cons.push_back(std::move(q));
  }
  for (size_t i = 0; i < cons.size(); ++i) {
    try {
      Validate(sys, cons[i]);
    } catch (const Error& e) {
      throw ConfigError("constraint " + std::to_string(i) + ": " + e.what());
    }
  }
  return Problem{cfg.name, std::move(sys), std::move(cost), std::move(cons), cfg.solver};
}

Problem CircleArena(const ScenarioConfig& cfg) {
  ScenarioConfig c = cfg;
  c.model.type = "quadrotor_zoh";
  c.geometry.type = "circle";
  return BuildProblem(c);
}

Problem FunnelCorridor(const ScenarioConfig& cfg) {
  ScenarioConfig c = cfg;
  c.model.type = "quadrotor_zoh";
  c.geometry.type = "funnel";
  return BuildProblem(c);
}

Problem TerminalQccCase(const ScenarioConfig& cfg) {
  ScenarioConfig c = cfg;
  c.model.type = "quadrotor_zoh";
  c.geometry.type = "none";
  if (c.cost.preset.empty()) c.cost.preset = "funnel";
  c.qcc.enabled = true;
  return BuildProblem(c);
}

std::string ToString(Method m) {
  switch (m) {
    case Method::kExact:
      return "exact";
    case Method::kBaseline:
      return "baseline";
    case Method::kOpenLoop:
      return "openloop";
    case Method::kLmi:
      return "lmi";
    case Method::kQuadratic:
      return "quadratic";
    case Method::kMarkov:
      return "markov";
  }
  return "?";
}

Method ParseMethod(const std::string& s) {
  if (s == "exact") return Method::kExact;
  if (s == "baseline") return Method::kBaseline;
  if (s == "openloop") return Method::kOpenLoop;
  if (s == "lmi") return Method::kLmi;
  if (s == "quadratic") return Method::kQuadratic;
  if (s == "markov") return Method::kMarkov;
  throw ConfigError("unknown method '" + s +
                    "' (expected exact, baseline, openloop, lmi, quadratic or markov)");
}

ScenarioConfig ConfigFor(const ScenarioConfig& cfg, Method m) {
  ScenarioConfig c = cfg;
  if (m == Method::kLmi || m == Method::kQuadratic || m == Method::kMarkov) {
    c.qcc.enabled = true;
    c.qcc.mode = m == Method::kLmi         ? QccMode::kLmi
                 : m == Method::kQuadratic ? QccMode::kQuadratic
                                           : QccMode::kMarkov;
  }
  return c;
}

SolveResult SolveProblem(const Problem& p, Method m, std::ostream* dump) {
  if (m == Method::kBaseline) {
    if (dump != nullptr) throw ConfigError("the baseline method has no single conic program to dump");
    BaselineOptions bo;
    bo.solve = p.solver;
    return SolveBaseline(p.sys, p.cost, p.constraints, bo);
  }
  ConicProgram prog = Compile(p.sys, p.cost, p.constraints);
  if (m == Method::kOpenLoop) prog = RestrictOpenLoop(prog, *prog.index);
  if (dump != nullptr) DumpProgram(prog, *dump);
  return Solve(prog, p.solver);
}

SolveResult SolveWith(const ScenarioConfig& cfg, Method m) {
  return SolveProblem(BuildProblem(ConfigFor(cfg, m)), m);
}

ScenarioConfig ApplyCell(const SweepCell& cell) {
  ScenarioConfig c = cell.config;
  c.model.sigma1 = cell.sigma1;
  c.model.sigma2 = cell.sigma2;
  if (c.geometry.type == "circle") {
    c.geometry.r_wp = cell.param1;
  } else if (c.geometry.type == "funnel") {
    c.geometry.h_entry = cell.param1;
    c.geometry.h_exit = cell.param2;
  }
  return c;
}

SweepSpec ParseSweep(const std::string& json_text, const std::string& base_dir) {
  const json doc = ParseDocument(json_text);
  Reader top(doc, "");
  SweepSpec spec;
  ScenarioConfig base;
  if (!top.Has("base")) Reader::Fail("base", "required");
  const json& b = top.Raw("base");
  if (b.is_string()) {
    const std::filesystem::path p = std::filesystem::path(base_dir) / b.get<std::string>();
    base = LoadScenario(p.string());
  } else {
    try {
      base = FromJson(b);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("base.") + e.what());
    }
  }
  if (top.Has("methods")) {
    const json& arr = top.Raw("methods");
    if (!arr.is_array()) Reader::Fail("methods", "expected an array of strings");
    for (size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) Reader::Fail("methods[" + std::to_string(i) + "]", "expected a string");
      try {
        spec.methods.push_back(ParseMethod(arr[i].get<std::string>()));
      } catch (const ConfigError& e) {
        Reader::Fail("methods[" + std::to_string(i) + "]", e.what());
      }
    }
  } else {
    spec.methods = {Method::kExact, Method::kBaseline};
  }
  if (top.Has("cells")) {
    const json& arr = top.Raw("cells");
    if (!arr.is_array()) Reader::Fail("cells", "expected an array");
    for (size_t i = 0; i < arr.size(); ++i) {
      Reader c(arr[i], "cells[" + std::to_string(i) + "]");
      SweepCell cell;
      cell.config = base;
      cell.sigma1 = c.Number("sigma1", base.model.sigma1);
      cell.sigma2 = c.Number("sigma2", cell.sigma1);
      const bool circle = base.geometry.type == "circle";
      cell.param1 = c.Number("param1", circle ? base.geometry.r_wp : base.geometry.h_entry);
      cell.param2 = c.Number("param2", circle ? 0.0 : base.geometry.h_exit);
      c.Finish();
      ApplyCell(cell).Validate();
      spec.cells.push_back(std::move(cell));
    }
  } else {
    top.Raw("cells");
  }
  spec.mc_samples = top.Int64("mc_samples", 0);
  if (spec.mc_samples < 0) Reader::Fail("mc_samples", "must be >= 0");
  spec.seed = static_cast<uint64_t>(top.Int64("seed", 0));
  top.Finish();
  return spec;
}

std::vector<SweepRow> RunSweep(const SweepSpec& spec) {
  std::vector<SweepRow> rows;
  for (const SweepCell& cell : spec.cells) {
    const ScenarioConfig cfg = ApplyCell(cell);
    const size_t first = rows.size();
    std::optional<SweepRow> baseline;
    for (Method m : spec.methods) {
      SweepRow row;
      row.scenario = cfg.name;
      row.method = m;
      row.sigma1 = cell.sigma1;
      row.sigma2 = cell.sigma2;
      row.param1 = cell.param1;
      row.param2 = cell.param2;
      try {
        const Problem prob = BuildProblem(ConfigFor(cfg, m));
        const SolveResult r = SolveProblem(prob, m);
        row.status = ToString(r.status);
        row.objective = r.objective;
        row.solve_ms = 1e3 * r.solve_seconds;
        row.message = r.backend_status;
        if (r.status == SolveStatus::kOptimal && spec.mc_samples > 0 && r.trajectory) {
          MCOptions mo;
          mo.seed = spec.seed;
          mo.count = spec.mc_samples;
          const MCReport rep = Rollout(prob.sys, *r.trajectory, &prob.cost, prob.constraints, mo);
          row.mc_rate_min = rep.MinRate();
        }
      } catch (const std::exception& e) {
        row.status = "ERROR";
        row.message = e.what();
      }
      if (m == Method::kBaseline) baseline = row;
      rows.push_back(std::move(row));
    }
    if (!baseline) continue;
    for (size_t i = first; i < rows.size(); ++i) {
      SweepRow& r = rows[i];
      if (r.method == Method::kBaseline || r.status != "OPTIMAL") continue;
      if (baseline->status == "OPTIMAL") {
        r.cost_reduction = 1.0 - r.objective / baseline->objective;
      } else if (baseline->status == "INFEASIBLE") {
        r.cost_reduction = 1.0;
      }
    }
  }
  return rows;
}

void WriteSweepCsv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "scenario,method,sigma1,sigma2,param1,param2,status,objective,solve_ms,mc_rate_min,"
         "cost_reduction\n";
  for (const SweepRow& r : rows) {
    out << r.scenario << ',' << ToString(r.method) << ',' << FormatDouble(r.sigma1) << ','
        << FormatDouble(r.sigma2) << ',' << FormatDouble(r.param1) << ','
        << FormatDouble(r.param2) << ',' << r.status << ',';
    if (r.status == "OPTIMAL") out << FormatDouble(r.objective);
    out << ',' << FormatDouble(r.solve_ms) << ',';
    if (r.mc_rate_min) out << FormatDouble(*r.mc_rate_min);
    out << ',';
    if (r.cost_reduction) out << FormatDouble(100.0 * *r.cost_reduction) << '%';
    out << '\n';
  }
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace stochlift
