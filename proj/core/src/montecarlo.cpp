#include "stochlift/montecarlo.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "stochlift/dynamics.hpp"
#include "stochlift/errors.hpp"
#include "stochlift/special.hpp"

namespace stochlift {

namespace {

constexpr int64_t kBlock = 4096;

uint64_t Mix(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void CheckCount(int64_t count) {
  if (count <= 0) throw DomainError("sample count must be positive");
}

// Running mean and centered second moment of a vector quantity.
struct Moments {
  int64_t n = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd m2;

  explicit Moments(int dim = 0)
      : mean(Eigen::VectorXd::Zero(dim)), m2(Eigen::MatrixXd::Zero(dim, dim)) {}

  void Add(const Eigen::VectorXd& x) {
    ++n;
    const Eigen::VectorXd d = x - mean;
    mean += d / static_cast<double>(n);
    m2.noalias() += d * (x - mean).transpose();
  }
  void Merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(o.n);
    const Eigen::VectorXd d = o.mean - mean;
    mean += d * (nb / (na + nb));
    m2 += o.m2 + d * d.transpose() * (na * nb / (na + nb));
    n += o.n;
  }
  Eigen::MatrixXd Covariance() const {
    if (n < 2) return Eigen::MatrixXd::Zero(m2.rows(), m2.cols());
    Eigen::MatrixXd c = m2 / static_cast<double>(n - 1);
    return 0.5 * (c + c.transpose());
  }
};

struct ScalarMoments {
  int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void Add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void Merge(const ScalarMoments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(o.n);
    const double d = o.mean - mean;
    mean += d * nb / (na + nb);
    m2 += o.m2 + d * d * na * nb / (na + nb);
    n += o.n;
  }
};

struct BlockResult {
  ScalarMoments cost;
  std::vector<int64_t> hits;
  Moments terminal;
  std::vector<Moments> steps;
};

// Per-sample evaluation of one chance constraint.
struct EventEval {
  int index = 0;
  enum Kind { kLcc, kQcc } kind = kLcc;
  // LCC data: nonzero state and control blocks.
  std::vector<std::pair<int, Eigen::VectorXd>> a_blocks;
  std::vector<std::pair<int, Eigen::VectorXd>> alpha_blocks;
  double b = 0.0;
  // QCC data.
  int step = 0;
  Eigen::MatrixXd Linv;
  Eigen::VectorXd center;

  bool Holds(const std::vector<Eigen::VectorXd>& x,
             const std::vector<Eigen::VectorXd>& u) const {
    if (kind == kLcc) {
      double v = 0.0;
      for (const auto& [k, a] : a_blocks) v += a.dot(x[k]);
      for (const auto& [k, al] : alpha_blocks) v += al.dot(u[k]);
      return v <= b;
    }
    return (Linv * (x[step] - center)).squaredNorm() <= 1.0;
  }
};

double ExpectedWaypointTerms(const CostSpec& cost, const LiftedTrajectory& traj) {
  double v = 0.0;
  for (const Waypoint& w : cost.waypoints) {
    const Eigen::VectorXd d = traj.mu_x[w.step] - w.mu_star;
    v += d.dot(w.Q_star * d);
  }
  return v;
}

template <typename Fn>
void ForEachBlock(int64_t nblocks, int threads, Fn&& fn) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(nblocks)));
  if (threads == 1) {
    for (int64_t b = 0; b < nblocks; ++b) fn(b);
    return;
  }
  std::atomic<int64_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int64_t b = next++; b < nblocks; b = next++) fn(b);
    });
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace

double GaussianAt(uint64_t seed, uint64_t sample, uint64_t j) {
  const uint64_t h = Mix(Mix(Mix(seed) ^ sample) ^ j);
  // 53 random bits mapped to the open interval (0, 1).
  const double u = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
  return InvNormCdf(u);
}

bool ConstraintRate::Passes() const {
  return !has_event || rate >= target - 3.0 * std_error;
}

double MCReport::MinRate() const {
  double m = 1.0;
  for (const ConstraintRate& c : constraints) {
    if (c.has_event) m = std::min(m, c.rate);
  }
  return m;
}

double BinomialStderr(double rate, int64_t n) {
  CheckCount(n);
  return std::sqrt(std::max(0.0, rate * (1.0 - rate)) / static_cast<double>(n));
}

MCReport Rollout(const SystemDef& sys, const LiftedTrajectory& traj, const CostSpec* cost_in,
                 const std::vector<ConstraintSpec>& constraints, const MCOptions& opts) {
  CheckCount(opts.count);
  CheckReplay(sys, traj, opts.replay_tol);
  const int N = sys.horizon();
  const int nx = sys.nx();
  const int nu = sys.nu();
  const int nw = sys.nw();
  std::optional<CostSpec> cost;
  if (cost_in != nullptr) cost = cost_in->Validated(sys);
  const double wp_const = cost ? ExpectedWaypointTerms(*cost, traj) : 0.0;

  MCReport rep;
  rep.samples = opts.count;
  rep.seed = opts.seed;
  rep.has_cost = cost.has_value();
  std::vector<EventEval> events;
  for (size_t i = 0; i < constraints.size(); ++i) {
    Validate(sys, constraints[i]);
    ConstraintRate cr;
    cr.index = static_cast<int>(i);
    if (const auto* c = std::get_if<MixedLCC>(&constraints[i])) {
      EventEval e;
      e.index = cr.index;
      e.kind = EventEval::kLcc;
      for (int k = 0; k <= N; ++k) {
        const Eigen::VectorXd a = c->a.segment(k * nx, nx);
        if (!a.isZero(0.0)) e.a_blocks.emplace_back(k, a);
      }
      for (int k = 0; k < N; ++k) {
        const Eigen::VectorXd al = c->alpha.segment(k * nu, nu);
        if (!al.isZero(0.0)) e.alpha_blocks.emplace_back(k, al);
      }
      e.b = c->b;
      events.push_back(std::move(e));
      cr.kind = "lcc";
      cr.target = 1.0 - c->eps;
    } else if (const auto* c = std::get_if<QCCSpec>(&constraints[i])) {
      EventEval e;
      e.index = cr.index;
      e.kind = EventEval::kQcc;
      e.step = c->step;
      const Eigen::MatrixXd L = QccFactor(c->Q_cc);
      e.Linv = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(nx, nx));
      e.center = traj.mu_x[c->step];
      events.push_back(std::move(e));
      cr.kind = "qcc_" + ToString(c->mode);
      cr.target = 1.0 - c->eps;
    } else {
      cr.kind = "terminal_cov";
      cr.has_event = false;
    }
    rep.constraints.push_back(cr);
  }

  const int64_t nblocks = (opts.count + kBlock - 1) / kBlock;
  std::vector<BlockResult> blocks(nblocks);
  ForEachBlock(nblocks, opts.threads, [&](int64_t blk) {
    BlockResult& r = blocks[blk];
    r.hits.assign(events.size(), 0);
    r.terminal = Moments(nx);
    if (opts.per_step_covariance) r.steps.assign(N + 1, Moments(nx));
    std::vector<Eigen::VectorXd> x(N + 1, Eigen::VectorXd::Zero(nx));
    std::vector<Eigen::VectorXd> u(N, Eigen::VectorXd::Zero(nu));
    Eigen::VectorXd xi(BasisDim(sys, N));
    const int64_t begin = blk * kBlock;
    const int64_t end = std::min(opts.count, begin + kBlock);
    for (int64_t s = begin; s < end; ++s) {
      for (Eigen::Index j = 0; j < xi.size(); ++j) {
        xi(j) = GaussianAt(opts.seed, static_cast<uint64_t>(s), static_cast<uint64_t>(j));
      }
      x[0].noalias() = sys.mu0() + sys.V0() * xi.head(nx);
      for (int k = 0; k < N; ++k) {
        const int ell = nx + k * nw;
        u[k].noalias() = traj.mu_u[k] + traj.V_u[k] * xi.head(ell);
        x[k + 1].noalias() = sys.A(k) * x[k];
        x[k + 1].noalias() += sys.B(k) * u[k];
        x[k + 1].noalias() += sys.D(k) * xi.segment(ell, nw);
      }
      if (cost) {
        double c = wp_const;
        for (int k = 0; k < N; ++k) {
          c += x[k].dot(cost->Q[k] * x[k]) + u[k].dot(cost->R[k] * u[k]);
        }
        const Eigen::VectorXd d = x[N] - cost->x_star;
        c += d.dot(cost->Q_N * d);
        r.cost.Add(c);
      }
      for (size_t e = 0; e < events.size(); ++e) {
        if (events[e].Holds(x, u)) ++r.hits[e];
      }
      r.terminal.Add(x[N]);
      if (opts.per_step_covariance) {
        for (int k = 0; k <= N; ++k) r.steps[k].Add(x[k]);
      }
    }
  });

  ScalarMoments cost_m;
  std::vector<int64_t> hits(events.size(), 0);
  Moments terminal(nx);
  std::vector<Moments> steps;
  if (opts.per_step_covariance) steps.assign(N + 1, Moments(nx));
  for (const BlockResult& r : blocks) {
    cost_m.Merge(r.cost);
    for (size_t e = 0; e < events.size(); ++e) hits[e] += r.hits[e];
    terminal.Merge(r.terminal);
    for (size_t k = 0; k < steps.size(); ++k) steps[k].Merge(r.steps[k]);
  }
  const double n = static_cast<double>(opts.count);
  if (cost) {
    rep.cost_mean = cost_m.mean;
    rep.cost_stderr = opts.count > 1 ? std::sqrt(cost_m.m2 / (n - 1.0) / n) : 0.0;
  }
  size_t e = 0;
  for (ConstraintRate& cr : rep.constraints) {
    if (!cr.has_event) continue;
    cr.rate = static_cast<double>(hits[e++]) / n;
    cr.std_error = BinomialStderr(cr.rate, opts.count);
  }
  rep.terminal_mean = terminal.mean;
  rep.terminal_covariance = terminal.Covariance();
  for (const Moments& m : steps) rep.step_covariance.push_back(m.Covariance());
  return rep;
}

std::vector<Eigen::MatrixXd> CovarianceOracle(const SystemDef& sys,
                                              const LiftedTrajectory& traj) {
  traj.CheckShapes(sys);
  std::vector<Eigen::MatrixXd> out;
  for (int k = 0; k <= sys.horizon(); ++k) out.push_back(traj.StateCovariance(k));
  bool open_loop = true;
  for (const Eigen::MatrixXd& V : traj.V_u) open_loop = open_loop && V.isZero(0.0);
  if (open_loop) {
    Eigen::MatrixXd S = out[0];
    for (int k = 0; k < sys.horizon(); ++k) {
      S = sys.A(k) * S * sys.A(k).transpose() + sys.D(k) * sys.D(k).transpose();
      if ((S - out[k + 1]).norm() > 1e-10 * (1.0 + S.norm())) {
        throw InconsistencyError("lifted covariance disagrees with the open-loop recursion at step " +
                                 std::to_string(k + 1));
      }
    }
  }
  return out;
}

double QccEmpirical(const Eigen::MatrixXd& L, const Eigen::MatrixXd& V, uint64_t seed,
                    int64_t count) {
  CheckCount(count);
  if (L.rows() != L.cols() || L.rows() != V.rows()) {
    throw ShapeError("qcc_empirical: L must be square with as many rows as V");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
  if (!lu.isInvertible()) throw NumericalError("qcc_empirical: L is singular");
  const Eigen::MatrixXd W = lu.solve(V);
  Eigen::VectorXd xi(V.cols());
  int64_t hits = 0;
  for (int64_t s = 0; s < count; ++s) {
    for (Eigen::Index j = 0; j < xi.size(); ++j) {
      xi(j) = GaussianAt(seed, static_cast<uint64_t>(s), static_cast<uint64_t>(j));
    }
    if ((W * xi).squaredNorm() <= 1.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(count);
}

std::string ToJson(const MCReport& r) {
  using nlohmann::json;
  auto matrix = [](const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  json j;
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  if (r.has_cost) {
    j["cost_mean"] = r.cost_mean;
    j["cost_stderr"] = r.cost_stderr;
  } else {
    j["cost_mean"] = nullptr;
    j["cost_stderr"] = nullptr;
  }
  j["constraints"] = json::array();
  for (const ConstraintRate& c : r.constraints) {
    json e;
    e["index"] = c.index;
    e["kind"] = c.kind;
    if (c.has_event) {
      e["rate"] = c.rate;
      e["stderr"] = c.std_error;
      e["target"] = c.target;
      e["pass"] = c.Passes();
    }
    j["constraints"].push_back(e);
  }
  j["min_rate"] = r.MinRate();
  j["terminal_mean"] = std::vector<double>(r.terminal_mean.data(),
                                           r.terminal_mean.data() + r.terminal_mean.size());
  j["terminal_covariance"] = matrix(r.terminal_covariance);
  if (!r.step_covariance.empty()) {
    j["step_covariance"] = json::array();
    for (const Eigen::MatrixXd& S : r.step_covariance) j["step_covariance"].push_back(matrix(S));
  }
  return j.dump(2);
}

}  // namespace stochlift
