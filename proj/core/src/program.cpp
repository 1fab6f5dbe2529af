#include "stochlift/program.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "stochlift/dynamics.hpp"
#include "stochlift/errors.hpp"
#include "context.hpp"

namespace stochlift {

namespace {

void CheckExpr(const AffineExpr& e, int n, const char* where) {
  for (const Term& t : e.terms) {
    if (t.var < 0 || t.var >= n) {
      throw IndexError(std::string(where) + " references variable " + std::to_string(t.var) +
                       " outside 0.." + std::to_string(n - 1));
    }
  }
}

void WriteExpr(std::ostream& out, const AffineExpr& e) {
  out << e.constant << ' ' << e.terms.size();
  for (const Term& t : e.terms) out << ' ' << t.var << ' ' << t.coef;
  out << '\n';
}

}  // namespace

void ConicProgram::CheckWellFormed() const {
  for (const auto& rows : objective.squares) {
    for (const AffineExpr& e : rows) CheckExpr(e, num_vars, "objective");
  }
  CheckExpr(objective.linear, num_vars, "objective");
  for (const AffineExpr& e : equalities) CheckExpr(e, num_vars, "equality");
  for (const SocRow& s : socs) {
    CheckExpr(s.head, num_vars, "cone head");
    for (const AffineExpr& e : s.tail) CheckExpr(e, num_vars, "cone tail");
  }
  for (const PsdBlock& b : psds) {
    for (int j = 0; j < b.side(); ++j) {
      for (int i = j; i < b.side(); ++i) CheckExpr(b.Lower(i, j), num_vars, "PSD block");
    }
  }
}

double Residuals::Worst() const { return std::max({equality, soc, psd}); }

Residuals Evaluate(const ConicProgram& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.num_vars) {
    throw ShapeError("point has the wrong number of entries for this program");
  }
  Residuals r;
  for (const AffineExpr& e : p.equalities) {
    r.equality = std::max(r.equality, std::abs(e.Evaluate(x)) / (1.0 + std::abs(e.constant)));
  }
  for (const SocRow& s : p.socs) {
    const double head = s.head.Evaluate(x);
    r.soc = std::max(r.soc, -s.Margin(x) / (1.0 + std::abs(head)));
  }
  for (const PsdBlock& b : p.psds) {
    double scale = 0.0;
    for (int j = 0; j < b.side(); ++j) {
      for (int i = j; i < b.side(); ++i) {
        scale = std::max(scale, std::abs(b.Lower(i, j).Evaluate(x)));
      }
    }
    r.psd = std::max(r.psd, -b.MinEigenvalue(x) / (1.0 + scale));
  }
  return r;
}

ConicProgram Compile(const SystemDef& sys, const CostSpec& cost,
                     const std::vector<ConstraintSpec>& constraints) {
  const DecisionIndex idx(sys);
  ConicProgram p;
  p.num_vars = idx.total();
  p.index = idx;
  try {
    p.objective = AssembleObjective(sys, cost, idx);
  } catch (const Error&) {
    internal::RethrowWithContext("cost: ");
  }
  for (EqualityGroup& g : DynamicsEqualities(sys, idx)) {
    for (AffineExpr& e : g.rows) p.equalities.push_back(std::move(e));
  }
  for (size_t i = 0; i < constraints.size(); ++i) {
    try {
      const ConstraintSpec& spec = constraints[i];
      if (const auto* c = std::get_if<MixedLCC>(&spec)) {
        p.socs.push_back(BuildLcc(sys, idx, *c));
      } else if (const auto* c = std::get_if<TerminalCovSpec>(&spec)) {
        p.psds.push_back(BuildTerminalCov(sys, idx, *c));
      } else if (const auto* c = std::get_if<QCCSpec>(&spec)) {
        switch (c->mode) {
          case QccMode::kLmi:
            p.psds.push_back(BuildQccLmi(sys, idx, *c));
            break;
          case QccMode::kQuadratic:
            p.socs.push_back(BuildQccQuadratic(sys, idx, *c));
            break;
          case QccMode::kMarkov:
            p.socs.push_back(BuildQccMarkov(sys, idx, *c));
            break;
        }
      }
    } catch (const Error&) {
      internal::RethrowWithContext("constraint " + std::to_string(i) + ": ");
    }
  }
  return p;
}

ConicProgram RestrictOpenLoop(const ConicProgram& p, const DecisionIndex& idx) {
  ConicProgram out = p;
  for (int k = 0; k < idx.horizon(); ++k) {
    const Range r = idx.VecVu(k);
    for (int v = r.offset; v < r.offset + r.size; ++v) {
      AffineExpr e;
      e.Add(v, 1.0);
      out.equalities.push_back(std::move(e));
    }
  }
  return out;
}

std::string ToString(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal:
      return "OPTIMAL";
    case SolveStatus::kInfeasible:
      return "INFEASIBLE";
    case SolveStatus::kUnbounded:
      return "UNBOUNDED";
    case SolveStatus::kNumericalLimit:
      return "NUMERICAL_LIMIT";
  }
  return "?";
}

void DumpProgram(const ConicProgram& p, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "VARS " << p.num_vars << '\n';
  size_t nsq = 0;
  for (const auto& rows : p.objective.squares) nsq += rows.size();
  out << "OBJ " << nsq << '\n';
  WriteExpr(out, p.objective.linear);
  for (const auto& rows : p.objective.squares) {
    for (const AffineExpr& e : rows) WriteExpr(out, e);
  }
  out << "EQ " << p.equalities.size() << '\n';
  for (const AffineExpr& e : p.equalities) WriteExpr(out, e);
  out << "SOC " << p.socs.size() << '\n';
  for (const SocRow& s : p.socs) {
    out << s.tail.size() << '\n';
    WriteExpr(out, s.head);
    for (const AffineExpr& e : s.tail) WriteExpr(out, e);
  }
  out << "PSD " << p.psds.size() << '\n';
  for (const PsdBlock& b : p.psds) {
    out << b.side() << '\n';
    for (int j = 0; j < b.side(); ++j) {
      for (int i = j; i < b.side(); ++i) WriteExpr(out, b.Lower(i, j));
    }
  }
  out.precision(old_precision);
}

}  // namespace stochlift
