#include "stochlift/affine.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "stochlift/errors.hpp"

namespace stochlift {

void AffineExpr::Append(const AffineExpr& other, double scale) {
  if (scale == 0.0) return;
  terms.reserve(terms.size() + other.terms.size());
  for (const Term& t : other.terms) Add(t.var, scale * t.coef);
  constant += scale * other.constant;
}

AffineExpr& AffineExpr::Scale(double s) {
  for (Term& t : terms) t.coef *= s;
  constant *= s;
  return *this;
}

double AffineExpr::Evaluate(std::span<const double> x) const {
  double v = constant;
  for (const Term& t : terms) v += t.coef * x[t.var];
  return v;
}

int AffineExpr::MaxVar() const {
  int m = -1;
  for (const Term& t : terms) m = std::max(m, t.var);
  return m;
}

double SocRow::Margin(std::span<const double> x) const {
  double sq = 0.0;
  for (const AffineExpr& e : tail) {
    const double v = e.Evaluate(x);
    sq += v * v;
  }
  return head.Evaluate(x) - std::sqrt(sq);
}

PsdBlock::PsdBlock(int side) : side_(side) {
  if (side < 1) throw ShapeError("PSD block side must be positive");
  entries_.resize(static_cast<size_t>(side) * (side + 1) / 2);
}

int PsdBlock::Offset(int i, int j) const {
  if (j < 0 || i < j || i >= side_) {
    throw IndexError("PSD block entry must satisfy 0 <= j <= i < side");
  }
  // Column j of the packed lower triangle starts after columns 0..j-1.
  return j * side_ - j * (j - 1) / 2 + (i - j);
}

AffineExpr& PsdBlock::Lower(int i, int j) { return entries_[Offset(i, j)]; }

const AffineExpr& PsdBlock::Lower(int i, int j) const {
  return entries_[Offset(i, j)];
}

double PsdBlock::MinEigenvalue(std::span<const double> x) const {
  Eigen::MatrixXd M(side_, side_);
  for (int j = 0; j < side_; ++j) {
    for (int i = j; i < side_; ++i) {
      M(i, j) = M(j, i) = Lower(i, j).Evaluate(x);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double QuadraticObjective::Evaluate(std::span<const double> x) const {
  double v = linear.Evaluate(x);
  for (const auto& rows : squares) {
    for (const AffineExpr& r : rows) {
      const double e = r.Evaluate(x);
      v += e * e;
    }
  }
  return v;
}

}  // namespace stochlift
