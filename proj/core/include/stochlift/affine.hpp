#pragma once

// Sparse affine expressions over a flat decision vector, and the conic row
// types built from them.

#include <span>
#include <vector>

namespace stochlift {

struct Term {
  int var;
  double coef;
};

/// c + sum_i coef_i * x[var_i]. Terms are kept in insertion order and may
/// repeat a variable; evaluation and lowering accumulate them.
struct AffineExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  AffineExpr() = default;
  explicit AffineExpr(double c) : constant(c) {}

  void Add(int var, double coef) {
    if (coef != 0.0) terms.push_back({var, coef});
  }
  void Append(const AffineExpr& other, double scale = 1.0);
  AffineExpr& Scale(double s);
  double Evaluate(std::span<const double> x) const;
  bool IsZero() const { return terms.empty() && constant == 0.0; }
  /// Largest referenced variable index, or -1.
  int MaxVar() const;
};

/// ||tail||_2 <= head.
struct SocRow {
  AffineExpr head;
  std::vector<AffineExpr> tail;

  /// head(x) - ||tail(x)||; non-negative when satisfied.
  double Margin(std::span<const double> x) const;
};

/// Symmetric matrix-valued affine expression constrained to be PSD. Only the
/// lower triangle is stored, packed column by column.
class PsdBlock {
 public:
  explicit PsdBlock(int side);

  int side() const { return side_; }
  /// Entry (i, j) with i >= j.
  AffineExpr& Lower(int i, int j);
  const AffineExpr& Lower(int i, int j) const;
  /// Entry (i, j) in either triangle.
  const AffineExpr& At(int i, int j) const {
    return i >= j ? Lower(i, j) : Lower(j, i);
  }

  /// Smallest eigenvalue of the block evaluated at x.
  double MinEigenvalue(std::span<const double> x) const;

 private:
  int Offset(int i, int j) const;

  int side_;
  std::vector<AffineExpr> entries_;
};

/// Sum of squared norms of affine vectors plus a linear term and constant:
///   sum_t ||rows_t(x)||^2 + linear(x)
/// where `linear` carries the constant offset.
struct QuadraticObjective {
  std::vector<std::vector<AffineExpr>> squares;
  AffineExpr linear;

  double Evaluate(std::span<const double> x) const;
};

}  // namespace stochlift
