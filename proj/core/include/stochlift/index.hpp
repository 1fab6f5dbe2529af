#pragma once

#include <span>
#include <vector>

#include "stochlift/lifted.hpp"

namespace stochlift {

/// Contiguous block [offset, offset + size) of the decision vector.
struct Range {
  int offset = 0;
  int size = 0;
};

/// Maps mu_x[k], vec(V_x[k]), mu_u[k], vec(V_u[k]) to disjoint contiguous
/// ranges of the flat decision vector. Blocks are laid out step by step in
/// that order. A means-only index has empty V ranges.
class DecisionIndex {
 public:
  explicit DecisionIndex(const SystemDef& sys, bool with_basis = true);

  int horizon() const { return N_; }
  int nx() const { return nx_; }
  int nu() const { return nu_; }
  int nw() const { return nw_; }
  int total() const { return total_; }
  bool has_basis() const { return with_basis_; }
  int ell(int k) const { return nx_ + k * nw_; }

  Range MuX(int k) const;
  Range VecVx(int k) const;
  Range MuU(int k) const;
  Range VecVu(int k) const;

  int mu_x(int k, int i) const { return MuX(k).offset + i; }
  int mu_u(int k, int i) const { return MuU(k).offset + i; }
  /// Entry (i, c) of V_x[k]; column-major within the block.
  int V_x(int k, int i, int c) const { return VecVx(k).offset + c * nx_ + i; }
  int V_u(int k, int i, int c) const { return VecVu(k).offset + c * nu_ + i; }

  std::vector<double> Pack(const LiftedTrajectory& traj) const;
  /// V blocks of a means-only index unpack as n x ell(k) zero matrices.
  LiftedTrajectory Unpack(std::span<const double> x) const;

 private:
  int N_;
  int nx_;
  int nu_;
  int nw_;
  bool with_basis_;
  int total_ = 0;
  std::vector<Range> mu_x_;
  std::vector<Range> V_x_;
  std::vector<Range> mu_u_;
  std::vector<Range> V_u_;
};

}  // namespace stochlift
