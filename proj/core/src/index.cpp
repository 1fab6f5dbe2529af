#include "stochlift/index.hpp"

#include "stochlift/errors.hpp"

namespace stochlift {

DecisionIndex::DecisionIndex(const SystemDef& sys, bool with_basis)
    : N_(sys.horizon()),
      nx_(sys.nx()),
      nu_(sys.nu()),
      nw_(sys.nw()),
      with_basis_(with_basis) {
  int o = 0;
  auto take = [&o](int size) {
    Range r{o, size};
    o += size;
    return r;
  };
  for (int k = 0; k <= N_; ++k) {
    const int basis = with_basis_ ? ell(k) : 0;
    mu_x_.push_back(take(nx_));
    V_x_.push_back(take(nx_ * basis));
    if (k < N_) {
      mu_u_.push_back(take(nu_));
      V_u_.push_back(take(nu_ * basis));
    }
  }
  total_ = o;
}

Range DecisionIndex::MuX(int k) const {
  if (k < 0 || k > N_) throw IndexError("mu_x step out of range");
  return mu_x_[k];
}

Range DecisionIndex::VecVx(int k) const {
  if (k < 0 || k > N_) throw IndexError("V_x step out of range");
  return V_x_[k];
}

Range DecisionIndex::MuU(int k) const {
  if (k < 0 || k >= N_) throw IndexError("mu_u step out of range");
  return mu_u_[k];
}

Range DecisionIndex::VecVu(int k) const {
  if (k < 0 || k >= N_) throw IndexError("V_u step out of range");
  return V_u_[k];
}

std::vector<double> DecisionIndex::Pack(const LiftedTrajectory& traj) const {
  std::vector<double> x(total_, 0.0);
  auto put = [&x](Range r, const double* data) {
    for (int i = 0; i < r.size; ++i) x[r.offset + i] = data[i];
  };
  for (int k = 0; k <= N_; ++k) {
    if (traj.mu_x[k].size() != nx_) throw ShapeError("pack: mu_x length");
    put(MuX(k), traj.mu_x[k].data());
    if (with_basis_) {
      if (traj.V_x[k].rows() != nx_ || traj.V_x[k].cols() != ell(k)) {
        throw ShapeError("pack: V_x shape");
      }
      put(VecVx(k), traj.V_x[k].data());
    }
    if (k < N_) {
      if (traj.mu_u[k].size() != nu_) throw ShapeError("pack: mu_u length");
      put(MuU(k), traj.mu_u[k].data());
      if (with_basis_) {
        if (traj.V_u[k].rows() != nu_ || traj.V_u[k].cols() != ell(k)) {
          throw ShapeError("pack: V_u shape");
        }
        put(VecVu(k), traj.V_u[k].data());
      }
    }
  }
  return x;
}

LiftedTrajectory DecisionIndex::Unpack(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != total_) {
    throw ShapeError("unpack: decision vector has wrong length");
  }
  LiftedTrajectory t;
  for (int k = 0; k <= N_; ++k) {
    t.mu_x.push_back(Eigen::Map<const Eigen::VectorXd>(x.data() + MuX(k).offset, nx_));
    if (with_basis_) {
      t.V_x.push_back(Eigen::Map<const Eigen::MatrixXd>(x.data() + VecVx(k).offset,
                                                        nx_, ell(k)));
    } else {
      t.V_x.push_back(Eigen::MatrixXd::Zero(nx_, ell(k)));
    }
    if (k < N_) {
      t.mu_u.push_back(Eigen::Map<const Eigen::VectorXd>(x.data() + MuU(k).offset, nu_));
      if (with_basis_) {
        t.V_u.push_back(Eigen::Map<const Eigen::MatrixXd>(
            x.data() + VecVu(k).offset, nu_, ell(k)));
      } else {
        t.V_u.push_back(Eigen::MatrixXd::Zero(nu_, ell(k)));
      }
    }
  }
  return t;
}

}  // namespace stochlift
