#pragma once

// The MPC-for-tracking problem with artificial reference and soft
// constraints, compiled into the ADMM splitting
//
//   min 1/2 z'Hz + q'z + g(v)   s.t.  Gz = b,  Dz = v
//
// with z = (x0, u0, ..., x_{N-1}, u_{N-1}, xs, us) and, per stage,
// v = (x~, u~, h~). The KKT Hessian P = H + rho D'D is split as
// Y + U V' (Y block diagonal per stage, U V' the -Q/-R couplings to the
// artificial reference, rank 2(n+m)). W = G P^-1 G' is split in turn as
// Gamma + U~ V~' with Gamma = G Y^-1 G' block tridiagonal (scalar
// bandwidth 2n-1) and a rank 2(n+m) remainder.

#include <Eigen/Core>
#include <memory>

#include "mpct/linalg.hpp"
#include "mpct/model.hpp"

namespace mpct {

struct ProblemDims {
  Index n = 0, m = 0, nh = 0, N = 0;
  Index stage_z() const { return n + m; }
  Index stage_v() const { return n + m + nh; }
  Index nz() const { return (N + 1) * stage_z(); }
  Index nv() const { return (N + 1) * stage_v(); }
  /// Rows of G: initial state, N dynamics rows (the last one landing on
  /// xs) and the steady-state row.
  Index mz() const { return (N + 2) * n; }
  Index n_theta() const { return nh + N * stage_v(); }
  Index gamma_bandwidth() const { return 2 * n - 1; }
};

class ProblemData {
 public:
  const ProblemDims& dims() const { return dims_; }
  double rho() const { return rho_; }

  /// Scaled (solver-coordinate) data.
  const LinearModel& model() const { return model_; }
  const ConstraintSet& constraints() const { return constraints_; }
  const CostWeights& weights() const { return weights_; }
  const Preconditioner& scaling() const { return scaling_; }
  /// Unscaled input box, used for the final hard clamp of u0.
  const VectorXd& physical_u_lo() const { return phys_u_lo_; }
  const VectorXd& physical_u_hi() const { return phys_u_hi_; }

  /// Per-v-component bounds and penalties. x~0 entries are unbounded with
  /// zero penalty, u~0 entries carry the hard input box with zero penalty.
  const VectorXd& v_lo() const { return v_lo_; }
  const VectorXd& v_hi() const { return v_hi_; }
  const VectorXd& v_beta() const { return v_beta_; }

  ControllabilityInfo controllability() const { return ctrb_; }

  const linalg::Woodbury<linalg::BlockDiagonal>& p_solver() const { return p_solver_; }
  const linalg::Woodbury<linalg::BandedCholesky>& w_solver() const { return w_solver_; }

  // Structured operators.
  void apply_D(const VectorXd& z, VectorXd& v) const;
  void apply_Dt(const VectorXd& v, VectorXd& z) const;
  void apply_G(const VectorXd& z, VectorXd& r) const;
  void apply_Gt(const VectorXd& mu, VectorXd& z) const;

  /// q = -(0, ..., 0, T xr, S ur) in scaled coordinates.
  VectorXd linear_cost(const VectorXd& x_r_scaled, const VectorXd& u_r_scaled) const;
  /// b = (xhat, -Bd dhat, ..., -Bd dhat) in scaled coordinates.
  VectorXd equality_rhs(const VectorXd& x_hat_scaled, const VectorXd& d_hat) const;

  void apply_P(const VectorXd& z, VectorXd& out) const;

  /// Solves min 1/2 z'Pz + p'z s.t. Gz = b by the three-system route
  /// P xi = p, W mu = -(G xi + b), P z = -(G' mu + p), followed by one
  /// refinement step.
  void solve_equality_qp(const VectorXd& p, const VectorXd& b, VectorXd& z) const;

  // Dense assemblies, for inspection and tests.
  MatrixXd hessian() const;
  MatrixXd kkt_hessian() const;
  MatrixXd equality_matrix() const;
  MatrixXd constraint_map() const;
  MatrixXd w_matrix() const;
  MatrixXd gamma_matrix() const;

 private:
  friend ProblemData build_problem(const LinearModel&, const ConstraintSet&, const CostWeights&, Index, double,
                                   const Preconditioner*);

  void solve_range_space(const VectorXd& p, const VectorXd& b, VectorXd& z, VectorXd& mu) const;

  ProblemDims dims_;
  double rho_ = 0.0;
  LinearModel model_;
  ConstraintSet constraints_;
  CostWeights weights_;
  Preconditioner scaling_;
  VectorXd phys_u_lo_, phys_u_hi_;
  VectorXd v_lo_, v_hi_, v_beta_;
  ControllabilityInfo ctrb_;
  linalg::Woodbury<linalg::BlockDiagonal> p_solver_;
  linalg::Woodbury<linalg::BandedCholesky> w_solver_;
};

/// Compiles the problem. When `scaling` is given, the model, constraints and
/// weights are passed in physical units and preconditioned here; otherwise
/// they are used as is. Throws HorizonTooShort, NotPositiveDefinite,
/// DimensionMismatch, InvalidBounds.
ProblemData build_problem(const LinearModel& model, const ConstraintSet& constraints, const CostWeights& weights,
                          Index horizon, double rho, const Preconditioner* scaling = nullptr);

}  // namespace mpct
