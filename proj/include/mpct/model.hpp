#pragma once

// Prediction model, constraint set, cost weights and the diagonal
// preconditioner applied before the problem is compiled for ADMM.

#include <Eigen/Core>

#include "mpct/errors.hpp"

namespace mpct {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// x+ = A x + B u + Bd d,  y = C x + d,  h = E x + F u.
struct LinearModel {
  MatrixXd A;
  MatrixXd B;
  MatrixXd C;
  MatrixXd Bd;
  MatrixXd E;
  MatrixXd F;

  Index n() const { return A.rows(); }
  Index m() const { return B.cols(); }
  Index p() const { return C.rows(); }
  Index nh() const { return E.rows(); }

  /// Throws DimensionMismatch.
  void validate() const;
};

/// Box bounds on x, u and h = E x + F u plus nonnegative back-off
/// tightening of the x and h bounds. Infinite bounds are allowed.
struct ConstraintSet {
  VectorXd x_lo, x_hi;
  VectorXd u_lo, u_hi;
  VectorXd h_lo, h_hi;
  VectorXd eta_x_lo, eta_x_hi;
  VectorXd eta_h_lo, eta_h_hi;

  /// Zero back-off, unbounded x and h, the given input box.
  static ConstraintSet unbounded(Index n, Index m, Index nh, const VectorXd& u_lo, const VectorXd& u_hi);

  VectorXd tightened_x_lo() const { return x_lo + eta_x_lo; }
  VectorXd tightened_x_hi() const { return x_hi - eta_x_hi; }
  VectorXd tightened_h_lo() const { return h_lo + eta_h_lo; }
  VectorXd tightened_h_hi() const { return h_hi - eta_h_hi; }

  /// Throws DimensionMismatch or InvalidBounds.
  void validate(const LinearModel& model) const;
};

/// Stage weights Q, R, offset weights T, S and soft-constraint penalties
/// beta. beta is either a single entry (broadcast) or one entry per softened
/// component.
struct CostWeights {
  MatrixXd Q, R, T, S;
  VectorXd beta;

  void validate(const LinearModel& model) const;
};

/// Diagonal scalings: x~ = Nx x, u~ = Nu u, h~ = Nc h.
struct Preconditioner {
  VectorXd Nx, Nu, Nc;

  static Preconditioner identity(Index n, Index m, Index nh);
  bool is_identity() const;
  void validate(Index n, Index m, Index nh) const;
};

struct ScaledProblem {
  LinearModel model;
  ConstraintSet constraints;
  CostWeights weights;
};

/// Maps the problem to scaled coordinates. beta is left as given: it is
/// interpreted in the solver's (scaled) coordinates.
ScaledProblem precondition(const LinearModel& model, const ConstraintSet& constraints, const CostWeights& weights,
                           const Preconditioner& scaling);

/// Inverse of precondition().
ScaledProblem unprecondition(const LinearModel& model, const ConstraintSet& constraints, const CostWeights& weights,
                             const Preconditioner& scaling);

/// Throws NotPositiveDefinite unless `m` is symmetric positive definite.
void require_positive_definite(const MatrixXd& m, const char* name);

/// Numerical rank with singular values below rel_tol * sigma_max treated as
/// zero.
Index numerical_rank(const MatrixXd& m, double rel_tol = 1e-10);

/// Smallest k with rank [B, AB, ..., A^(k-1) B] equal to the rank of the
/// full controllability matrix. `controllable` reports whether that rank is
/// the state dimension.
struct ControllabilityInfo {
  Index index = 0;
  Index rank = 0;
  bool controllable = false;
};
ControllabilityInfo controllability_index(const MatrixXd& A, const MatrixXd& B);

/// True when the observability matrix of (A, C) has rank n.
bool is_observable(const MatrixXd& A, const MatrixXd& C);

}  // namespace mpct
