#pragma once

// Disturbance-augmented Luenberger estimator and steady-state reference
// calculator for offset-free tracking.

#include <Eigen/Core>

#include "mpct/model.hpp"

namespace mpct {

struct ObserverGains {
  MatrixXd Lx;  // n x p
  MatrixXd Ld;  // p x p
};

struct EstimatorState {
  VectorXd x_hat;
  VectorXd d_hat;

  static EstimatorState origin(Index n, Index p) { return {VectorXd::Zero(n), VectorXd::Zero(p)}; }
};

/// A_aug = [[A, Bd], [0, I]], C_aug = [C, I].
MatrixXd augmented_A(const LinearModel& model);
MatrixXd augmented_C(const LinearModel& model);

/// [xhat+; dhat+] = A_aug [xhat; dhat] + [B; 0] u + L_aug (C xhat + dhat - y)
EstimatorState observer_update(const EstimatorState& est, const ObserverGains& gains, const LinearModel& model,
                               const VectorXd& u, const VectorXd& y);

double spectral_radius(const MatrixXd& m);

/// Spectral radius of A_aug + L_aug C_aug.
double estimator_spectral_radius(const LinearModel& model, const ObserverGains& gains);

struct DareResult {
  MatrixXd X;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Stabilizing solution of X = A'XA - A'XB (R + B'XB)^-1 B'XA + Q by the
/// structure-preserving doubling iteration. Throws
/// RiccatiNoStabilizingSolution when it does not converge.
DareResult solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R);

/// Relative residual ||X - (A'XA - A'XB(R+B'XB)^-1 B'XA + Q)|| / ||X||.
double dare_residual(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R, const MatrixXd& X);

/// Observer gains by LQR on the dual pair (A_aug', C_aug') with weights
/// (Q', R'); L_aug = -K'.
ObserverGains design_observer_gains(const LinearModel& model, const MatrixXd& q_obs, const MatrixXd& r_obs);

struct SteadyReference {
  VectorXd x_r;
  VectorXd u_r;
};

/// Solves [[A - I, B], [C, 0]] [x_r; u_r] = [-Bd dhat; y_r - dhat],
/// minimum-norm when underdetermined. Throws RankDeficient when the system
/// has no solution.
SteadyReference compute_reference(const LinearModel& model, const VectorXd& y_r, const VectorXd& d_hat);

}  // namespace mpct
