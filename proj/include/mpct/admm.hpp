#pragma once

// ADMM iteration for the compiled tracking problem: structured z-update,
// closed-form v-update, dual ascent, shift warm start and resumable
// iteration budgets.

#include <Eigen/Core>
#include <optional>

#include "mpct/problem.hpp"

namespace mpct {

struct AdmmSettings {
  double eps_p = 5e-3;
  double eps_d = 1e-3;
  int max_iter = 5000;
  /// Iterations allowed per call to iterate(); 0 means no per-call cap.
  int iter_budget = 0;

  void validate() const;
};

enum class SolveStatus {
  Converged,
  /// The per-call budget ran out before convergence; the state can be resumed.
  BudgetExhausted,
  MaxIterationsExceeded,
  NumericalFailure,
};

const char* to_string(SolveStatus s);

/// Measurement-dependent data of one solve, in physical units.
struct SolveInput {
  VectorXd x_hat;
  VectorXd d_hat;
  VectorXd x_r;
  VectorXd u_r;
};

/// Initial (v, lambda) in solver coordinates.
struct WarmStart {
  VectorXd v;
  VectorXd lambda;
};

/// Mutable iterate. Owned by one solve sequence at a time.
struct AdmmState {
  VectorXd z, v, v_prev, lambda;
  /// Right-hand data of the current solve (scaled).
  VectorXd q, b;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
  SolveStatus status = SolveStatus::BudgetExhausted;

  // Scratch space reused across iterations.
  VectorXd work_p, work_dz;
};

struct Solution {
  /// Input to apply, physical units, inside the input box exactly.
  VectorXd u0;
  /// Artificial reference, physical units.
  VectorXd x_s, u_s;
  /// Solver-coordinate iterates.
  VectorXd z, v, lambda;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  SolveStatus status = SolveStatus::BudgetExhausted;
};

/// Minimizer over w of (rho/2)(w - c)^2 + (beta/2) max(w - hi, lo - w, 0).
/// Throws InvalidBounds unless lo < hi, beta > 0, rho > 0.
double prox_soft_box(double c, double lo, double hi, double beta, double rho);

/// z-update: p = q + D'(lambda - rho v), then the equality-constrained QP.
VectorXd update_z(const ProblemData& problem, const VectorXd& q, const VectorXd& b, const VectorXd& v,
                  const VectorXd& lambda);

/// v-update given Dz^{l+1} and lambda^l.
VectorXd update_v(const ProblemData& problem, const VectorXd& dz, const VectorXd& lambda);

/// v0/lambda0 from the previous optimum shifted one stage forward, with the
/// last stage copied.
WarmStart warm_start_shift(const VectorXd& v_star, const VectorXd& lambda_star, Index stage_size);

/// Builds q, b from the measurement and sets v0, lambda0 (zero when `warm`
/// is empty).
AdmmState initialize(const ProblemData& problem, const SolveInput& input, const std::optional<WarmStart>& warm);

/// Runs iterations until convergence, max_iter, or the per-call budget.
/// Calling it again on a BudgetExhausted state resumes exactly where it
/// stopped.
SolveStatus iterate(const ProblemData& problem, AdmmState& state, const AdmmSettings& settings);

Solution extract_solution(const ProblemData& problem, const AdmmState& state);

/// initialize() followed by a single iterate() call.
std::pair<Solution, AdmmState> solve(const ProblemData& problem, const SolveInput& input,
                                     const std::optional<WarmStart>& warm, const AdmmSettings& settings);

}  // namespace mpct
