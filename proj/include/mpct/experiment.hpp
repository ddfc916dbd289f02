#pragma once

// Closed-loop reactor experiments: the offset-free MPCT controller wrapped
// around the linearized reactor, random validation scenarios, and a single
// experiment run scored by the validation indicators.

#include <Eigen/Core>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mpct/admm.hpp"
#include "mpct/cstr.hpp"
#include "mpct/offset_free.hpp"
#include "mpct/problem.hpp"
#include "mpct/validation.hpp"

namespace mpct::experiment {

struct PlantConfig {
  cstr::CstrParams params;
  cstr::SingerParams singer;
  double sample_seconds = 75.0;
  int substeps = 50;
  cstr::Input u_lo{3.0, -9000.0};
  cstr::Input u_hi{35.0, 0.0};
  validation::ViolationBounds bounds;
  validation::ViolationWeights weights;
  /// Operating point used as the Newton starting guess and as the nominal
  /// input of the linearization.
  cstr::OperatingPoint nominal = cstr::nominal_operating_point();
};

/// Constraint tightening {theta upper, c_B lower, p_B lower}.
struct Backoff {
  double theta = 0.0;
  double cB = 0.0;
  double pB = 0.0;
};

struct ControllerConfig {
  Index horizon = 7;
  double rho = 40.0;
  AdmmSettings admm;
  /// Diagonals. With weights_in_scaled_units the values apply to the
  /// preconditioned coordinates (Q~ = Q), otherwise to physical ones.
  VectorXd Q, R, T, S;
  bool weights_in_scaled_units = true;
  VectorXd beta;        // one entry (broadcast) or n_theta entries
  Backoff backoff;
  VectorXd observer_q, observer_r;  // diagonals
  Preconditioner scaling;
  bool warm_start = true;

  static ControllerConfig defaults();
};

/// Refined equilibrium and the discrete deviation model around it.
struct PlantLinearization {
  cstr::State x_eq;
  cstr::Input u_eq;
  cstr::Output y_eq;
  double theta_d = 0.0;
  /// x+ = A x + B u, y = C x + d, h = C x (E = C, F = 0, Bd = 0).
  LinearModel model;
};

PlantLinearization linearize_plant(const PlantConfig& plant);

/// Constraint set in deviation coordinates for the given back-off.
ConstraintSet deviation_constraints(const PlantConfig& plant, const PlantLinearization& lin, const Backoff& b);

class CstrController {
 public:
  CstrController(const PlantConfig& plant, const ControllerConfig& cfg, const PlantLinearization& lin);

  struct StepResult {
    cstr::Input u;
    /// Artificial-reference target from the reference calculator, physical.
    cstr::State x_r;
    SolveStatus status = SolveStatus::Converged;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool reference_solved = true;
  };

  /// Estimator back to the origin of the deviation coordinates, warm start
  /// and reference memory cleared.
  void reset();

  /// One sample: reference calculation, MPCT solve, estimator update.
  StepResult step(const cstr::Output& y, const cstr::Output& y_ref);

  const ProblemData& problem() const { return problem_; }
  const ObserverGains& gains() const { return gains_; }
  const PlantLinearization& linearization() const { return lin_; }
  const ControllerConfig& config() const { return cfg_; }
  const EstimatorState& estimate() const { return est_; }

 private:
  ControllerConfig cfg_;
  PlantLinearization lin_;
  ProblemData problem_;
  ObserverGains gains_;
  EstimatorState est_;
  std::optional<WarmStart> warm_;
  std::optional<SteadyReference> last_ref_;
  cstr::Input last_u_;
};

struct Scenario {
  cstr::Output y_r1{0.0, 0.0};
  cstr::Output y_r2{0.0, 0.0};
  int t_r = 10;
  int init_steps = 40;
  int steps = 100;
  /// Singer noise, one entry per simulated sample (init_steps + steps).
  std::vector<double> noise;
};

struct ScenarioRanges {
  double cB_lo = 0.73, cB_hi = 1.094;
  double pB_lo = 155.0, pB_hi = 301.0;
  int t_r_lo = 10, t_r_hi = 50;
  int init_steps = 40;
  int steps = 100;
};

/// Draws references, switching time and the noise sequence in a fixed order.
Scenario draw_scenario(std::mt19937_64& rng, const ScenarioRanges& ranges, double noise_variance);

/// Constant-reference, noise-free scenario (used for steady checks).
Scenario steady_scenario(const cstr::Output& y_ref, int init_steps, int steps);

struct StepRecord {
  int k = 0;
  cstr::State x;
  cstr::Input u;
  double theta_d = 0.0;
  cstr::Output y_ref;
  cstr::State x_r;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  SolveStatus status = SolveStatus::Converged;
};

struct ExperimentResult {
  double phi1 = 0.0;
  int phi2 = 0;
  bool feasible = true;  // phi1 == 0
  /// Recorded steps whose solve did not converge.
  int solver_failures = 0;
  double mean_iterations = 0.0;
  /// Per-step detail for the recorded window, filled when requested.
  std::vector<StepRecord> steps;
};

/// Starts at the refined equilibrium with theta_d at its nominal value and
/// the estimator at the origin, runs init_steps under y_r1, then records
/// `steps` samples switching to y_r2 at t_r.
ExperimentResult run_experiment(const Scenario& scenario, const PlantConfig& plant, CstrController& controller,
                                 bool keep_steps = false);

struct AdmissibleOutput {
  /// Steady pair the unconstrained loop settles at (theta_d = theta0).
  cstr::State x_u;
  cstr::Input u_u;
  /// True when some steady input reproduces y_ref exactly.
  bool reference_reachable = false;
  /// Closest admissible steady pair, in the Nu-scaled input distance.
  cstr::State x_c;
  cstr::Input u_c;
  cstr::Output y_o{0.0, 0.0};
};

/// (i) Solves outputs(steady_state(u)) = y_ref for u (least squares when
/// unreachable); (ii) minimizes |Nu (u_c - u_u)| over steady inputs meeting
/// the input box, theta <= theta_max, c_B >= c_B_min and p_B >= p_B_min, by a
/// 41 x 41 grid followed by pattern search. Throws NoSteadyStateFound when no
/// admissible grid point exists.
AdmissibleOutput admissible_steady_output(const PlantConfig& plant, const cstr::Output& y_ref,
                                          const VectorXd& input_scaling);

}  // namespace mpct::experiment
