#pragma once

// Continuous stirred-tank reactor (Van de Vusse kinetics) with first-order
// input filters, used as the simulated plant and as the source of the
// controller's linear prediction model.
//
// Units: time in hours inside the model, sample times in seconds at the API.
// Concentrations in mol/l, temperatures in degC, F_N in 1/h, P_K in kJ/h.
// The reactor volume is given in m^3 and converted to litres wherever it
// meets a concentration, so p_B = c_B * F_N * V_R[l] comes out in mol/h.

#include <Eigen/Core>

#include "mpct/errors.hpp"
#include "mpct/model.hpp"

namespace mpct::cstr {

/// x = (c_A, c_B, theta, theta_K, F_N, P_K); the last two are the filtered
/// inputs.
using State = Eigen::Matrix<double, 6, 1>;
/// Commanded inputs (F_N, P_K) fed to the filters.
using Input = Eigen::Vector2d;
/// y = (c_B, p_B).
using Output = Eigen::Vector2d;

inline constexpr Index kStates = 6;
inline constexpr Index kInputs = 2;
inline constexpr Index kOutputs = 2;

struct CstrParams {
  double k10 = 1.287e12;  // 1/h
  double k20 = 1.287e12;  // 1/h
  double k30 = 9.043e9;   // l/(mol h)
  double E1 = -9758.3;    // K
  double E2 = -9758.3;
  double E3 = -8560.0;
  double cA0 = 5.1;  // mol/l
  double dH_AB = 4.2;  // kJ/mol
  double dH_BC = -11.0;
  double dH_AD = -41.85;
  double rho = 0.9342;  // kg/l
  double Cp = 3.01;     // kJ/(kg K)
  /// kJ/(h m^2 K). The parameter table prints 4.032 in units of 10^3.
  double kw = 4032.0;
  double AR = 0.215;   // m^2
  double VR = 0.01;    // m^3
  double mK = 5.0;     // kg
  double CpK = 2.0;    // kJ/(kg K)
  double T_FN = 250.0;  // s
  double T_PK = 125.0;  // s

  double volume_litres() const { return VR * 1000.0; }

  /// Throws InvalidParameters unless capacities, volumes, masses, areas and
  /// time constants are positive.
  void validate() const;
};

/// Disturbance process parameters.
struct SingerParams {
  double theta0 = 104.9;
  double pole = 0.99;
  double noise_variance = 0.01;
};

/// Equilibrium reported for the nominal operating point, rounded.
struct OperatingPoint {
  State x;
  Input u;
  double theta_d = 104.9;
};
OperatingPoint nominal_operating_point();

/// k_i(theta) = k_i0 exp(E_i / (theta + 273.15)), i in 1..3.
/// Throws InvalidTemperature for theta <= -273.15, OutOfRange for bad i.
double reaction_rate(int i, double theta, const CstrParams& p);

/// Time derivative (per hour). Throws NonFiniteState.
State derivative(const State& x, const Input& u_cmd, double theta_d, const CstrParams& p);

/// Classical RK4 over `substeps` equal increments of sample_seconds.
/// Throws InvalidParameters or NonFiniteState.
State integrate_step(const State& x, const Input& u_cmd, double theta_d, const CstrParams& p, double sample_seconds,
                     int substeps);

/// theta_d+ = pole theta_d + (1 - pole) theta0 + noise.
double singer_step(double theta_d, double noise, const SingerParams& s = {});

Output outputs(const State& x, const CstrParams& p);

/// Newton refinement of the reactor states (c_A, c_B, theta, theta_K) for the
/// steady input `u` (the filter states are set to u). Throws
/// NoSteadyStateFound when Newton fails to reach a residual of 1e-11.
State steady_state(const Input& u, double theta_d, const CstrParams& p, const State& guess);

struct ContinuousModel {
  MatrixXd Ac;  // 6x6, per hour
  MatrixXd Bc;  // 6x2, per hour
  MatrixXd C;   // 2x6
};

/// Jacobians at (x, u, theta_d) by central differences with steps
/// rel_step (1 + |value|). Throws NotAnEquilibrium when the derivative
/// exceeds `equilibrium_tol` in the infinity norm.
ContinuousModel linearize(const State& x, const Input& u, double theta_d, const CstrParams& p,
                          double rel_step = 1e-6, double equilibrium_tol = 0.05);

/// Zero-order-hold discretization: exp([[Ac, Bc], [0, 0]] T) by scaling and
/// squaring of a Taylor series.
std::pair<MatrixXd, MatrixXd> discretize(const MatrixXd& Ac, const MatrixXd& Bc, double sample_seconds);

/// Matrix exponential used by discretize(), exposed for tests.
MatrixXd expm(const MatrixXd& M);

}  // namespace mpct::cstr
