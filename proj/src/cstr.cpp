#include "mpct/cstr.hpp"

#include <Eigen/LU>
#include <cmath>
#include <string>

namespace mpct::cstr {

void CstrParams::validate() const {
  const double positive[] = {rho, Cp, kw, AR, VR, mK, CpK, T_FN, T_PK, cA0};
  for (double v : positive) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidParameters, "reactor capacities, sizes and time constants must be positive");
    }
  }
  const double finite[] = {k10, k20, k30, E1, E2, E3, dH_AB, dH_BC, dH_AD};
  for (double v : finite) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidParameters, "reactor parameters must be finite");
  }
}

OperatingPoint nominal_operating_point() {
  OperatingPoint op;
  op.u << 25.0, -4000.0;
  op.x << 3.161, 0.912, 108.53, 103.91, op.u[0], op.u[1];
  op.theta_d = 104.9;
  return op;
}

double reaction_rate(int i, double theta, const CstrParams& p) {
  if (!(theta > -273.15)) throw Error(ErrorCode::InvalidTemperature, "temperature at or below absolute zero");
  double k0 = 0.0, e = 0.0;
  switch (i) {
    case 1: k0 = p.k10; e = p.E1; break;
    case 2: k0 = p.k20; e = p.E2; break;
    case 3: k0 = p.k30; e = p.E3; break;
    default: throw Error(ErrorCode::OutOfRange, "reaction index must be 1, 2 or 3", i);
  }
  return k0 * std::exp(e / (theta + 273.15));
}

State derivative(const State& x, const Input& u_cmd, double theta_d, const CstrParams& p) {
  if (!x.allFinite() || !u_cmd.allFinite() || !std::isfinite(theta_d)) {
    throw Error(ErrorCode::NonFiniteState, "reactor state or input is not finite");
  }
  const double cA = x[0], cB = x[1], th = x[2], thK = x[3], FN = x[4], PK = x[5];
  const double k1 = reaction_rate(1, th, p), k2 = reaction_rate(2, th, p), k3 = reaction_rate(3, th, p);
  const double vol = p.volume_litres();
  const double hx = p.kw * p.AR;  // kJ/(h K)
  State d;
  d[0] = FN * (p.cA0 - cA) - k1 * cA - k3 * cA * cA;
  d[1] = -FN * cB + k1 * cA - k2 * cB;
  d[2] = FN * (theta_d - th) - (k1 * cA * p.dH_AB + k2 * cB * p.dH_BC + k3 * cA * cA * p.dH_AD) / (p.rho * p.Cp) +
         hx / (p.rho * p.Cp * vol) * (thK - th);
  d[3] = (PK + hx * (th - thK)) / (p.mK * p.CpK);
  d[4] = (u_cmd[0] - FN) * (3600.0 / p.T_FN);
  d[5] = (u_cmd[1] - PK) * (3600.0 / p.T_PK);
  return d;
}

State integrate_step(const State& x, const Input& u_cmd, double theta_d, const CstrParams& p, double sample_seconds,
                     int substeps) {
  if (!(sample_seconds > 0.0) || substeps < 1) {
    throw Error(ErrorCode::InvalidParameters, "integration needs a positive sample time and at least one substep");
  }
  const double h = sample_seconds / 3600.0 / substeps;
  State s = x;
  for (int k = 0; k < substeps; ++k) {
    const State k1 = derivative(s, u_cmd, theta_d, p);
    const State k2 = derivative(s + 0.5 * h * k1, u_cmd, theta_d, p);
    const State k3 = derivative(s + 0.5 * h * k2, u_cmd, theta_d, p);
    const State k4 = derivative(s + h * k3, u_cmd, theta_d, p);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!s.allFinite()) throw Error(ErrorCode::NonFiniteState, "integration produced a non-finite state");
  return s;
}

double singer_step(double theta_d, double noise, const SingerParams& s) {
  return s.pole * theta_d + (1.0 - s.pole) * s.theta0 + noise;
}

Output outputs(const State& x, const CstrParams& p) { return {x[1], x[1] * x[4] * p.volume_litres()}; }

State steady_state(const Input& u, double theta_d, const CstrParams& p, const State& guess) {
  using V4 = Eigen::Vector4d;
  using M4 = Eigen::Matrix4d;
  State x = guess;
  x.tail<2>() = u;
  auto residual = [&](const State& s) -> V4 { return derivative(s, u, theta_d, p).head<4>(); };
  V4 r = residual(x);
  for (int it = 0; it < 100; ++it) {
    if (r.lpNorm<Eigen::Infinity>() <= 1e-11) return x;
    M4 J;
    for (int j = 0; j < 4; ++j) {
      const double h = 1e-7 * (1.0 + std::abs(x[j]));
      State xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      J.col(j) = (residual(xp) - residual(xm)) / (2.0 * h);
    }
    const V4 step = J.partialPivLu().solve(-r);
    if (!step.allFinite()) break;
    // Backtracking on the residual norm keeps Newton from jumping across
    // the temperature-driven branches.
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      State trial = x;
      trial.head<4>() += t * step;
      if (trial[2] > -273.0) {
        const V4 rt = residual(trial);
        if (rt.allFinite() && rt.norm() < r.norm() * (1.0 - 1e-4 * t)) {
          x = trial;
          r = rt;
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Stagnation at round-off level counts as converged.
      if (r.lpNorm<Eigen::Infinity>() <= 1e-9) return x;
      break;
    }
  }
  if (r.lpNorm<Eigen::Infinity>() <= 1e-11) return x;
  throw Error(ErrorCode::NoSteadyStateFound,
              "Newton iteration did not reach a steady state (residual " + std::to_string(r.lpNorm<Eigen::Infinity>()) +
                  ")");
}

ContinuousModel linearize(const State& x, const Input& u, double theta_d, const CstrParams& p, double rel_step,
                          double equilibrium_tol) {
  const State f0 = derivative(x, u, theta_d, p);
  if (f0.lpNorm<Eigen::Infinity>() > equilibrium_tol) {
    throw Error(ErrorCode::NotAnEquilibrium,
                "derivative norm " + std::to_string(f0.lpNorm<Eigen::Infinity>()) + " exceeds the tolerance");
  }
  ContinuousModel m;
  m.Ac.resize(kStates, kStates);
  m.Bc.resize(kStates, kInputs);
  for (Index j = 0; j < kStates; ++j) {
    const double h = rel_step * (1.0 + std::abs(x[j]));
    State xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    m.Ac.col(j) = (derivative(xp, u, theta_d, p) - derivative(xm, u, theta_d, p)) / (2.0 * h);
  }
  for (Index j = 0; j < kInputs; ++j) {
    const double h = rel_step * (1.0 + std::abs(u[j]));
    Input up = u, um = u;
    up[j] += h;
    um[j] -= h;
    m.Bc.col(j) = (derivative(x, up, theta_d, p) - derivative(x, um, theta_d, p)) / (2.0 * h);
  }
  // The filter rows are linear; store them exactly.
  m.Ac.bottomRows(2).setZero();
  m.Ac(4, 4) = -3600.0 / p.T_FN;
  m.Ac(5, 5) = -3600.0 / p.T_PK;
  m.Bc.bottomRows(2).setZero();
  m.Bc(4, 0) = 3600.0 / p.T_FN;
  m.Bc(5, 1) = 3600.0 / p.T_PK;
  m.Bc.topRows(4).setZero();

  // y = (c_B, c_B F_N V): the production row couples c_B and the F_N filter.
  m.C = MatrixXd::Zero(kOutputs, kStates);
  m.C(0, 1) = 1.0;
  m.C(1, 1) = x[4] * p.volume_litres();
  m.C(1, 4) = x[1] * p.volume_litres();
  return m;
}

MatrixXd expm(const MatrixXd& M) {
  const Index n = M.rows();
  const double norm = M.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const MatrixXd A = M / std::ldexp(1.0, squarings);
  MatrixXd sum = MatrixXd::Identity(n, n);
  MatrixXd term = MatrixXd::Identity(n, n);
  for (int k = 1; k < 60; ++k) {
    term = term * A / static_cast<double>(k);
    sum += term;
    if (term.norm() <= 1e-13 * sum.norm()) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

std::pair<MatrixXd, MatrixXd> discretize(const MatrixXd& Ac, const MatrixXd& Bc, double sample_seconds) {
  if (!(sample_seconds > 0.0)) throw Error(ErrorCode::InvalidParameters, "sample time must be positive");
  const Index n = Ac.rows(), m = Bc.cols();
  if (Ac.cols() != n || Bc.rows() != n) throw Error(ErrorCode::DimensionMismatch, "Ac and Bc do not conform");
  const double t = sample_seconds / 3600.0;
  MatrixXd aug = MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = Ac * t;
  aug.topRightCorner(n, m) = Bc * t;
  const MatrixXd e = expm(aug);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

}  // namespace mpct::cstr
