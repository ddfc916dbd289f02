#pragma once

// Shared fixtures and independent oracles for the test suites. Nothing here
// calls into the structured solver paths it is used to check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mpct/model.hpp"

namespace mpct::testing {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd random_matrix(std::mt19937_64& rng, Index r, Index c, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  MatrixXd m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = nd(rng);
  return m;
}

inline VectorXd random_vector(std::mt19937_64& rng, Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale);
}

inline MatrixXd random_spd(std::mt19937_64& rng, Index n, double shift = 0.5) {
  const MatrixXd a = random_matrix(rng, n, n);
  return a * a.transpose() / static_cast<double>(n) + shift * MatrixXd::Identity(n, n);
}

inline MatrixXd random_diag_spd(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> ud(0.2, 5.0);
  VectorXd d(n);
  for (Index i = 0; i < n; ++i) d[i] = ud(rng);
  return d.asDiagonal();
}

/// Random model with spectral radius about 0.95 and generic (controllable)
/// input matrix.
struct RandomInstance {
  LinearModel model;
  ConstraintSet constraints;
  CostWeights weights;
  Index horizon = 0;
};

inline RandomInstance random_instance(std::mt19937_64& rng, Index n, Index m, Index nh, Index horizon,
                                      double bound_scale = 2.0) {
  RandomInstance inst;
  MatrixXd a = random_matrix(rng, n, n);
  Eigen::EigenSolver<MatrixXd> es(a, false);
  const double sr = es.eigenvalues().cwiseAbs().maxCoeff();
  inst.model.A = a * (0.95 / sr);
  inst.model.B = random_matrix(rng, n, m);
  inst.model.C = random_matrix(rng, std::min<Index>(m, n), n);
  inst.model.Bd = MatrixXd::Zero(n, inst.model.C.rows());
  inst.model.E = random_matrix(rng, nh, n);
  inst.model.F = random_matrix(rng, nh, m);
  std::uniform_real_distribution<double> ud(0.5, 1.5);
  auto bounds = [&](Index k, VectorXd& lo, VectorXd& hi) {
    lo.resize(k);
    hi.resize(k);
    for (Index i = 0; i < k; ++i) {
      lo[i] = -bound_scale * ud(rng);
      hi[i] = bound_scale * ud(rng);
    }
  };
  ConstraintSet& c = inst.constraints;
  bounds(n, c.x_lo, c.x_hi);
  bounds(m, c.u_lo, c.u_hi);
  bounds(nh, c.h_lo, c.h_hi);
  c.eta_x_lo = VectorXd::Zero(n);
  c.eta_x_hi = VectorXd::Zero(n);
  c.eta_h_lo = VectorXd::Zero(nh);
  c.eta_h_hi = VectorXd::Zero(nh);
  inst.weights.Q = random_spd(rng, n);
  inst.weights.R = random_spd(rng, m);
  inst.weights.T = random_spd(rng, n);
  inst.weights.S = random_spd(rng, m);
  inst.weights.beta = VectorXd::Constant(1, 100.0);
  inst.horizon = horizon;
  return inst;
}

/// Dense KKT oracle for min 1/2 z'Pz + p'z s.t. Gz = b: full-pivot LU of
/// [[P, G'], [G, 0]] in extended precision with one refinement step, so the
/// oracle stays accurate on poorly conditioned instances.
inline VectorXd dense_kkt_solve(const MatrixXd& P, const MatrixXd& G, const VectorXd& p, const VectorXd& b) {
  using ML = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using VL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const Index nz = P.rows(), mz = G.rows();
  ML K = ML::Zero(nz + mz, nz + mz);
  K.topLeftCorner(nz, nz) = P.cast<long double>();
  K.topRightCorner(nz, mz) = G.transpose().cast<long double>();
  K.bottomLeftCorner(mz, nz) = G.cast<long double>();
  VL rhs(nz + mz);
  rhs.head(nz) = -p.cast<long double>();
  rhs.tail(mz) = b.cast<long double>();
  const Eigen::FullPivLU<ML> lu(K);
  VL s = lu.solve(rhs);
  s += lu.solve(VL(rhs - K * s));
  return s.head(nz).cast<double>();
}

/// Scalar objective minimized by the soft-box proximal operator.
inline double soft_box_objective(double w, double c, double lo, double hi, double beta, double rho) {
  const double viol = std::max({w - hi, lo - w, 0.0});
  return 0.5 * rho * (w - c) * (w - c) + 0.5 * beta * viol;
}

/// Brute force: grid with spacing `step` over a bracket that surely holds
/// the minimizer, then golden-section refinement on the best cell. For a sum
/// of two convex scalar functions the minimizer lies between their
/// minimizers, here c and its projection onto [lo, hi].
inline double brute_force_soft_box(double c, double lo, double hi, double beta, double rho, double step = 1e-4) {
  const double proj = std::clamp(c, lo, hi);
  const double a = std::min(c, proj) - 2.0 * step;
  const double b = std::max(c, proj) + 2.0 * step;
  const long cells = static_cast<long>(std::ceil((b - a) / step));
  double best_w = a, best_f = std::numeric_limits<double>::infinity();
  for (long k = 0; k <= cells; ++k) {
    const double w = a + static_cast<double>(k) * step;
    const double f = soft_box_objective(w, c, lo, hi, beta, rho);
    if (f < best_f) {
      best_f = f;
      best_w = w;
    }
  }
  double l = best_w - step, r = best_w + step;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = r - g * (r - l), x2 = l + g * (r - l);
  double f1 = soft_box_objective(x1, c, lo, hi, beta, rho), f2 = soft_box_objective(x2, c, lo, hi, beta, rho);
  for (int it = 0; it < 200 && r - l > 1e-13; ++it) {
    if (f1 <= f2) {
      r = x2;
      x2 = x1;
      f2 = f1;
      x1 = r - g * (r - l);
      f1 = soft_box_objective(x1, c, lo, hi, beta, rho);
    } else {
      l = x1;
      x1 = x2;
      f1 = f2;
      x2 = l + g * (r - l);
      f2 = soft_box_objective(x2, c, lo, hi, beta, rho);
    }
  }
  return 0.5 * (l + r);
}

/// Dense matrices of the splitting, assembled directly from the stage-wise
/// definitions of cost, dynamics and constraint map.
struct DenseSplitting {
  MatrixXd H, G, D, P;
};

inline DenseSplitting dense_splitting(const LinearModel& mdl, const CostWeights& w, Index N, double rho) {
  const Index n = mdl.n(), m = mdl.m(), nh = mdl.nh(), sz = n + m, sv = n + m + nh;
  const Index nz = (N + 1) * sz;
  DenseSplitting d;
  // 1/2 sum_i |x_i - xs|_Q^2 + |u_i - us|_R^2 + 1/2 |xs|_T^2 + 1/2 |us|_S^2 as
  // a quadratic form, built term by term with selector matrices.
  d.H = MatrixXd::Zero(nz, nz);
  const Index t = N * sz;
  for (Index i = 0; i < N; ++i) {
    MatrixXd sel_x = MatrixXd::Zero(n, nz), sel_u = MatrixXd::Zero(m, nz);
    sel_x.block(0, i * sz, n, n).setIdentity();
    sel_x.block(0, t, n, n) -= MatrixXd::Identity(n, n);
    sel_u.block(0, i * sz + n, m, m).setIdentity();
    sel_u.block(0, t + n, m, m) -= MatrixXd::Identity(m, m);
    d.H += sel_x.transpose() * w.Q * sel_x + sel_u.transpose() * w.R * sel_u;
  }
  d.H.block(t, t, n, n) += w.T;
  d.H.block(t + n, t + n, m, m) += w.S;

  d.G = MatrixXd::Zero((N + 2) * n, nz);
  d.G.block(0, 0, n, n).setIdentity();
  for (Index j = 1; j <= N; ++j) {
    d.G.block(j * n, (j - 1) * sz, n, n) = mdl.A;
    d.G.block(j * n, (j - 1) * sz + n, n, m) = mdl.B;
    d.G.block(j * n, j * sz, n, n) -= MatrixXd::Identity(n, n);
  }
  d.G.block((N + 1) * n, t, n, n) = mdl.A - MatrixXd::Identity(n, n);
  d.G.block((N + 1) * n, t + n, n, m) = mdl.B;

  d.D = MatrixXd::Zero((N + 1) * sv, nz);
  for (Index i = 0; i <= N; ++i) {
    d.D.block(i * sv, i * sz, sz, sz).setIdentity();
    d.D.block(i * sv + sz, i * sz, nh, n) = mdl.E;
    d.D.block(i * sv + sz, i * sz + n, nh, m) = mdl.F;
  }
  d.P = d.H + rho * d.D.transpose() * d.D;
  return d;
}

/// Proximal step by enumerating the stationary candidates of the piecewise
/// quadratic and keeping the best one. beta = 0 with finite bounds means a
/// hard box.
inline double prox_by_candidates(double c, double lo, double hi, double beta, double rho) {
  if (beta == 0.0) return std::min(std::max(c, lo), hi);
  const double s = beta / (2.0 * rho);
  const double cand[] = {c, lo, hi, c + s, c - s};
  double best = c, best_f = std::numeric_limits<double>::infinity();
  for (double w : cand) {
    if (!std::isfinite(w)) continue;
    const double f = soft_box_objective(w, c, lo, hi, beta, rho);
    if (f < best_f) {
      best_f = f;
      best = w;
    }
  }
  return best;
}

/// Textbook ADMM on the dense splitting, for iterate-by-iterate comparison.
struct DenseAdmm {
  DenseSplitting s;
  VectorXd lo, hi, beta;
  double rho = 1.0;
  VectorXd q{}, b{}, z{}, v{}, lambda{};

  void step() {
    const VectorXd p = q + s.D.transpose() * (lambda - rho * v);
    z = dense_kkt_solve(s.P, s.G, p, b);
    const VectorXd dz = s.D * z;
    VectorXd c = dz + lambda / rho;
    for (Index j = 0; j < c.size(); ++j) v[j] = prox_by_candidates(c[j], lo[j], hi[j], beta[j], rho);
    lambda += rho * (dz - v);
  }
};

inline double rel_inf_error(const VectorXd& a, const VectorXd& b) {
  return (a - b).lpNorm<Eigen::Infinity>() / std::max(1.0, b.lpNorm<Eigen::Infinity>());
}

}  // namespace mpct::testing
