#include "mpct/offset_free.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>

namespace mpct {

MatrixXd augmented_A(const LinearModel& model) {
  const Index n = model.n(), p = model.p();
  MatrixXd a = MatrixXd::Zero(n + p, n + p);
  a.topLeftCorner(n, n) = model.A;
  a.topRightCorner(n, p) = model.Bd;
  a.bottomRightCorner(p, p).setIdentity();
  return a;
}

MatrixXd augmented_C(const LinearModel& model) {
  const Index n = model.n(), p = model.p();
  MatrixXd c(p, n + p);
  c.leftCols(n) = model.C;
  c.rightCols(p).setIdentity();
  return c;
}

EstimatorState observer_update(const EstimatorState& est, const ObserverGains& gains, const LinearModel& model,
                               const VectorXd& u, const VectorXd& y) {
  const Index n = model.n(), p = model.p();
  if (est.x_hat.size() != n || est.d_hat.size() != p || u.size() != model.m() || y.size() != p ||
      gains.Lx.rows() != n || gains.Lx.cols() != p || gains.Ld.rows() != p || gains.Ld.cols() != p) {
    throw Error(ErrorCode::DimensionMismatch, "observer operands have inconsistent dimensions");
  }
  const VectorXd innovation = model.C * est.x_hat + est.d_hat - y;
  EstimatorState next;
  next.x_hat = model.A * est.x_hat + model.Bd * est.d_hat + model.B * u + gains.Lx * innovation;
  next.d_hat = est.d_hat + gains.Ld * innovation;
  return next;
}

double spectral_radius(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double estimator_spectral_radius(const LinearModel& model, const ObserverGains& gains) {
  MatrixXd l(model.n() + model.p(), model.p());
  l.topRows(model.n()) = gains.Lx;
  l.bottomRows(model.p()) = gains.Ld;
  return spectral_radius(augmented_A(model) + l * augmented_C(model));
}

double dare_residual(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R, const MatrixXd& X) {
  const MatrixXd btx = B.transpose() * X;
  const MatrixXd k = (R + btx * B).ldlt().solve(btx * A);
  const MatrixXd rhs = A.transpose() * X * A - A.transpose() * X * B * k + Q;
  const double nx = X.norm();
  return (X - rhs).norm() / (nx > 0.0 ? nx : 1.0);
}

DareResult solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R) {
  const Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != B.cols() ||
      R.cols() != B.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "Riccati operands have inconsistent dimensions");
  }
  constexpr int kMaxIter = 10000;
  constexpr double kTol = 1e-12;
  const MatrixXd I = MatrixXd::Identity(n, n);
  MatrixXd a = A;
  MatrixXd g = B * R.ldlt().solve(B.transpose());
  MatrixXd h = Q;
  DareResult res;
  for (int k = 1; k <= kMaxIter; ++k) {
    Eigen::PartialPivLU<MatrixXd> w(I + g * h);
    const MatrixXd wa = w.solve(a);
    const MatrixXd wg = w.solve(g);
    const MatrixXd h_next = h + a.transpose() * h * wa;
    const MatrixXd g_next = g + a * wg * a.transpose();
    const MatrixXd a_next = a * wa;
    const double change = (h_next - h).norm();
    h = 0.5 * (h_next + h_next.transpose());
    g = 0.5 * (g_next + g_next.transpose());
    a = a_next;
    res.iterations = k;
    if (!h.allFinite()) break;
    if (change <= kTol * h.norm()) {
      res.X = h;
      res.relative_residual = dare_residual(A, B, Q, R, h);
      const MatrixXd btx = B.transpose() * h;
      const MatrixXd gain = (R + btx * B).ldlt().solve(btx * A);
      if (spectral_radius(A - B * gain) >= 1.0) {
        throw Error(ErrorCode::RiccatiNoStabilizingSolution, "Riccati solution is not stabilizing");
      }
      return res;
    }
  }
  throw Error(ErrorCode::RiccatiNoStabilizingSolution, "doubling iteration did not converge");
}

ObserverGains design_observer_gains(const LinearModel& model, const MatrixXd& q_obs, const MatrixXd& r_obs) {
  const Index n = model.n(), p = model.p();
  if (q_obs.rows() != n + p || q_obs.cols() != n + p || r_obs.rows() != p || r_obs.cols() != p) {
    throw Error(ErrorCode::DimensionMismatch, "observer weights have the wrong dimension");
  }
  require_positive_definite(q_obs, "observer Q");
  require_positive_definite(r_obs, "observer R");
  const MatrixXd ad = augmented_A(model).transpose();
  const MatrixXd bd = augmented_C(model).transpose();
  const DareResult dare = solve_dare(ad, bd, q_obs, r_obs);
  const MatrixXd btx = bd.transpose() * dare.X;
  const MatrixXd k = (r_obs + btx * bd).ldlt().solve(btx * ad);
  const MatrixXd l = -k.transpose();
  return {l.topRows(n), l.bottomRows(p)};
}

SteadyReference compute_reference(const LinearModel& model, const VectorXd& y_r, const VectorXd& d_hat) {
  const Index n = model.n(), m = model.m(), p = model.p();
  if (y_r.size() != p || d_hat.size() != p) {
    throw Error(ErrorCode::DimensionMismatch, "reference or disturbance has the wrong dimension");
  }
  MatrixXd M = MatrixXd::Zero(n + p, n + m);
  M.topLeftCorner(n, n) = model.A - MatrixXd::Identity(n, n);
  M.topRightCorner(n, m) = model.B;
  M.bottomLeftCorner(p, n) = model.C;
  VectorXd rhs(n + p);
  rhs.head(n) = -(model.Bd * d_hat);
  rhs.tail(p) = y_r - d_hat;

  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  const VectorXd sol = svd.solve(rhs);
  const double resid = (M * sol - rhs).norm();
  if (!sol.allFinite() || resid > 1e-8 * (1.0 + rhs.norm())) {
    throw Error(ErrorCode::RankDeficient, "steady-state reference system has no solution");
  }
  return {sol.head(n), sol.tail(m)};
}

}  // namespace mpct
