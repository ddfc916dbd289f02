#include "mpct/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <string>

namespace mpct {

namespace {

void require_size(const VectorXd& v, Index n, const char* name) {
  if (v.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(name) + " has length " + std::to_string(v.size()) + ", expected " + std::to_string(n));
  }
}

void require_shape(const MatrixXd& m, Index r, Index c, const char* name) {
  if (m.rows() != r || m.cols() != c) {
    throw Error(ErrorCode::DimensionMismatch, std::string(name) + " is " + std::to_string(m.rows()) + "x" +
                                                  std::to_string(m.cols()) + ", expected " + std::to_string(r) +
                                                  "x" + std::to_string(c));
  }
}

void require_strict_order(const VectorXd& lo, const VectorXd& hi, const char* name) {
  for (Index i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) {
      throw Error(ErrorCode::InvalidBounds, std::string(name) + " bounds are empty at component " + std::to_string(i),
                  static_cast<long>(i));
    }
  }
}

void require_nonnegative(const VectorXd& v, const char* name) {
  for (Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0)) {
      throw Error(ErrorCode::InvalidBounds, std::string(name) + " must be nonnegative", static_cast<long>(i));
    }
  }
}

}  // namespace

void LinearModel::validate() const {
  const Index nx = n();
  require_shape(A, nx, nx, "A");
  require_shape(B, nx, B.cols(), "B");
  if (B.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "model has no inputs");
  require_shape(C, C.rows(), nx, "C");
  require_shape(Bd, nx, p(), "Bd");
  require_shape(E, E.rows(), nx, "E");
  require_shape(F, nh(), m(), "F");
}

ConstraintSet ConstraintSet::unbounded(Index n, Index m, Index nh, const VectorXd& u_lo, const VectorXd& u_hi) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  ConstraintSet c;
  c.x_lo = VectorXd::Constant(n, -inf);
  c.x_hi = VectorXd::Constant(n, inf);
  c.u_lo = u_lo;
  c.u_hi = u_hi;
  c.h_lo = VectorXd::Constant(nh, -inf);
  c.h_hi = VectorXd::Constant(nh, inf);
  c.eta_x_lo = VectorXd::Zero(n);
  c.eta_x_hi = VectorXd::Zero(n);
  c.eta_h_lo = VectorXd::Zero(nh);
  c.eta_h_hi = VectorXd::Zero(nh);
  (void)m;
  return c;
}

void ConstraintSet::validate(const LinearModel& model) const {
  const Index n = model.n(), m = model.m(), nh = model.nh();
  require_size(x_lo, n, "x_lo");
  require_size(x_hi, n, "x_hi");
  require_size(u_lo, m, "u_lo");
  require_size(u_hi, m, "u_hi");
  require_size(h_lo, nh, "h_lo");
  require_size(h_hi, nh, "h_hi");
  require_size(eta_x_lo, n, "eta_x_lo");
  require_size(eta_x_hi, n, "eta_x_hi");
  require_size(eta_h_lo, nh, "eta_h_lo");
  require_size(eta_h_hi, nh, "eta_h_hi");
  require_nonnegative(eta_x_lo, "eta_x_lo");
  require_nonnegative(eta_x_hi, "eta_x_hi");
  require_nonnegative(eta_h_lo, "eta_h_lo");
  require_nonnegative(eta_h_hi, "eta_h_hi");
  require_strict_order(tightened_x_lo(), tightened_x_hi(), "tightened x");
  require_strict_order(tightened_h_lo(), tightened_h_hi(), "tightened h");
  require_strict_order(u_lo, u_hi, "u");
  for (Index i = 0; i < m; ++i) {
    if (!std::isfinite(u_lo[i]) || !std::isfinite(u_hi[i])) {
      throw Error(ErrorCode::InvalidBounds, "input bounds must be finite", static_cast<long>(i));
    }
  }
}

void require_positive_definite(const MatrixXd& m, const char* name) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, std::string(name) + " must be square and nonempty");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::NotPositiveDefinite, std::string(name) + " is not symmetric");
  }
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, std::string(name) + " is not positive definite");
  }
}

void CostWeights::validate(const LinearModel& model) const {
  require_shape(Q, model.n(), model.n(), "Q");
  require_shape(R, model.m(), model.m(), "R");
  require_shape(T, model.n(), model.n(), "T");
  require_shape(S, model.m(), model.m(), "S");
  require_positive_definite(Q, "Q");
  require_positive_definite(R, "R");
  require_positive_definite(T, "T");
  require_positive_definite(S, "S");
  if (beta.size() == 0) throw Error(ErrorCode::DimensionMismatch, "beta is empty");
  for (Index i = 0; i < beta.size(); ++i) {
    if (!(beta[i] > 0.0)) throw Error(ErrorCode::InvalidParameters, "beta must be positive", static_cast<long>(i));
  }
}

Preconditioner Preconditioner::identity(Index n, Index m, Index nh) {
  return {VectorXd::Ones(n), VectorXd::Ones(m), VectorXd::Ones(nh)};
}

bool Preconditioner::is_identity() const {
  return (Nx.array() == 1.0).all() && (Nu.array() == 1.0).all() && (Nc.array() == 1.0).all();
}

void Preconditioner::validate(Index n, Index m, Index nh) const {
  require_size(Nx, n, "Nx");
  require_size(Nu, m, "Nu");
  require_size(Nc, nh, "Nc");
  auto positive = [](const VectorXd& v, const char* name) {
    for (Index i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
        throw Error(ErrorCode::NonpositiveScaling, std::string(name) + " entries must be positive",
                    static_cast<long>(i));
      }
    }
  };
  positive(Nx, "Nx");
  positive(Nu, "Nu");
  positive(Nc, "Nc");
}

namespace {

// Applies x~ = sx x, u~ = su u, h~ = sc h for arbitrary positive diagonals.
ScaledProblem scale_problem(const LinearModel& model, const ConstraintSet& cons, const CostWeights& w,
                            const VectorXd& sx, const VectorXd& su, const VectorXd& sc) {
  const auto Sx = sx.asDiagonal();
  const auto Sc = sc.asDiagonal();
  const VectorXd ix = sx.cwiseInverse();
  const VectorXd iu = su.cwiseInverse();
  const auto Ix = ix.asDiagonal();
  const auto Iu = iu.asDiagonal();

  ScaledProblem out;
  out.model.A = Sx * model.A * Ix;
  out.model.B = Sx * model.B * Iu;
  out.model.C = model.C * Ix;
  out.model.Bd = Sx * model.Bd;
  out.model.E = Sc * model.E * Ix;
  out.model.F = Sc * model.F * Iu;

  out.constraints.x_lo = cons.x_lo.cwiseProduct(sx);
  out.constraints.x_hi = cons.x_hi.cwiseProduct(sx);
  out.constraints.u_lo = cons.u_lo.cwiseProduct(su);
  out.constraints.u_hi = cons.u_hi.cwiseProduct(su);
  out.constraints.h_lo = cons.h_lo.cwiseProduct(sc);
  out.constraints.h_hi = cons.h_hi.cwiseProduct(sc);
  out.constraints.eta_x_lo = cons.eta_x_lo.cwiseProduct(sx);
  out.constraints.eta_x_hi = cons.eta_x_hi.cwiseProduct(sx);
  out.constraints.eta_h_lo = cons.eta_h_lo.cwiseProduct(sc);
  out.constraints.eta_h_hi = cons.eta_h_hi.cwiseProduct(sc);

  out.weights.Q = Ix * w.Q * Ix;
  out.weights.T = Ix * w.T * Ix;
  out.weights.R = Iu * w.R * Iu;
  out.weights.S = Iu * w.S * Iu;
  out.weights.beta = w.beta;
  return out;
}

}  // namespace

ScaledProblem precondition(const LinearModel& model, const ConstraintSet& constraints, const CostWeights& weights,
                           const Preconditioner& scaling) {
  model.validate();
  scaling.validate(model.n(), model.m(), model.nh());
  return scale_problem(model, constraints, weights, scaling.Nx, scaling.Nu, scaling.Nc);
}

ScaledProblem unprecondition(const LinearModel& model, const ConstraintSet& constraints, const CostWeights& weights,
                             const Preconditioner& scaling) {
  model.validate();
  scaling.validate(model.n(), model.m(), model.nh());
  return scale_problem(model, constraints, weights, scaling.Nx.cwiseInverse(), scaling.Nu.cwiseInverse(),
                       scaling.Nc.cwiseInverse());
}

Index numerical_rank(const MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s[i] > rel_tol * s[0]) ++r;
  }
  return r;
}

ControllabilityInfo controllability_index(const MatrixXd& A, const MatrixXd& B) {
  const Index n = A.rows();
  ControllabilityInfo info;
  MatrixXd ctrb(n, 0);
  MatrixXd power = B;
  Index best_rank = -1;
  for (Index k = 1; k <= n; ++k) {
    ctrb.conservativeResize(n, ctrb.cols() + B.cols());
    ctrb.rightCols(B.cols()) = power;
    const Index r = numerical_rank(ctrb);
    if (r > best_rank) {
      best_rank = r;
      info.index = k;
    }
    if (r == n) break;
    power = A * power;
  }
  info.rank = best_rank;
  info.controllable = best_rank == n;
  return info;
}

bool is_observable(const MatrixXd& A, const MatrixXd& C) {
  const Index n = A.rows();
  MatrixXd obs(0, n);
  MatrixXd power = C;
  for (Index k = 0; k < n; ++k) {
    obs.conservativeResize(obs.rows() + C.rows(), n);
    obs.bottomRows(C.rows()) = power;
    power = power * A;
  }
  return numerical_rank(obs) == n;
}

}  // namespace mpct
