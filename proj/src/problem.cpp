#include "mpct/problem.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <string>

namespace mpct {

using linalg::BandedCholesky;
using linalg::BlockDiagonal;
using linalg::LowRankCorrection;
using linalg::Woodbury;

void ProblemData::apply_D(const VectorXd& z, VectorXd& v) const {
  const Index n = dims_.n, m = dims_.m, nh = dims_.nh, sz = dims_.stage_z(), sv = dims_.stage_v();
  v.resize(dims_.nv());
  for (Index i = 0; i <= dims_.N; ++i) {
    const auto x = z.segment(i * sz, n);
    const auto u = z.segment(i * sz + n, m);
    v.segment(i * sv, n) = x;
    v.segment(i * sv + n, m) = u;
    auto h = v.segment(i * sv + n + m, nh);
    h.noalias() = model_.E * x;
    h.noalias() += model_.F * u;
  }
}

void ProblemData::apply_Dt(const VectorXd& v, VectorXd& z) const {
  const Index n = dims_.n, m = dims_.m, nh = dims_.nh, sz = dims_.stage_z(), sv = dims_.stage_v();
  z.resize(dims_.nz());
  for (Index i = 0; i <= dims_.N; ++i) {
    const auto h = v.segment(i * sv + n + m, nh);
    auto x = z.segment(i * sz, n);
    auto u = z.segment(i * sz + n, m);
    x = v.segment(i * sv, n);
    x.noalias() += model_.E.transpose() * h;
    u = v.segment(i * sv + n, m);
    u.noalias() += model_.F.transpose() * h;
  }
}

void ProblemData::apply_G(const VectorXd& z, VectorXd& r) const {
  const Index n = dims_.n, m = dims_.m, sz = dims_.stage_z(), N = dims_.N;
  r.resize(dims_.mz());
  r.head(n) = z.head(n);
  for (Index j = 1; j <= N; ++j) {
    auto row = r.segment(j * n, n);
    row.noalias() = model_.A * z.segment((j - 1) * sz, n);
    row.noalias() += model_.B * z.segment((j - 1) * sz + n, m);
    row -= z.segment(j * sz, n);
  }
  auto last = r.segment((N + 1) * n, n);
  const auto xs = z.segment(N * sz, n);
  last.noalias() = model_.A * xs;
  last -= xs;
  last.noalias() += model_.B * z.segment(N * sz + n, m);
}

void ProblemData::apply_Gt(const VectorXd& mu, VectorXd& z) const {
  const Index n = dims_.n, m = dims_.m, sz = dims_.stage_z(), N = dims_.N;
  z.setZero(dims_.nz());
  z.head(n) = mu.head(n);
  for (Index j = 1; j <= N; ++j) {
    const auto mj = mu.segment(j * n, n);
    z.segment((j - 1) * sz, n).noalias() += model_.A.transpose() * mj;
    z.segment((j - 1) * sz + n, m).noalias() += model_.B.transpose() * mj;
    z.segment(j * sz, n) -= mj;
  }
  const auto ml = mu.segment((N + 1) * n, n);
  z.segment(N * sz, n).noalias() += model_.A.transpose() * ml;
  z.segment(N * sz, n) -= ml;
  z.segment(N * sz + n, m).noalias() += model_.B.transpose() * ml;
}

VectorXd ProblemData::linear_cost(const VectorXd& x_r_scaled, const VectorXd& u_r_scaled) const {
  const Index n = dims_.n, m = dims_.m, sz = dims_.stage_z(), N = dims_.N;
  if (x_r_scaled.size() != n || u_r_scaled.size() != m) {
    throw Error(ErrorCode::DimensionMismatch, "reference has the wrong dimension");
  }
  VectorXd q = VectorXd::Zero(dims_.nz());
  q.segment(N * sz, n).noalias() = -(weights_.T * x_r_scaled);
  q.segment(N * sz + n, m).noalias() = -(weights_.S * u_r_scaled);
  return q;
}

VectorXd ProblemData::equality_rhs(const VectorXd& x_hat_scaled, const VectorXd& d_hat) const {
  const Index n = dims_.n;
  if (x_hat_scaled.size() != n || d_hat.size() != model_.p()) {
    throw Error(ErrorCode::DimensionMismatch, "state or disturbance estimate has the wrong dimension");
  }
  VectorXd b(dims_.mz());
  b.head(n) = x_hat_scaled;
  const VectorXd bd = -(model_.Bd * d_hat);
  for (Index j = 1; j <= dims_.N + 1; ++j) b.segment(j * n, n) = bd;
  return b;
}

void ProblemData::apply_P(const VectorXd& z, VectorXd& out) const {
  const auto& y = p_solver_.base();
  const auto& lr = p_solver_.correction();
  out.resize(z.size());
  for (Index b = 0; b < y.block_count(); ++b) {
    const Index o = y.block_offset(b), k = y.block(b).rows();
    out.segment(o, k).noalias() = y.block(b) * z.segment(o, k);
  }
  const VectorXd vz = lr.V.transpose() * z;
  out.noalias() += lr.U * vz;
}

void ProblemData::solve_range_space(const VectorXd& p, const VectorXd& b, VectorXd& z, VectorXd& mu) const {
  VectorXd xi = p;
  p_solver_.solve_in_place(xi);
  apply_G(xi, mu);
  mu += b;
  mu = -mu;
  w_solver_.solve_in_place(mu);
  apply_Gt(mu, z);
  z += p;
  p_solver_.solve_in_place(z);
  z = -z;
}

void ProblemData::solve_equality_qp(const VectorXd& p, const VectorXd& b, VectorXd& z) const {
  if (p.size() != dims_.nz() || b.size() != dims_.mz()) {
    throw Error(ErrorCode::DimensionMismatch, "equality QP data has the wrong dimension");
  }
  VectorXd mu;
  solve_range_space(p, b, z, mu);

  // One step of iterative refinement on the full KKT system. Forming W
  // squares the conditioning of G, so the plain range-space solve loses
  // digits on weakly controllable models; the correction recovers them.
  VectorXd r1, r2, gt_mu, dz, dmu;
  apply_P(z, r1);
  apply_Gt(mu, gt_mu);
  r1 += gt_mu;
  r1 += p;
  apply_G(z, r2);
  r2 = b - r2;
  solve_range_space(r1, r2, dz, dmu);
  z += dz;
}

MatrixXd ProblemData::hessian() const {
  const Index n = dims_.n, m = dims_.m, sz = dims_.stage_z(), N = dims_.N;
  MatrixXd H = MatrixXd::Zero(dims_.nz(), dims_.nz());
  const Index t = N * sz;
  for (Index i = 0; i < N; ++i) {
    const Index o = i * sz;
    H.block(o, o, n, n) = weights_.Q;
    H.block(o + n, o + n, m, m) = weights_.R;
    H.block(o, t, n, n) = -weights_.Q;
    H.block(t, o, n, n) = -weights_.Q;
    H.block(o + n, t + n, m, m) = -weights_.R;
    H.block(t + n, o + n, m, m) = -weights_.R;
  }
  H.block(t, t, n, n) = static_cast<double>(N) * weights_.Q + weights_.T;
  H.block(t + n, t + n, m, m) = static_cast<double>(N) * weights_.R + weights_.S;
  return H;
}

MatrixXd ProblemData::constraint_map() const {
  const Index n = dims_.n, m = dims_.m, nh = dims_.nh, sz = dims_.stage_z(), sv = dims_.stage_v();
  MatrixXd D = MatrixXd::Zero(dims_.nv(), dims_.nz());
  for (Index i = 0; i <= dims_.N; ++i) {
    D.block(i * sv, i * sz, n + m, n + m).setIdentity();
    D.block(i * sv + n + m, i * sz, nh, n) = model_.E;
    D.block(i * sv + n + m, i * sz + n, nh, m) = model_.F;
  }
  return D;
}

MatrixXd ProblemData::kkt_hessian() const {
  const MatrixXd D = constraint_map();
  return hessian() + rho_ * D.transpose() * D;
}

MatrixXd ProblemData::equality_matrix() const {
  const Index n = dims_.n, m = dims_.m, sz = dims_.stage_z(), N = dims_.N;
  MatrixXd G = MatrixXd::Zero(dims_.mz(), dims_.nz());
  G.block(0, 0, n, n).setIdentity();
  for (Index j = 1; j <= N; ++j) {
    G.block(j * n, (j - 1) * sz, n, n) = model_.A;
    G.block(j * n, (j - 1) * sz + n, n, m) = model_.B;
    G.block(j * n, j * sz, n, n) = -MatrixXd::Identity(n, n);
  }
  G.block((N + 1) * n, N * sz, n, n) = model_.A - MatrixXd::Identity(n, n);
  G.block((N + 1) * n, N * sz + n, n, m) = model_.B;
  return G;
}

MatrixXd ProblemData::w_matrix() const {
  const MatrixXd G = equality_matrix();
  return G * p_solver_.solve(MatrixXd(G.transpose()));
}

MatrixXd ProblemData::gamma_matrix() const {
  const MatrixXd G = equality_matrix();
  return G * p_solver_.base().solve(MatrixXd(G.transpose()));
}

namespace {

// Bounds and penalties for every v component; see ProblemData::v_lo().
void assemble_v_bounds(const ProblemDims& d, const ConstraintSet& c, const VectorXd& beta, VectorXd& lo, VectorXd& hi,
                       VectorXd& pen) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const Index n = d.n, m = d.m, nh = d.nh, sv = d.stage_v();
  lo.resize(d.nv());
  hi.resize(d.nv());
  pen.resize(d.nv());
  const VectorXd xlo = c.tightened_x_lo(), xhi = c.tightened_x_hi();
  const VectorXd hlo = c.tightened_h_lo(), hhi = c.tightened_h_hi();
  for (Index i = 0; i <= d.N; ++i) {
    const Index o = i * sv;
    lo.segment(o, n) = xlo;
    hi.segment(o, n) = xhi;
    lo.segment(o + n, m) = c.u_lo;
    hi.segment(o + n, m) = c.u_hi;
    lo.segment(o + n + m, nh) = hlo;
    hi.segment(o + n + m, nh) = hhi;
  }
  lo.head(n).setConstant(-inf);
  hi.head(n).setConstant(inf);
  pen.head(n + m).setZero();
  const Index nt = d.n_theta();
  if (beta.size() == 1) {
    pen.tail(nt).setConstant(beta[0]);
  } else if (beta.size() == nt) {
    pen.tail(nt) = beta;
  } else {
    throw Error(ErrorCode::DimensionMismatch,
                "beta must have 1 or " + std::to_string(nt) + " entries, got " + std::to_string(beta.size()));
  }
}

}  // namespace

ProblemData build_problem(const LinearModel& model_in, const ConstraintSet& constraints_in,
                          const CostWeights& weights_in, Index horizon, double rho, const Preconditioner* scaling) {
  model_in.validate();
  constraints_in.validate(model_in);
  weights_in.validate(model_in);
  if (!(rho > 0.0)) throw Error(ErrorCode::InvalidParameters, "rho must be positive");
  if (horizon < 1) throw Error(ErrorCode::HorizonTooShort, "horizon must be at least 1");

  ProblemData pd;
  pd.dims_ = {model_in.n(), model_in.m(), model_in.nh(), horizon};
  pd.rho_ = rho;
  pd.phys_u_lo_ = constraints_in.u_lo;
  pd.phys_u_hi_ = constraints_in.u_hi;
  if (scaling != nullptr) {
    ScaledProblem s = precondition(model_in, constraints_in, weights_in, *scaling);
    pd.model_ = std::move(s.model);
    pd.constraints_ = std::move(s.constraints);
    pd.weights_ = std::move(s.weights);
    pd.scaling_ = *scaling;
  } else {
    pd.model_ = model_in;
    pd.constraints_ = constraints_in;
    pd.weights_ = weights_in;
    pd.scaling_ = Preconditioner::identity(model_in.n(), model_in.m(), model_in.nh());
  }

  // The reachable subspace of the disturbance-augmented model is that of
  // (A, B) padded with zeros, so its controllability index is the one of
  // (A, B).
  pd.ctrb_ = controllability_index(model_in.A, model_in.B);
  if (horizon <= pd.ctrb_.index) {
    throw Error(ErrorCode::HorizonTooShort,
                "horizon " + std::to_string(horizon) + " must exceed the controllability index " +
                    std::to_string(pd.ctrb_.index),
                static_cast<long>(pd.ctrb_.index));
  }

  const ProblemDims& d = pd.dims_;
  assemble_v_bounds(d, pd.constraints_, pd.weights_.beta, pd.v_lo_, pd.v_hi_, pd.v_beta_);

  const Index n = d.n, m = d.m, sz = d.stage_z(), N = d.N;
  const MatrixXd& Q = pd.weights_.Q;
  const MatrixXd& R = pd.weights_.R;
  const MatrixXd& E = pd.model_.E;
  const MatrixXd& F = pd.model_.F;

  // rho D_i' D_i, identical for every stage.
  MatrixXd dtd(sz, sz);
  dtd.topLeftCorner(n, n) = MatrixXd::Identity(n, n) + E.transpose() * E;
  dtd.topRightCorner(n, m) = E.transpose() * F;
  dtd.bottomLeftCorner(m, n) = F.transpose() * E;
  dtd.bottomRightCorner(m, m) = MatrixXd::Identity(m, m) + F.transpose() * F;
  dtd *= rho;

  MatrixXd stage_cost = MatrixXd::Zero(sz, sz);
  stage_cost.topLeftCorner(n, n) = Q;
  stage_cost.bottomRightCorner(m, m) = R;

  std::vector<MatrixXd> blocks;
  blocks.reserve(static_cast<size_t>(N + 1));
  for (Index i = 0; i < N; ++i) blocks.push_back(stage_cost + dtd);
  MatrixXd terminal = static_cast<double>(N) * stage_cost + dtd;
  terminal.topLeftCorner(n, n) += pd.weights_.T;
  terminal.bottomRightCorner(m, m) += pd.weights_.S;
  blocks.push_back(terminal);

  BlockDiagonal Y(std::move(blocks));
  Y.factor();

  // Couplings -K between each stage and the reference: U V' = -(Phi K Psi' + Psi K Phi').
  const Index nzv = d.nz();
  MatrixXd U = MatrixXd::Zero(nzv, 2 * sz);
  MatrixXd V = MatrixXd::Zero(nzv, 2 * sz);
  for (Index i = 0; i < N; ++i) {
    U.block(i * sz, 0, sz, sz) = -stage_cost;
    V.block(i * sz, sz, sz, sz).setIdentity();
  }
  U.block(N * sz, sz, sz, sz) = -stage_cost;
  V.block(N * sz, 0, sz, sz).setIdentity();

  pd.p_solver_ = Woodbury<BlockDiagonal>(Y, LowRankCorrection{U, V});

  // W = Gamma + U~ V~' with Gamma = G Y^-1 G', U~ = -G Y^-1 U and
  // V~' = C^-1 V' Y^-1 G' (C the P-level capacitance).
  const MatrixXd G = pd.equality_matrix();
  const MatrixXd yinv_gt = Y.solve(MatrixXd(G.transpose()));
  MatrixXd gamma = G * yinv_gt;
  const Index bw = d.gamma_bandwidth();
  for (Index j = 0; j < gamma.cols(); ++j) {
    for (Index i = 0; i < gamma.rows(); ++i) {
      if (std::abs(i - j) > bw) gamma(i, j) = 0.0;
    }
  }
  gamma = 0.5 * (gamma + gamma.transpose()).eval();
  BandedCholesky gamma_factor = BandedCholesky::factor(gamma, bw);

  const MatrixXd& yinv_u = pd.p_solver_.base_inverse_times_u();
  MatrixXd u_w = -(G * yinv_u);
  const MatrixXd vt_yinv_gt = V.transpose() * yinv_gt;
  Eigen::PartialPivLU<MatrixXd> cap_lu(pd.p_solver_.capacitance());
  MatrixXd v_w = cap_lu.solve(vt_yinv_gt).transpose();

  pd.w_solver_ = Woodbury<BandedCholesky>(std::move(gamma_factor), LowRankCorrection{u_w, v_w});
  return pd;
}

}  // namespace mpct
