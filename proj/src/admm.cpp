#include "mpct/admm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mpct {

void AdmmSettings::validate() const {
  if (!(eps_p > 0.0) || !(eps_d > 0.0)) throw Error(ErrorCode::InvalidParameters, "tolerances must be positive");
  if (max_iter < 1) throw Error(ErrorCode::InvalidParameters, "max_iter must be at least 1");
  if (iter_budget < 0) throw Error(ErrorCode::InvalidParameters, "iter_budget must be nonnegative");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::BudgetExhausted: return "budget_exhausted";
    case SolveStatus::MaxIterationsExceeded: return "max_iterations";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

double prox_soft_box(double c, double lo, double hi, double beta, double rho) {
  if (!(lo < hi) || !(beta > 0.0) || !(rho > 0.0)) {
    throw Error(ErrorCode::InvalidBounds, "prox_soft_box needs lo < hi, beta > 0, rho > 0");
  }
  const double shift = beta / (2.0 * rho);
  if (c + shift <= lo) return c + shift;
  if (c < lo) return lo;
  if (c <= hi) return c;
  if (c - shift < hi) return hi;
  return c - shift;
}

namespace {

// Unchecked variant for the inner loop; the problem build already
// guarantees lo < hi and positive penalties on softened entries.
inline double prox_unchecked(double c, double lo, double hi, double shift) {
  if (c + shift <= lo) return c + shift;
  if (c < lo) return lo;
  if (c <= hi) return c;
  if (c - shift < hi) return hi;
  return c - shift;
}

void v_update_into(const ProblemData& problem, const VectorXd& dz, const VectorXd& lambda, VectorXd& v) {
  const ProblemDims& d = problem.dims();
  const double rho = problem.rho();
  const double inv_rho = 1.0 / rho;
  const VectorXd& lo = problem.v_lo();
  const VectorXd& hi = problem.v_hi();
  const VectorXd& beta = problem.v_beta();
  const Index nv = d.nv();
  v.resize(nv);
  for (Index j = 0; j < d.n; ++j) v[j] = dz[j] + inv_rho * lambda[j];
  for (Index j = d.n; j < d.n + d.m; ++j) v[j] = std::clamp(dz[j] + inv_rho * lambda[j], lo[j], hi[j]);
  for (Index j = d.n + d.m; j < nv; ++j) {
    v[j] = prox_unchecked(dz[j] + inv_rho * lambda[j], lo[j], hi[j], beta[j] / (2.0 * rho));
  }
}

}  // namespace

VectorXd update_z(const ProblemData& problem, const VectorXd& q, const VectorXd& b, const VectorXd& v,
                  const VectorXd& lambda) {
  const ProblemDims& d = problem.dims();
  if (v.size() != d.nv() || lambda.size() != d.nv() || q.size() != d.nz() || b.size() != d.mz()) {
    throw Error(ErrorCode::DimensionMismatch, "update_z operands have the wrong dimension");
  }
  VectorXd p;
  problem.apply_Dt(lambda - problem.rho() * v, p);
  p += q;
  VectorXd z;
  problem.solve_equality_qp(p, b, z);
  return z;
}

VectorXd update_v(const ProblemData& problem, const VectorXd& dz, const VectorXd& lambda) {
  const ProblemDims& d = problem.dims();
  if (dz.size() != d.nv() || lambda.size() != d.nv()) {
    throw Error(ErrorCode::DimensionMismatch, "update_v operands have the wrong dimension");
  }
  VectorXd v;
  v_update_into(problem, dz, lambda, v);
  return v;
}

WarmStart warm_start_shift(const VectorXd& v_star, const VectorXd& lambda_star, Index stage_size) {
  if (stage_size <= 0 || v_star.size() % stage_size != 0 || lambda_star.size() != v_star.size() ||
      v_star.size() < stage_size) {
    throw Error(ErrorCode::DimensionMismatch, "warm start vectors must be whole multiples of the stage size");
  }
  const Index nv = v_star.size();
  auto shift = [&](const VectorXd& src) {
    VectorXd out(nv);
    out.head(nv - stage_size) = src.tail(nv - stage_size);
    out.tail(stage_size) = src.tail(stage_size);
    return out;
  };
  return {shift(v_star), shift(lambda_star)};
}

AdmmState initialize(const ProblemData& problem, const SolveInput& input, const std::optional<WarmStart>& warm) {
  const ProblemDims& d = problem.dims();
  const Preconditioner& s = problem.scaling();
  if (input.x_hat.size() != d.n || input.x_r.size() != d.n || input.u_r.size() != d.m ||
      input.d_hat.size() != problem.model().p()) {
    throw Error(ErrorCode::DimensionMismatch, "solve input has the wrong dimension");
  }
  AdmmState st;
  st.q = problem.linear_cost(input.x_r.cwiseProduct(s.Nx), input.u_r.cwiseProduct(s.Nu));
  st.b = problem.equality_rhs(input.x_hat.cwiseProduct(s.Nx), input.d_hat);
  if (warm) {
    if (warm->v.size() != d.nv() || warm->lambda.size() != d.nv()) {
      throw Error(ErrorCode::DimensionMismatch, "warm start has the wrong dimension");
    }
    st.v = warm->v;
    st.lambda = warm->lambda;
  } else {
    st.v = VectorXd::Zero(d.nv());
    st.lambda = VectorXd::Zero(d.nv());
  }
  st.v_prev = st.v;
  st.z = VectorXd::Zero(d.nz());
  st.work_p.resize(d.nz());
  st.work_dz.resize(d.nv());
  st.status = SolveStatus::BudgetExhausted;
  return st;
}

SolveStatus iterate(const ProblemData& problem, AdmmState& st, const AdmmSettings& settings) {
  settings.validate();
  if (st.converged) return st.status = SolveStatus::Converged;
  const double rho = problem.rho();
  int done = 0;
  while (st.iterations < settings.max_iter) {
    if (settings.iter_budget > 0 && done >= settings.iter_budget) return st.status = SolveStatus::BudgetExhausted;

    // z-update
    st.work_dz = st.lambda - rho * st.v;
    problem.apply_Dt(st.work_dz, st.work_p);
    st.work_p += st.q;
    problem.solve_equality_qp(st.work_p, st.b, st.z);

    // v-update and dual ascent
    problem.apply_D(st.z, st.work_dz);
    st.v_prev.swap(st.v);
    v_update_into(problem, st.work_dz, st.lambda, st.v);
    st.work_dz -= st.v;
    st.lambda += rho * st.work_dz;

    ++st.iterations;
    ++done;
    st.primal_residual = st.work_dz.lpNorm<Eigen::Infinity>();
    st.dual_residual = (st.v - st.v_prev).lpNorm<Eigen::Infinity>();
    if (!std::isfinite(st.primal_residual) || !std::isfinite(st.dual_residual)) {
      return st.status = SolveStatus::NumericalFailure;
    }
    if (st.primal_residual <= settings.eps_p && st.dual_residual <= settings.eps_d) {
      st.converged = true;
      return st.status = SolveStatus::Converged;
    }
  }
  return st.status = SolveStatus::MaxIterationsExceeded;
}

Solution extract_solution(const ProblemData& problem, const AdmmState& st) {
  const ProblemDims& d = problem.dims();
  const Preconditioner& s = problem.scaling();
  Solution sol;
  sol.u0 = st.v.segment(d.n, d.m).cwiseQuotient(s.Nu);
  for (Index i = 0; i < d.m; ++i) {
    sol.u0[i] = std::clamp(sol.u0[i], problem.physical_u_lo()[i], problem.physical_u_hi()[i]);
  }
  const Index t = d.N * d.stage_z();
  sol.x_s = st.z.segment(t, d.n).cwiseQuotient(s.Nx);
  sol.u_s = st.z.segment(t + d.n, d.m).cwiseQuotient(s.Nu);
  sol.z = st.z;
  sol.v = st.v;
  sol.lambda = st.lambda;
  sol.iterations = st.iterations;
  sol.primal_residual = st.primal_residual;
  sol.dual_residual = st.dual_residual;
  sol.status = st.status;
  return sol;
}

std::pair<Solution, AdmmState> solve(const ProblemData& problem, const SolveInput& input,
                                     const std::optional<WarmStart>& warm, const AdmmSettings& settings) {
  AdmmState st = initialize(problem, input, warm);
  iterate(problem, st, settings);
  Solution sol = extract_solution(problem, st);
  return {std::move(sol), std::move(st)};
}

}  // namespace mpct
