#include "mpct/experiment.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

namespace mpct::experiment {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

ControllerConfig ControllerConfig::defaults() {
  ControllerConfig c;
  c.Q = vec({0.1, 0.1, 5.0, 5.0, 20.0, 30.0});
  c.R = vec({20.0, 30.0});
  c.T = vec({0.7, 0.7, 35.0, 35.0, 10.0, 50.0});
  c.S = vec({10.0, 50.0});
  c.beta = vec({100.0});
  c.observer_q = vec({1.0, 0.01, 1.0, 1.0, 10.0, 10.0, 1e4, 1e4});
  c.observer_r = vec({1e3, 1e3});
  c.scaling.Nx = vec({5.0, 20.0, 1.0, 1.0, 2.0, 1e-3});
  c.scaling.Nu = vec({2.0, 1e-3});
  c.scaling.Nc = vec({20.0, 0.5});
  return c;
}

PlantLinearization linearize_plant(const PlantConfig& plant) {
  plant.params.validate();
  PlantLinearization lin;
  lin.u_eq = plant.nominal.u;
  lin.theta_d = plant.singer.theta0;
  lin.x_eq = cstr::steady_state(lin.u_eq, lin.theta_d, plant.params, plant.nominal.x);
  lin.y_eq = cstr::outputs(lin.x_eq, plant.params);
  const cstr::ContinuousModel cm = cstr::linearize(lin.x_eq, lin.u_eq, lin.theta_d, plant.params);
  auto [A, B] = cstr::discretize(cm.Ac, cm.Bc, plant.sample_seconds);
  lin.model.A = A;
  lin.model.B = B;
  lin.model.C = cm.C;
  lin.model.Bd = MatrixXd::Zero(cstr::kStates, cstr::kOutputs);
  lin.model.E = cm.C;
  lin.model.F = MatrixXd::Zero(cstr::kOutputs, cstr::kInputs);
  return lin;
}

ConstraintSet deviation_constraints(const PlantConfig& plant, const PlantLinearization& lin, const Backoff& b) {
  const Index n = cstr::kStates, m = cstr::kInputs, nh = cstr::kOutputs;
  ConstraintSet c = ConstraintSet::unbounded(n, m, nh, plant.u_lo - lin.u_eq, plant.u_hi - lin.u_eq);
  c.x_hi[2] = plant.bounds.theta_max - lin.x_eq[2];
  // The filter states live in the input box too.
  c.x_lo.tail<2>() = plant.u_lo - lin.u_eq;
  c.x_hi.tail<2>() = plant.u_hi - lin.u_eq;
  c.h_lo[0] = plant.bounds.cB_min - lin.y_eq[0];
  c.h_lo[1] = plant.bounds.pB_min - lin.y_eq[1];
  c.h_hi.setConstant(kInf);
  c.eta_x_hi[2] = b.theta;
  c.eta_h_lo[0] = b.cB;
  c.eta_h_lo[1] = b.pB;
  return c;
}

CstrController::CstrController(const PlantConfig& plant, const ControllerConfig& cfg, const PlantLinearization& lin)
    : cfg_(cfg), lin_(lin) {
  cfg_.admm.validate();
  CostWeights w;
  VectorXd q = cfg.Q, r = cfg.R, t = cfg.T, s = cfg.S;
  if (cfg.weights_in_scaled_units) {
    // precondition() maps physical Q to Nx^-1 Q Nx^-1; undo that here.
    const VectorXd& nx = cfg.scaling.Nx;
    const VectorXd& nu = cfg.scaling.Nu;
    q = q.cwiseProduct(nx).cwiseProduct(nx);
    t = t.cwiseProduct(nx).cwiseProduct(nx);
    r = r.cwiseProduct(nu).cwiseProduct(nu);
    s = s.cwiseProduct(nu).cwiseProduct(nu);
  }
  w.Q = q.asDiagonal();
  w.R = r.asDiagonal();
  w.T = t.asDiagonal();
  w.S = s.asDiagonal();
  w.beta = cfg.beta;
  const ConstraintSet cons = deviation_constraints(plant, lin, cfg.backoff);
  problem_ = build_problem(lin.model, cons, w, cfg.horizon, cfg.rho, &cfg_.scaling);
  gains_ = design_observer_gains(lin.model, cfg.observer_q.asDiagonal(), cfg.observer_r.asDiagonal());
  reset();
}

void CstrController::reset() {
  est_ = EstimatorState::origin(cstr::kStates, cstr::kOutputs);
  warm_.reset();
  last_ref_.reset();
  last_u_ = lin_.u_eq;
}

CstrController::StepResult CstrController::step(const cstr::Output& y, const cstr::Output& y_ref) {
  StepResult res;
  const VectorXd dy = y - lin_.y_eq;
  const VectorXd dyr = y_ref - lin_.y_eq;

  try {
    last_ref_ = compute_reference(lin_.model, dyr, est_.d_hat);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RankDeficient) throw;
    res.reference_solved = false;
    if (!last_ref_) last_ref_ = SteadyReference{VectorXd::Zero(cstr::kStates), VectorXd::Zero(cstr::kInputs)};
  }

  const SolveInput in{est_.x_hat, est_.d_hat, last_ref_->x_r, last_ref_->u_r};
  AdmmState st = initialize(problem_, in, cfg_.warm_start ? warm_ : std::nullopt);
  SolveStatus status = iterate(problem_, st, cfg_.admm);
  // A per-call budget only splits the work; keep calling until done.
  while (status == SolveStatus::BudgetExhausted) status = iterate(problem_, st, cfg_.admm);
  const Solution sol = extract_solution(problem_, st);

  VectorXd du;
  if (status == SolveStatus::NumericalFailure || !sol.u0.allFinite()) {
    du = last_u_ - lin_.u_eq;
    warm_.reset();
  } else {
    du = sol.u0;
    warm_ = warm_start_shift(sol.v, sol.lambda, problem_.dims().stage_v());
  }
  res.u = lin_.u_eq + du;
  last_u_ = res.u;
  res.x_r = lin_.x_eq + last_ref_->x_r;
  res.status = status;
  res.iterations = sol.iterations;
  res.primal_residual = sol.primal_residual;
  res.dual_residual = sol.dual_residual;

  est_ = observer_update(est_, gains_, lin_.model, du, dy);
  return res;
}

Scenario draw_scenario(std::mt19937_64& rng, const ScenarioRanges& r, double noise_variance) {
  Scenario s;
  s.init_steps = r.init_steps;
  s.steps = r.steps;
  std::uniform_real_distribution<double> cb(r.cB_lo, r.cB_hi), pb(r.pB_lo, r.pB_hi);
  s.y_r1[0] = cb(rng);
  s.y_r1[1] = pb(rng);
  s.y_r2[0] = cb(rng);
  s.y_r2[1] = pb(rng);
  s.t_r = std::uniform_int_distribution<int>(r.t_r_lo, r.t_r_hi)(rng);
  std::normal_distribution<double> w(0.0, std::sqrt(noise_variance));
  s.noise.resize(static_cast<size_t>(r.init_steps + r.steps));
  for (double& v : s.noise) v = w(rng);
  return s;
}

Scenario steady_scenario(const cstr::Output& y_ref, int init_steps, int steps) {
  Scenario s;
  s.y_r1 = s.y_r2 = y_ref;
  s.t_r = steps;
  s.init_steps = init_steps;
  s.steps = steps;
  s.noise.assign(static_cast<size_t>(init_steps + steps), 0.0);
  return s;
}

ExperimentResult run_experiment(const Scenario& sc, const PlantConfig& plant, CstrController& controller,
                                 bool keep_steps) {
  if (sc.steps < 1 || sc.init_steps < 0 || sc.noise.size() < static_cast<size_t>(sc.init_steps + sc.steps)) {
    throw Error(ErrorCode::InvalidParameters, "scenario needs at least one step and a noise entry per sample");
  }
  controller.reset();
  cstr::State x = controller.linearization().x_eq;
  double theta_d = plant.singer.theta0;

  std::vector<validation::ConstrainedSample> samples;
  std::vector<int> iters;
  samples.reserve(static_cast<size_t>(sc.steps));
  iters.reserve(static_cast<size_t>(sc.steps));
  ExperimentResult out;
  long total_iters = 0;

  for (int k = -sc.init_steps; k < sc.steps; ++k) {
    const cstr::Output y = cstr::outputs(x, plant.params);
    const cstr::Output& y_ref = k < sc.t_r ? sc.y_r1 : sc.y_r2;
    const CstrController::StepResult r = controller.step(y, y_ref);
    if (k >= 0) {
      samples.push_back({x[2], y[0], y[1]});
      iters.push_back(r.iterations);
      total_iters += r.iterations;
      if (r.status != SolveStatus::Converged) ++out.solver_failures;
      if (keep_steps) {
        out.steps.push_back({k, x, r.u, theta_d, y_ref, r.x_r, r.iterations, r.primal_residual, r.dual_residual,
                             r.status});
      }
    }
    x = cstr::integrate_step(x, r.u, theta_d, plant.params, plant.sample_seconds, plant.substeps);
    theta_d = cstr::singer_step(theta_d, sc.noise[static_cast<size_t>(k + sc.init_steps)], plant.singer);
  }

  out.phi1 = validation::phi1(samples, plant.bounds, plant.weights);
  out.phi2 = validation::phi2(iters);
  out.feasible = out.phi1 == 0.0;
  out.mean_iterations = static_cast<double>(total_iters) / sc.steps;
  return out;
}

}  // namespace mpct::experiment

namespace mpct::experiment {

namespace {

struct SteadyEval {
  bool ok = false;
  cstr::State x;
  cstr::Output y;
};

SteadyEval eval_steady(const PlantConfig& plant, const cstr::Input& u, const cstr::State& guess) {
  SteadyEval e;
  if (!(u[0] > 0.0)) return e;
  try {
    e.x = cstr::steady_state(u, plant.singer.theta0, plant.params, guess);
    e.y = cstr::outputs(e.x, plant.params);
    e.ok = e.x.allFinite() && e.x[0] >= -1e-9 && e.x[1] >= -1e-9;
  } catch (const Error&) {
    e.ok = false;
  }
  return e;
}

bool admissible(const PlantConfig& plant, const cstr::Input& u, const SteadyEval& e) {
  const double tol = 1e-12;
  return e.ok && (u.array() >= plant.u_lo.array() - tol).all() && (u.array() <= plant.u_hi.array() + tol).all() &&
         e.x[2] <= plant.bounds.theta_max + tol && e.y[0] >= plant.bounds.cB_min - tol &&
         e.y[1] >= plant.bounds.pB_min - tol;
}

}  // namespace

AdmissibleOutput admissible_steady_output(const PlantConfig& plant, const cstr::Output& y_ref,
                                          const VectorXd& input_scaling) {
  if (input_scaling.size() != cstr::kInputs || (input_scaling.array() <= 0.0).any()) {
    throw Error(ErrorCode::NonpositiveScaling, "input scaling needs two positive entries");
  }
  AdmissibleOutput out;

  // (i) Levenberg-Marquardt on the steady output map, outputs scaled to
  // comparable magnitude.
  const Eigen::Vector2d ys(1.0, 1.0 / 200.0);
  cstr::Input u = plant.nominal.u;
  SteadyEval cur = eval_steady(plant, u, plant.nominal.x);
  if (!cur.ok) throw Error(ErrorCode::NoSteadyStateFound, "no steady state at the nominal input");
  auto resid = [&](const SteadyEval& e) -> Eigen::Vector2d { return (e.y - y_ref).cwiseProduct(ys); };
  double lambda = 1e-3;
  for (int it = 0; it < 200; ++it) {
    const Eigen::Vector2d r = resid(cur);
    if (r.norm() < 1e-12) break;
    Eigen::Matrix2d J;
    bool jac_ok = true;
    for (int j = 0; j < 2; ++j) {
      const double h = 1e-6 * (1.0 + std::abs(u[j]));
      cstr::Input up = u, um = u;
      up[j] += h;
      um[j] -= h;
      const SteadyEval ep = eval_steady(plant, up, cur.x), em = eval_steady(plant, um, cur.x);
      if (!ep.ok || !em.ok) {
        jac_ok = false;
        break;
      }
      J.col(j) = (resid(ep) - resid(em)) / (2.0 * h);
    }
    if (!jac_ok) break;
    // Column scaling keeps the damping meaningful across F_N and P_K.
    const Eigen::Vector2d cs(1.0 / input_scaling[0], 1.0 / input_scaling[1]);
    const Eigen::Matrix2d Js = J * cs.asDiagonal();
    bool improved = false;
    for (int k = 0; k < 30 && !improved; ++k) {
      const Eigen::Matrix2d H = Js.transpose() * Js + lambda * Eigen::Matrix2d::Identity();
      const Eigen::Vector2d step = cs.cwiseProduct(H.ldlt().solve(-Js.transpose() * r));
      const cstr::Input trial = u + step;
      const SteadyEval et = eval_steady(plant, trial, cur.x);
      if (et.ok && resid(et).norm() < r.norm()) {
        u = trial;
        cur = et;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  out.u_u = u;
  out.x_u = cur.x;
  out.reference_reachable = resid(cur).norm() < 1e-8;

  // (ii) Closest admissible steady input.
  auto dist = [&](const cstr::Input& v) { return (v - out.u_u).cwiseProduct(input_scaling).norm(); };
  double best = std::numeric_limits<double>::infinity();
  cstr::Input best_u = out.u_u;
  SteadyEval best_e;
  if (admissible(plant, out.u_u, cur)) {
    best = 0.0;
    best_e = cur;
  } else {
    const int G = 41;
    cstr::State row_guess = plant.nominal.x;
    for (int i = 0; i < G; ++i) {
      cstr::State guess = row_guess;
      for (int j = 0; j < G; ++j) {
        const cstr::Input v(plant.u_lo[0] + (plant.u_hi[0] - plant.u_lo[0]) * i / (G - 1.0),
                            plant.u_lo[1] + (plant.u_hi[1] - plant.u_lo[1]) * j / (G - 1.0));
        const SteadyEval e = eval_steady(plant, v, guess);
        if (!e.ok) continue;
        guess = e.x;
        if (j == 0) row_guess = e.x;
        if (admissible(plant, v, e) && dist(v) < best) {
          best = dist(v);
          best_u = v;
          best_e = e;
        }
      }
    }
    if (!best_e.ok) throw Error(ErrorCode::NoSteadyStateFound, "no admissible steady state on the input grid");
    cstr::Input step((plant.u_hi[0] - plant.u_lo[0]) / 40.0, (plant.u_hi[1] - plant.u_lo[1]) / 40.0);
    while (step.cwiseProduct(input_scaling).norm() > 1e-10) {
      bool moved = false;
      for (int d = 0; d < 4; ++d) {
        cstr::Input v = best_u;
        v[d / 2] += (d % 2 == 0 ? 1.0 : -1.0) * step[d / 2];
        const SteadyEval e = eval_steady(plant, v, best_e.x);
        if (admissible(plant, v, e) && dist(v) < best) {
          best = dist(v);
          best_u = v;
          best_e = e;
          moved = true;
        }
      }
      if (!moved) step *= 0.5;
    }
  }
  out.u_c = best_u;
  out.x_c = best_e.x;
  out.y_o = best_e.y;
  return out;
}

}  // namespace mpct::experiment
