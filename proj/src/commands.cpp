#include "mpct/commands.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "mpct/campaign.hpp"
#include "mpct/experiment.hpp"
#include "mpct/offset_free.hpp"
#include "mpct/validation.hpp"

namespace mpct::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kSimulateStream = 2;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
  f << text;
}

fs::path prepare_out(const config::RunConfig& cfg) {
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::ConfigError, "run.out: cannot create " + cfg.out);
  return dir;
}

std::string audit_line(const config::RunConfig& cfg) {
  return "# config_digest=" + config::digest(cfg) + " seed=" + std::to_string(cfg.seed) + "\n";
}

ordered_json audit_json(const config::RunConfig& cfg) {
  ordered_json j;
  j["config_digest"] = config::digest(cfg);
  j["seed"] = cfg.seed;
  return j;
}

ordered_json to_json(const MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

template <typename V>
ordered_json vec_json(const V& v) {
  ordered_json a = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::string variant_json_label(const campaign::ControllerVariant& v) { return v.label(); }

ordered_json variant_json(const campaign::ControllerVariant& v) {
  ordered_json j;
  j["backoff_theta"] = v.backoff.theta;
  j["backoff_cB"] = v.backoff.cB;
  j["backoff_pB"] = v.backoff.pB;
  j["beta"] = v.beta;
  return j;
}

std::string records_csv(const config::RunConfig& cfg, const std::vector<campaign::ExperimentRow>& rows,
                        const std::vector<campaign::ControllerVariant>& grid) {
  std::ostringstream os;
  os << audit_line(cfg);
  os << "controller,label,experiment,scenario_seed,phi1,phi2,feasible,solver_failures,mean_iterations,"
        "y_r1_cB,y_r1_pB,y_r2_cB,y_r2_pB,t_r\n";
  for (const auto& r : rows) {
    os << r.controller << ",\"" << grid[static_cast<size_t>(r.controller)].label() << "\"," << r.experiment << ','
       << r.seed << ',' << format_number(r.phi1) << ',' << r.phi2 << ',' << (r.feasible ? 1 : 0) << ','
       << r.solver_failures << ',' << format_number(r.mean_iterations) << ',' << format_number(r.y_r1[0]) << ','
       << format_number(r.y_r1[1]) << ',' << format_number(r.y_r2[0]) << ',' << format_number(r.y_r2[1]) << ','
       << r.t_r << '\n';
  }
  return os.str();
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigError:
    case ErrorCode::PlanInvalid:
    case ErrorCode::InvalidParameters:
    case ErrorCode::InvalidBounds:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::NonpositiveScaling:
    case ErrorCode::HorizonTooShort:
    case ErrorCode::NotPositiveDefinite:
      return kConfigError;
    default:
      return kNumericalFailure;
  }
}

void cmd_sample_size(const SampleSizeArgs& a, std::ostream& log) {
  const long ns = validation::min_sample_size(a.eps, a.delta, a.r, a.M, a.K);
  const bool ok = validation::check_binomial_condition(ns, a.eps, a.r, a.M, a.K, a.delta);
  const double log_tail = validation::log_binomial_tail(ns, a.eps, a.r);
  log << "N_s = " << ns << "\n";
  log << "binomial tail = " << std::setprecision(6) << std::exp(log_tail) << " (threshold delta/(MK) = "
      << a.delta / (static_cast<double>(a.M) * a.K) << "): " << (ok ? "pass" : "fail") << "\n";
}

void cmd_linearize(const config::RunConfig& cfg, std::ostream& log) {
  const experiment::PlantLinearization lin = experiment::linearize_plant(cfg.plant);
  const experiment::CstrController ctrl(cfg.plant, cfg.controller, lin);
  const double radius = estimator_spectral_radius(lin.model, ctrl.gains());
  const ControllabilityInfo ci = controllability_index(lin.model.A, lin.model.B);
  const double residual = cstr::derivative(lin.x_eq, lin.u_eq, lin.theta_d, cfg.plant.params).lpNorm<Eigen::Infinity>();

  ordered_json j = audit_json(cfg);
  j["equilibrium"]["x"] = vec_json(lin.x_eq);
  j["equilibrium"]["u"] = vec_json(lin.u_eq);
  j["equilibrium"]["y"] = vec_json(lin.y_eq);
  j["equilibrium"]["theta_d"] = lin.theta_d;
  j["equilibrium"]["derivative_residual"] = residual;
  j["sample_seconds"] = cfg.plant.sample_seconds;
  j["A"] = to_json(lin.model.A);
  j["B"] = to_json(lin.model.B);
  j["C"] = to_json(lin.model.C);
  j["observer"]["Lx"] = to_json(ctrl.gains().Lx);
  j["observer"]["Ld"] = to_json(ctrl.gains().Ld);
  j["observer"]["spectral_radius"] = radius;
  j["controllability"]["index"] = ci.index;
  j["controllability"]["rank"] = ci.rank;
  j["controllability"]["horizon"] = cfg.controller.horizon;
  const fs::path dir = prepare_out(cfg);
  write_file(dir / "linearization.json", j.dump(2) + "\n");

  Eigen::IOFormat f(6, 0, ", ", "\n", "  [", "]");
  log << "equilibrium x = " << lin.x_eq.transpose().format(f) << "\n";
  log << "derivative residual = " << residual << "\n";
  log << "A =\n" << lin.model.A.format(f) << "\nB =\n" << lin.model.B.format(f) << "\nC =\n"
      << lin.model.C.format(f) << "\n";
  log << "observer spectral radius = " << radius << "\n";
  log << "controllability index = " << ci.index << " (rank " << ci.rank << ", horizon " << cfg.controller.horizon
      << ")\n";
}

void cmd_simulate(const config::RunConfig& cfg, std::ostream& log) {
  const experiment::PlantLinearization lin = experiment::linearize_plant(cfg.plant);
  experiment::CstrController ctrl(cfg.plant, cfg.controller, lin);

  experiment::Scenario sc;
  sc.y_r1 = cfg.simulate.y_r1;
  sc.y_r2 = cfg.simulate.y_r2;
  sc.t_r = cfg.simulate.t_r;
  sc.init_steps = cfg.ranges.init_steps;
  sc.steps = cfg.ranges.steps;
  sc.noise.assign(static_cast<size_t>(sc.init_steps + sc.steps), 0.0);
  if (cfg.simulate.noise && cfg.plant.singer.noise_variance > 0.0) {
    std::mt19937_64 rng(campaign::derive_seed(cfg.seed, {kSimulateStream}));
    std::normal_distribution<double> w(0.0, std::sqrt(cfg.plant.singer.noise_variance));
    for (double& v : sc.noise) v = w(rng);
  }
  const experiment::ExperimentResult r = experiment::run_experiment(sc, cfg.plant, ctrl, true);

  std::ostringstream os;
  const auto& b = cfg.controller.backoff;
  os << audit_line(cfg);
  os << "# controller={" << format_number(b.theta) << ',' << format_number(b.cB) << ',' << format_number(b.pB) << ','
     << format_number(cfg.controller.beta[0]) << "}\n";
  os << "k,c_A,c_B,theta,theta_K,F_N,P_K,u0_FN,u0_PK,theta_d,y_r_cB,y_r_pB,"
        "x_r_cA,x_r_cB,x_r_theta,x_r_thetaK,x_r_FN,x_r_PK,iterations,primal_res,dual_res\n";
  for (const auto& s : r.steps) {
    os << s.k;
    for (Index i = 0; i < 6; ++i) os << ',' << format_number(s.x[i]);
    os << ',' << format_number(s.u[0]) << ',' << format_number(s.u[1]) << ',' << format_number(s.theta_d) << ','
       << format_number(s.y_ref[0]) << ',' << format_number(s.y_ref[1]);
    for (Index i = 0; i < 6; ++i) os << ',' << format_number(s.x_r[i]);
    os << ',' << s.iterations << ',' << format_number(s.primal_residual) << ',' << format_number(s.dual_residual)
       << '\n';
  }

  ordered_json j = audit_json(cfg);
  j["controller"] = variant_json({b, cfg.controller.beta[0]});
  j["phi1"] = r.phi1;
  j["phi2"] = r.phi2;
  j["feasible"] = r.feasible;
  j["solver_failures"] = r.solver_failures;
  j["mean_iterations"] = r.mean_iterations;
  const cstr::Output y_end = cstr::outputs(r.steps.back().x, cfg.plant.params);
  j["final_output"] = vec_json(y_end);
  try {
    const experiment::AdmissibleOutput adm =
        experiment::admissible_steady_output(cfg.plant, sc.y_r2, cfg.controller.scaling.Nu);
    j["admissible_output"]["y_o"] = vec_json(adm.y_o);
    j["admissible_output"]["reference_reachable"] = adm.reference_reachable;
    j["admissible_output"]["final_distance"] = vec_json((y_end - adm.y_o).cwiseAbs());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoSteadyStateFound) throw;
    j["admissible_output"] = nullptr;
  }

  const fs::path dir = prepare_out(cfg);
  write_file(dir / "trajectory.csv", os.str());
  write_file(dir / "simulate.json", j.dump(2) + "\n");
  log << "controller " << campaign::ControllerVariant{b, cfg.controller.beta[0]}.label() << ": phi1 = "
      << format_number(r.phi1) << ", phi2 = " << r.phi2 << ", solver failures = " << r.solver_failures << "\n";
  log << "wrote " << (dir / "trajectory.csv").string() << "\n";
}

void cmd_validate(const config::RunConfig& cfg, std::ostream& log) {
  const auto grid = cfg.grid();
  campaign::CampaignOptions opt;
  opt.seed = cfg.seed;
  opt.jobs = cfg.jobs;
  opt.ranges = cfg.ranges;
  const campaign::CampaignReport rep = campaign::run_campaign(cfg.plant, cfg.controller, grid, cfg.plan, opt);

  ordered_json j = audit_json(cfg);
  j["plan"]["eps"] = cfg.plan.eps;
  j["plan"]["delta"] = cfg.plan.delta;
  j["plan"]["r"] = cfg.plan.r;
  j["plan"]["K"] = cfg.plan.K;
  j["plan"]["M"] = rep.M;
  j["plan"]["ns"] = rep.ns;
  j["plan"]["common_random_numbers"] = cfg.plan.common_random_numbers;
  j["plan"]["verify"] = cfg.plan.verify;
  ordered_json rows = ordered_json::array();
  std::ostringstream csv;
  csv << audit_line(cfg);
  csv << "label,backoff_theta,backoff_cB,backoff_pB,beta,phi1_r,phi2_r,feasible_pct,solver_failures,mean_iterations";
  if (cfg.plan.verify > 0) csv << ",verify_runs,verify_phi1_exceed,verify_phi2_exceed,verify_feasible_pct";
  csv << '\n';
  for (const auto& c : rep.controllers) {
    ordered_json r = variant_json(c.variant);
    r["label"] = variant_json_label(c.variant);
    r["phi1_r"] = c.phi1_r;
    r["phi2_r"] = c.phi2_r;
    r["feasible_pct"] = c.feasible_pct;
    r["solver_failures"] = c.solver_failures;
    r["mean_iterations"] = c.mean_iterations;
    csv << '"' << c.variant.label() << "\"," << format_number(c.variant.backoff.theta) << ','
        << format_number(c.variant.backoff.cB) << ',' << format_number(c.variant.backoff.pB) << ','
        << format_number(c.variant.beta) << ',' << format_number(c.phi1_r) << ',' << c.phi2_r << ','
        << format_number(c.feasible_pct) << ',' << c.solver_failures << ',' << format_number(c.mean_iterations);
    if (cfg.plan.verify > 0) {
      r["verify"]["runs"] = c.verify_runs;
      r["verify"]["phi1_exceed"] = c.verify_phi1_exceed;
      r["verify"]["phi2_exceed"] = c.verify_phi2_exceed;
      r["verify"]["feasible_pct"] = c.verify_feasible_pct;
      csv << ',' << c.verify_runs << ',' << format_number(c.verify_phi1_exceed) << ','
          << format_number(c.verify_phi2_exceed) << ',' << format_number(c.verify_feasible_pct);
    }
    csv << '\n';
    rows.push_back(r);
  }
  j["controllers"] = rows;

  const fs::path dir = prepare_out(cfg);
  write_file(dir / "summary.json", j.dump(2) + "\n");
  write_file(dir / "summary.csv", csv.str());
  write_file(dir / "records.csv", records_csv(cfg, rep.rows, grid));
  if (cfg.plan.verify > 0) write_file(dir / "verify_records.csv", records_csv(cfg, rep.verify_rows, grid));

  log << "N_s = " << rep.ns << ", M = " << rep.M << ", r = " << cfg.plan.r << "\n";
  log << std::left << std::setw(24) << "controller" << std::setw(14) << "phi1[r]" << std::setw(10) << "phi2[r]"
      << "feasible %\n";
  for (const auto& c : rep.controllers) {
    log << std::left << std::setw(24) << c.variant.label() << std::setw(14) << format_number(c.phi1_r)
        << std::setw(10) << c.phi2_r << format_number(c.feasible_pct) << "\n";
  }
  log << "wrote " << (dir / "summary.json").string() << "\n";
}

}  // namespace mpct::cli
