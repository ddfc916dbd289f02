// Command-line front end: simulate, validate, sample-size, linearize.

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "mpct/commands.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::optional<long> verify;
  std::optional<long> ns;
  std::optional<int> iter_budget;
};

void add_run_flags(CLI::App* cmd, Overrides& o, bool campaign) {
  cmd->add_option("--config", o.config, "configuration file (key = value)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--iter-budget", o.iter_budget, "ADMM iterations per call (0 = unlimited)");
  if (campaign) {
    cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--verify", o.verify, "fresh experiments per controller for empirical checks");
    cmd->add_option("--ns", o.ns, "experiments per controller (overrides the sample-size bound)");
  }
}

mpct::config::RunConfig resolve(const Overrides& o) {
  mpct::config::RunConfig cfg = o.config.empty() ? mpct::config::RunConfig{} : mpct::config::load(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.out) cfg.out = *o.out;
  if (o.verify) cfg.plan.verify = *o.verify;
  if (o.ns) cfg.plan.ns = *o.ns;
  if (o.iter_budget) cfg.controller.admm.iter_budget = *o.iter_budget;
  mpct::config::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offset-free MPC for tracking: reactor simulation and probabilistic validation"};
  app.require_subcommand(1);

  Overrides sim_o, val_o, lin_o;
  auto* sim = app.add_subcommand("simulate", "one closed-loop run, trajectory CSV");
  add_run_flags(sim, sim_o, false);
  auto* val = app.add_subcommand("validate", "validation campaign over the controller grid");
  add_run_flags(val, val_o, true);
  auto* lin = app.add_subcommand("linearize", "equilibrium, discrete model and observer");
  add_run_flags(lin, lin_o, false);

  mpct::cli::SampleSizeArgs ss;
  auto* size = app.add_subcommand("sample-size", "experiments needed for an (eps, delta, r, M, K) plan");
  size->add_option("--eps", ss.eps, "violation probability bound");
  size->add_option("--delta", ss.delta, "confidence parameter");
  size->add_option("--r", ss.r, "order of the worst case (1 = maximum)");
  size->add_option("--M", ss.M, "number of candidate controllers");
  size->add_option("--K", ss.K, "number of performance indicators");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mpct::cli::kConfigError;
  }

  try {
    if (*size) {
      mpct::cli::cmd_sample_size(ss, std::cout);
    } else if (*sim) {
      mpct::cli::cmd_simulate(resolve(sim_o), std::cout);
    } else if (*val) {
      mpct::cli::cmd_validate(resolve(val_o), std::cout);
    } else if (*lin) {
      mpct::cli::cmd_linearize(resolve(lin_o), std::cout);
    }
  } catch (const mpct::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mpct::cli::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mpct::cli::kNumericalFailure;
  }
  return mpct::cli::kOk;
}
