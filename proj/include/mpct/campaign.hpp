#pragma once

// Validation campaigns: N_s random experiments per candidate controller,
// r-th worst-case indicators, optional fresh-sample verification. Results are
// independent of the worker count.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mpct/experiment.hpp"

namespace mpct::campaign {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for one experiment: hashes the master seed with a path such as
/// {stream, experiment} or {stream, controller, experiment}.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

struct ControllerVariant {
  experiment::Backoff backoff;
  double beta = 100.0;

  std::string label() const;
};

/// Cartesian product, theta back-off slowest and beta fastest.
std::vector<ControllerVariant> controller_grid(const std::vector<double>& theta, const std::vector<double>& cB,
                                               const std::vector<double>& pB, const std::vector<double>& beta);

struct ValidationPlan {
  double eps = 0.03;
  double delta = 1e-6;
  int r = 5;
  int K = 2;
  /// 0 selects the smallest N_s from the sample-size bound.
  long ns = 0;
  bool common_random_numbers = true;
  /// Fresh experiments per controller for the empirical exceedance check.
  long verify = 0;
};

struct CampaignOptions {
  std::uint64_t seed = 1;
  int jobs = 1;
  experiment::ScenarioRanges ranges;
};

struct ExperimentRow {
  int controller = 0;
  long experiment = 0;
  std::uint64_t seed = 0;
  double phi1 = 0.0;
  int phi2 = 0;
  bool feasible = true;
  int solver_failures = 0;
  double mean_iterations = 0.0;
  cstr::Output y_r1{0.0, 0.0};
  cstr::Output y_r2{0.0, 0.0};
  int t_r = 0;
};

struct ControllerReport {
  ControllerVariant variant;
  double phi1_r = 0.0;
  int phi2_r = 0;
  /// Experiments with phi1 = 0 and no solver failure, in percent.
  double feasible_pct = 0.0;
  long solver_failures = 0;
  double mean_iterations = 0.0;
  long verify_runs = 0;
  /// Fraction of fresh experiments exceeding the validated bounds.
  double verify_phi1_exceed = 0.0;
  double verify_phi2_exceed = 0.0;
  double verify_feasible_pct = 0.0;
};

struct CampaignReport {
  ValidationPlan plan;
  long ns = 0;
  int M = 0;
  std::uint64_t seed = 0;
  std::vector<ControllerReport> controllers;
  std::vector<ExperimentRow> rows;
  std::vector<ExperimentRow> verify_rows;
};

/// N_s for the plan and grid size (plan.ns when set). Throws PlanInvalid when
/// the binomial condition fails at that N_s.
long resolve_sample_size(const ValidationPlan& plan, int M);

/// Runs every (controller, experiment) pair on `options.jobs` workers.
/// Throws PlanInvalid, InvalidParameters, or the first experiment error.
CampaignReport run_campaign(const experiment::PlantConfig& plant, const experiment::ControllerConfig& base,
                            const std::vector<ControllerVariant>& grid, const ValidationPlan& plan,
                            const CampaignOptions& options);

/// Runs fn(i) for i in [0, count) on `jobs` threads; rethrows the first
/// exception after all workers stop.
void parallel_for(long count, int jobs, const std::function<void(int worker, long i)>& fn);

}  // namespace mpct::campaign
