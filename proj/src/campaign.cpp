#include "mpct/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

namespace mpct::campaign {

namespace {

constexpr std::uint64_t kValidationStream = 0;
constexpr std::uint64_t kVerifyStream = 1;

ExperimentRow to_row(int controller, long index, std::uint64_t seed, const experiment::Scenario& sc,
                     const experiment::ExperimentResult& r) {
  ExperimentRow row;
  row.controller = controller;
  row.experiment = index;
  row.seed = seed;
  row.phi1 = r.phi1;
  row.phi2 = r.phi2;
  row.feasible = r.feasible;
  row.solver_failures = r.solver_failures;
  row.mean_iterations = r.mean_iterations;
  row.y_r1 = sc.y_r1;
  row.y_r2 = sc.y_r2;
  row.t_r = sc.t_r;
  return row;
}

bool clean(const ExperimentRow& r) { return r.feasible && r.solver_failures == 0; }

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 1));
  return h;
}

std::string ControllerVariant::label() const {
  std::ostringstream os;
  os << '{' << backoff.theta << ',' << backoff.cB << ',' << backoff.pB << ',' << beta << '}';
  return os.str();
}

std::vector<ControllerVariant> controller_grid(const std::vector<double>& theta, const std::vector<double>& cB,
                                               const std::vector<double>& pB, const std::vector<double>& beta) {
  std::vector<ControllerVariant> out;
  for (double t : theta)
    for (double c : cB)
      for (double p : pB)
        for (double b : beta) out.push_back({{t, c, p}, b});
  return out;
}

long resolve_sample_size(const ValidationPlan& plan, int M) {
  const long ns = plan.ns > 0 ? plan.ns : validation::min_sample_size(plan.eps, plan.delta, plan.r, M, plan.K);
  if (ns < plan.r || !validation::check_binomial_condition(ns, plan.eps, plan.r, M, plan.K, plan.delta)) {
    throw Error(ErrorCode::PlanInvalid, "N_s = " + std::to_string(ns) +
                                            " does not meet the confidence requirement for this eps, delta, r and grid");
  }
  return ns;
}

void parallel_for(long count, int jobs, const std::function<void(int, long)>& fn) {
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(std::max(1L, count))));
  std::atomic<long> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex mu;
  auto work = [&](int w) {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= count || stop.load()) return;
      try {
        fn(w, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
        stop = true;
      }
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  if (first) std::rethrow_exception(first);
}

CampaignReport run_campaign(const experiment::PlantConfig& plant, const experiment::ControllerConfig& base,
                            const std::vector<ControllerVariant>& grid, const ValidationPlan& plan,
                            const CampaignOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::InvalidParameters, "controller grid is empty");
  if (options.jobs < 1) throw Error(ErrorCode::InvalidParameters, "jobs must be at least 1");
  if (plan.verify < 0) throw Error(ErrorCode::InvalidParameters, "verify count must be nonnegative");
  const int M = static_cast<int>(grid.size());
  CampaignReport rep;
  rep.plan = plan;
  rep.M = M;
  rep.ns = resolve_sample_size(plan, M);
  rep.seed = options.seed;

  const experiment::PlantLinearization lin = experiment::linearize_plant(plant);
  std::vector<experiment::CstrController> prototypes;
  prototypes.reserve(grid.size());
  for (const ControllerVariant& v : grid) {
    experiment::ControllerConfig cfg = base;
    cfg.backoff = v.backoff;
    cfg.beta = VectorXd::Constant(1, v.beta);
    prototypes.emplace_back(plant, cfg, lin);
  }

  // Each worker owns copies of the controllers it touches; results land in
  // fixed slots so the output does not depend on scheduling.
  const int jobs = options.jobs;
  std::vector<std::vector<std::unique_ptr<experiment::CstrController>>> local(static_cast<size_t>(jobs));
  for (auto& l : local) l.resize(grid.size());
  auto controller_for = [&](int w, int c) -> experiment::CstrController& {
    auto& slot = local[static_cast<size_t>(w)][static_cast<size_t>(c)];
    if (!slot) slot = std::make_unique<experiment::CstrController>(prototypes[static_cast<size_t>(c)]);
    return *slot;
  };

  auto run_batch = [&](std::uint64_t stream, long per_controller, std::vector<ExperimentRow>& rows) {
    rows.assign(static_cast<size_t>(per_controller) * grid.size(), {});
    parallel_for(static_cast<long>(rows.size()), jobs, [&](int w, long t) {
      const int c = static_cast<int>(t % M);
      const long e = t / M;
      const std::uint64_t seed = plan.common_random_numbers
                                     ? derive_seed(options.seed, {stream, static_cast<std::uint64_t>(e)})
                                     : derive_seed(options.seed, {stream, static_cast<std::uint64_t>(c),
                                                                  static_cast<std::uint64_t>(e)});
      std::mt19937_64 rng(seed);
      const experiment::Scenario sc = experiment::draw_scenario(rng, options.ranges, plant.singer.noise_variance);
      const experiment::ExperimentResult r = experiment::run_experiment(sc, plant, controller_for(w, c));
      rows[static_cast<size_t>(c) * per_controller + e] = to_row(c, e, seed, sc, r);
    });
  };

  run_batch(kValidationStream, rep.ns, rep.rows);
  if (plan.verify > 0) run_batch(kVerifyStream, plan.verify, rep.verify_rows);

  for (int c = 0; c < M; ++c) {
    ControllerReport cr;
    cr.variant = grid[static_cast<size_t>(c)];
    std::vector<double> p1, p2;
    long ok = 0;
    double iters = 0.0;
    for (long e = 0; e < rep.ns; ++e) {
      const ExperimentRow& r = rep.rows[static_cast<size_t>(c) * rep.ns + e];
      p1.push_back(r.phi1);
      p2.push_back(r.phi2);
      ok += clean(r);
      cr.solver_failures += r.solver_failures;
      iters += r.mean_iterations;
    }
    cr.phi1_r = validation::rth_worst(p1, plan.r);
    cr.phi2_r = static_cast<int>(validation::rth_worst(p2, plan.r));
    cr.feasible_pct = 100.0 * static_cast<double>(ok) / static_cast<double>(rep.ns);
    cr.mean_iterations = iters / static_cast<double>(rep.ns);
    if (plan.verify > 0) {
      long e1 = 0, e2 = 0, vok = 0;
      for (long e = 0; e < plan.verify; ++e) {
        const ExperimentRow& r = rep.verify_rows[static_cast<size_t>(c) * plan.verify + e];
        e1 += r.phi1 > cr.phi1_r;
        e2 += r.phi2 > cr.phi2_r;
        vok += clean(r);
      }
      const double n = static_cast<double>(plan.verify);
      cr.verify_runs = plan.verify;
      cr.verify_phi1_exceed = static_cast<double>(e1) / n;
      cr.verify_phi2_exceed = static_cast<double>(e2) / n;
      cr.verify_feasible_pct = 100.0 * static_cast<double>(vok) / n;
    }
    rep.controllers.push_back(cr);
  }
  return rep;
}

}  // namespace mpct::campaign
