#pragma once

// Run configuration in a flat "section.key = value" text format. Every key
// has a default reproducing the reactor case study; vectors are written as
// comma-separated lists, '#' starts a comment.

#include <cstdint>
#include <string>
#include <vector>

#include "mpct/campaign.hpp"
#include "mpct/experiment.hpp"

namespace mpct::config {

struct SimulateSettings {
  cstr::Output y_r1{0.912003028505, 228.0};
  cstr::Output y_r2{0.95, 240.0};
  int t_r = 30;
  bool noise = true;
};

struct RunConfig {
  experiment::PlantConfig plant;
  experiment::ControllerConfig controller = experiment::ControllerConfig::defaults();
  campaign::ValidationPlan plan;
  std::vector<double> grid_theta{0.0, 1.5, 3.0};
  std::vector<double> grid_cB{0.0, 0.04, 0.08};
  std::vector<double> grid_pB{0.0, 10.0, 20.0};
  std::vector<double> grid_beta{100.0, 300.0};
  experiment::ScenarioRanges ranges;
  SimulateSettings simulate;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out = "out";

  std::vector<campaign::ControllerVariant> grid() const;
};

/// Parses text over the defaults. Throws ConfigError naming the line and key.
RunConfig parse(const std::string& text);
RunConfig load(const std::string& path);

/// Every key in a fixed order with round-trip precision.
std::string serialize(const RunConfig& cfg);

/// Range and dimension checks. Throws ConfigError naming the key.
void validate(const RunConfig& cfg);

/// FNV-1a 64 of the serialized result-relevant keys (run.jobs and run.out
/// excluded), as 16 hex digits.
std::string digest(const RunConfig& cfg);

/// All accepted keys, in serialization order.
std::vector<std::string> keys();

}  // namespace mpct::config
