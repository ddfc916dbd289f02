#pragma once

// Command implementations behind the mpct tool. Each writes its files under
// cfg.out and a short human-readable summary to `log`.

#include <iosfwd>
#include <string>

#include "mpct/config.hpp"

namespace mpct::cli {

/// Process exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kNumericalFailure = 3;

/// Maps a library error to an exit code: configuration and plan problems
/// give kConfigError, everything else kNumericalFailure.
int exit_code_for(const Error& e);

struct SampleSizeArgs {
  double eps = 0.03;
  double delta = 1e-6;
  int r = 5;
  int M = 54;
  int K = 2;
};

/// Prints N_s and the binomial-tail verdict.
void cmd_sample_size(const SampleSizeArgs& args, std::ostream& log);

/// One closed-loop run: trajectory.csv and simulate.json.
void cmd_simulate(const config::RunConfig& cfg, std::ostream& log);

/// Campaign over the configured grid: summary.json, summary.csv,
/// records.csv, and verify_records.csv when verification is on.
void cmd_validate(const config::RunConfig& cfg, std::ostream& log);

/// Equilibrium, discrete model, observer gains: linearization.json.
void cmd_linearize(const config::RunConfig& cfg, std::ostream& log);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace mpct::cli
