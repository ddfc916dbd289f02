#pragma once

// Sample-complexity bound for r-th worst-case probabilistic validation and
// the performance indicators scored on each closed-loop experiment.

#include <vector>

#include "mpct/errors.hpp"

namespace mpct::validation {

/// Smallest integer >= (1/eps)(r - 1 + ln(MK/delta) + sqrt(2 (r-1) ln(MK/delta))),
/// at least 1. Throws InvalidParameters.
long min_sample_size(double eps, double delta, int r, int M, int K);

/// log of sum_{q=0}^{r-1} C(ns, q) eps^q (1-eps)^(ns-q), by log-sum-exp over
/// lgamma terms.
double log_binomial_tail(long ns, double eps, int r);

/// True when the binomial tail is <= delta / (M K). Throws InvalidParameters
/// unless ns >= r and the other arguments are in range.
bool check_binomial_condition(long ns, double eps, int r, int M, int K, double delta);

struct ViolationBounds {
  double theta_max = 117.0;
  double cB_min = 0.72;
  double pB_min = 155.0;
};

struct ViolationWeights {
  double rho_theta = 30.0;
  double rho_c = 150.0;
  double rho_p = 1.0;
};

/// One recorded sample of the constrained quantities.
struct ConstrainedSample {
  double theta = 0.0;
  double cB = 0.0;
  double pB = 0.0;
};

/// sum_k rho_theta max(theta - theta_max, 0)^2 + rho_c max(cB_min - cB, 0)^2
///       + rho_p max(pB_min - pB, 0)^2
double phi1(const std::vector<ConstrainedSample>& trajectory, const ViolationBounds& bounds = {},
            const ViolationWeights& weights = {});

/// Largest per-step iteration count. Throws EmptyTrajectory.
int phi2(const std::vector<int>& iterations);

/// r-th largest value (r = 1 is the maximum). Throws OutOfRange.
double rth_worst(std::vector<double> values, int r);

}  // namespace mpct::validation
