#include "mpct/validation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace mpct::validation {

namespace {

void check_plan_args(double eps, double delta, int r, int M, int K) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::InvalidParameters, "eps must lie in (0, 1)");
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorCode::InvalidParameters, "delta must lie in (0, 1]");
  if (r < 1 || M < 1 || K < 1) throw Error(ErrorCode::InvalidParameters, "r, M and K must be at least 1");
}

}  // namespace

long min_sample_size(double eps, double delta, int r, int M, int K) {
  check_plan_args(eps, delta, r, M, K);
  const double l = std::log(static_cast<double>(M) * K / delta);
  const double rm1 = r - 1.0;
  const double bound = (rm1 + l + std::sqrt(2.0 * rm1 * l)) / eps;
  return std::max(1L, static_cast<long>(std::ceil(bound)));
}

double log_binomial_tail(long ns, double eps, int r) {
  const double log_eps = std::log(eps), log_1m = std::log1p(-eps);
  const double lg_n1 = std::lgamma(static_cast<double>(ns) + 1.0);
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  for (int q = 0; q < r && q <= ns; ++q) {
    const double t = lg_n1 - std::lgamma(q + 1.0) - std::lgamma(static_cast<double>(ns - q) + 1.0) + q * log_eps +
                     static_cast<double>(ns - q) * log_1m;
    terms.push_back(t);
    peak = std::max(peak, t);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - peak);
  return peak + std::log(s);
}

bool check_binomial_condition(long ns, double eps, int r, int M, int K, double delta) {
  check_plan_args(eps, delta, r, M, K);
  if (ns < r) throw Error(ErrorCode::InvalidParameters, "sample count must be at least r");
  return log_binomial_tail(ns, eps, r) <= std::log(delta / (static_cast<double>(M) * K));
}

double phi1(const std::vector<ConstrainedSample>& trajectory, const ViolationBounds& b, const ViolationWeights& w) {
  double s = 0.0;
  for (const ConstrainedSample& c : trajectory) {
    const double vt = std::max(c.theta - b.theta_max, 0.0);
    const double vc = std::max(b.cB_min - c.cB, 0.0);
    const double vp = std::max(b.pB_min - c.pB, 0.0);
    s += w.rho_theta * vt * vt + w.rho_c * vc * vc + w.rho_p * vp * vp;
  }
  return s;
}

int phi2(const std::vector<int>& iterations) {
  if (iterations.empty()) throw Error(ErrorCode::EmptyTrajectory, "no iteration counts recorded");
  return *std::max_element(iterations.begin(), iterations.end());
}

double rth_worst(std::vector<double> values, int r) {
  if (r < 1 || static_cast<size_t>(r) > values.size()) {
    throw Error(ErrorCode::OutOfRange, "r must lie in [1, number of values]", r);
  }
  std::nth_element(values.begin(), values.begin() + (r - 1), values.end(), std::greater<>());
  return values[static_cast<size_t>(r - 1)];
}

}  // namespace mpct::validation
