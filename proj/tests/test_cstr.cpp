#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "mpct/cstr.hpp"
#include "mpct/model.hpp"

using namespace mpct;
using namespace mpct::cstr;

namespace {

const CstrParams kP;

State refined_equilibrium() {
  const OperatingPoint op = nominal_operating_point();
  return steady_state(op.u, op.theta_d, kP, op.x);
}

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("reaction_rate") {
  CstrParams p;
  p.E1 = 0.0;
  CHECK(reaction_rate(1, 50.0, p) == p.k10);
  CHECK(reaction_rate(1, 150.0, p) == p.k10);

  // Long-double evaluation of the Arrhenius law.
  const long double k1 = 1.287e12L * std::exp(-9758.3L / (108.53L + 273.15L));
  CHECK(reaction_rate(1, 108.53, kP) == doctest::Approx(static_cast<double>(k1)).epsilon(1e-13));
  CHECK(reaction_rate(1, 108.53, kP) == doctest::Approx(10.14).epsilon(2e-3));

  CHECK(reaction_rate(1, 110.0, kP) > reaction_rate(1, 105.0, kP));
  CHECK(reaction_rate(3, 110.0, kP) > reaction_rate(3, 105.0, kP));
  CHECK_THROWS_AS(reaction_rate(1, -273.15, kP), Error);
  CHECK_THROWS_AS(reaction_rate(4, 100.0, kP), Error);
}

TEST_CASE("derivative: trivial cases") {
  const OperatingPoint op = nominal_operating_point();
  const State d = derivative(op.x, op.u, op.theta_d, kP);
  CHECK(d[4] == 0.0);
  CHECK(d[5] == 0.0);

  State x = op.x;
  x[0] = x[1] = 0.0;
  const State d0 = derivative(x, op.u, op.theta_d, kP);
  CHECK(d0[0] == doctest::Approx(x[4] * kP.cA0));
  CHECK(d0[1] == 0.0);

  State bad = op.x;
  bad[2] = std::nan("");
  CHECK_THROWS_AS(derivative(bad, op.u, op.theta_d, kP), Error);
}

TEST_CASE("equilibrium: refined root near the reported point") {
  const OperatingPoint op = nominal_operating_point();
  const State x = refined_equilibrium();
  CHECK(derivative(x, op.u, op.theta_d, kP).lpNorm<Eigen::Infinity>() <= 1e-9);
  for (int i = 0; i < 4; ++i) CHECK(rel_err(x[i], op.x[i]) <= 5e-3);
  CHECK(outputs(x, kP)[1] == doctest::Approx(228.0).epsilon(1e-3));

  // The reported values are rounded to the printed digits. The derivative
  // there is not small in absolute terms, but it is within what a first-order
  // expansion attributes to that rounding.
  const State d_rounded = derivative(op.x, op.u, op.theta_d, kP);
  const ContinuousModel cm = linearize(x, op.u, op.theta_d, kP);
  const double half_digit[4] = {5e-4, 5e-4, 5e-3, 5e-3};
  for (int i = 0; i < 4; ++i) {
    double bound = 0.0;
    for (int j = 0; j < 4; ++j) bound += std::abs(cm.Ac(i, j)) * half_digit[j];
    CHECK(std::abs(d_rounded[i]) <= 1.05 * bound);
  }
}

TEST_CASE("integrate_step") {
  const OperatingPoint op = nominal_operating_point();
  const State xe = refined_equilibrium();

  SUBCASE("equilibrium persists over one sample") {
    const State x1 = integrate_step(op.x, op.u, op.theta_d, kP, 75.0, 50);
    for (int i = 0; i < 6; ++i) CHECK(rel_err(x1[i], op.x[i]) <= 1e-3);
    const State xr = integrate_step(xe, op.u, op.theta_d, kP, 75.0, 50);
    CHECK((xr - xe).lpNorm<Eigen::Infinity>() <= 1e-8);
  }

  SUBCASE("fourth-order convergence") {
    State x0 = xe;
    x0[2] += 3.0;
    x0[0] -= 0.3;
    const Input u(30.0, -6000.0);
    const State ref = integrate_step(x0, u, op.theta_d, kP, 75.0, 64 * 8);
    const double e1 = (integrate_step(x0, u, op.theta_d, kP, 75.0, 8) - ref).norm();
    const double e2 = (integrate_step(x0, u, op.theta_d, kP, 75.0, 16) - ref).norm();
    CHECK(e1 / e2 >= 12.0);
  }

  SUBCASE("deterministic") {
    const Input u(20.0, -3000.0);
    const State a = integrate_step(xe, u, 105.3, kP, 75.0, 50);
    const State b = integrate_step(xe, u, 105.3, kP, 75.0, 50);
    CHECK((a.array() == b.array()).all());
  }

  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(integrate_step(xe, op.u, op.theta_d, kP, 0.0, 50), Error);
    CHECK_THROWS_AS(integrate_step(xe, op.u, op.theta_d, kP, 75.0, 0), Error);
  }
}

TEST_CASE("singer_step") {
  CHECK(singer_step(104.9, 0.0) == doctest::Approx(104.9));
  CHECK(singer_step(110.0, 0.0) == doctest::Approx(109.949));

  // Zero noise: monotone approach to theta0 from either side.
  for (double start : {95.0, 115.0}) {
    double t = start, gap = std::abs(start - 104.9);
    for (int k = 0; k < 500; ++k) {
      t = singer_step(t, 0.0);
      const double g = std::abs(t - 104.9);
      CHECK(g <= gap);
      gap = g;
    }
  }

  // Stationary variance 0.01 / (1 - 0.99^2).
  std::mt19937_64 rng(11);
  std::normal_distribution<double> w(0.0, 0.1);
  double t = 104.9, s = 0.0, s2 = 0.0;
  const int n = 1000000;
  for (int k = 0; k < 2000; ++k) t = singer_step(t, w(rng));
  for (int k = 0; k < n; ++k) {
    t = singer_step(t, w(rng));
    s += t;
    s2 += t * t;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  CHECK(var == doctest::Approx(0.01 / (1.0 - 0.99 * 0.99)).epsilon(0.05));
}

TEST_CASE("linearize") {
  const OperatingPoint op = nominal_operating_point();
  const State xe = refined_equilibrium();
  const ContinuousModel cm = linearize(xe, op.u, op.theta_d, kP);

  CHECK(cm.Ac(4, 4) == -3600.0 / kP.T_FN);
  CHECK(cm.Ac(5, 5) == -3600.0 / kP.T_PK);
  CHECK(cm.Bc(4, 0) == 3600.0 / kP.T_FN);
  CHECK(cm.Bc(5, 1) == 3600.0 / kP.T_PK);
  CHECK(cm.Bc.topRows(4).isZero());

  CHECK(cm.C(0, 1) == 1.0);
  CHECK(cm.C.row(0).cwiseAbs().sum() == 1.0);
  CHECK(cm.C(1, 1) == doctest::Approx(xe[4] * 10.0));
  CHECK(cm.C(1, 4) == doctest::Approx(xe[1] * 10.0));

  const ContinuousModel fine = linearize(xe, op.u, op.theta_d, kP, 1e-8);
  CHECK((cm.Ac - fine.Ac).norm() <= 1e-4 * fine.Ac.norm());

  State off = xe;
  off[2] += 5.0;
  CHECK_THROWS_AS(linearize(off, op.u, op.theta_d, kP), Error);
}

TEST_CASE("discretize") {
  SUBCASE("zero dynamics") {
    const MatrixXd Bc = (MatrixXd(2, 1) << 1.0, 2.0).finished();
    auto [A, B] = discretize(MatrixXd::Zero(2, 2), Bc, 1800.0);
    CHECK(A.isApprox(MatrixXd::Identity(2, 2), 1e-14));
    CHECK(B.isApprox(Bc * 0.5, 1e-14));
  }
  SUBCASE("scalar closed form") {
    auto [A, B] = discretize(MatrixXd::Constant(1, 1, -1.0), MatrixXd::Constant(1, 1, 1.0), 3600.0);
    CHECK(A(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
    CHECK(B(0, 0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-13));
  }
  SUBCASE("semigroup on the reactor model") {
    const OperatingPoint op = nominal_operating_point();
    const ContinuousModel cm = linearize(refined_equilibrium(), op.u, op.theta_d, kP);
    auto [A1, B1] = discretize(cm.Ac, cm.Bc, 75.0);
    auto [A2, B2] = discretize(cm.Ac, cm.Bc, 150.0);
    CHECK((A2 - A1 * A1).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK((B2 - (A1 * B1 + B1)).lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + B2.lpNorm<Eigen::Infinity>()));
    CHECK(controllability_index(A1, B1).index <= 7);
    CHECK(is_observable(A1, cm.C));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(discretize(MatrixXd::Zero(2, 2), MatrixXd::Zero(3, 1), 75.0), Error);
    CHECK_THROWS_AS(discretize(MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 1), -1.0), Error);
  }
}

TEST_CASE("linear model tracks the plant near the equilibrium") {
  const OperatingPoint op = nominal_operating_point();
  const State xe = refined_equilibrium();
  const ContinuousModel cm = linearize(xe, op.u, op.theta_d, kP);
  auto [A, B] = discretize(cm.Ac, cm.Bc, 75.0);
  const Output ye = outputs(xe, kP);

  for (const Input& du : {Input(0.25, 40.0), Input(-0.25, 40.0), Input(0.25, -40.0)}) {
    State x = xe;
    VectorXd dx = VectorXd::Zero(6);
    for (int k = 0; k < 10; ++k) {
      x = integrate_step(x, op.u + du, op.theta_d, kP, 75.0, 50);
      dx = A * dx + B * du;
      const Output dy_nl = outputs(x, kP) - ye;
      const VectorXd dy_lin = cm.C * dx;
      if (k >= 2) {
        for (int i = 0; i < 2; ++i) CHECK(std::abs(dy_nl[i] - dy_lin[i]) <= 0.05 * std::abs(dy_nl[i]) + 1e-9);
      }
    }
  }
}
