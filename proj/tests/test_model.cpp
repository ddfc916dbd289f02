#include <doctest.h>

#include <random>

#include "mpct/model.hpp"
#include "test_util.hpp"

using namespace mpct;
using namespace mpct::testing;

namespace {

Preconditioner cstr_like_scaling() {
  Preconditioner s{VectorXd(6), VectorXd(2), VectorXd(2)};
  s.Nx << 5, 20, 1, 1, 2, 1e-3;
  s.Nu << 2, 1e-3;
  s.Nc << 20, 0.5;
  return s;
}

double max_diff(const MatrixXd& a, const MatrixXd& b) {
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double x = a.data()[i], y = b.data()[i];
    if (std::isinf(x) && x == y) continue;
    worst = std::max(worst, std::abs(x - y) / std::max(1.0, std::abs(y)));
  }
  return worst;
}

}  // namespace

TEST_CASE("precondition: identity scaling leaves the problem unchanged") {
  std::mt19937_64 rng(1);
  const RandomInstance t = random_instance(rng, 4, 2, 2, 5);
  const ScaledProblem s = precondition(t.model, t.constraints, t.weights, Preconditioner::identity(4, 2, 2));
  CHECK(s.model.A == t.model.A);
  CHECK(s.model.E == t.model.E);
  CHECK(s.constraints.x_hi == t.constraints.x_hi);
  CHECK(s.weights.Q == t.weights.Q);
  CHECK(Preconditioner::identity(4, 2, 2).is_identity());
}

TEST_CASE("precondition: round trip with the reactor scaling") {
  std::mt19937_64 rng(2);
  RandomInstance t = random_instance(rng, 6, 2, 2, 8);
  t.model.C = random_matrix(rng, 2, 6);
  t.model.Bd = random_matrix(rng, 6, 2);
  t.constraints.x_hi[5] = std::numeric_limits<double>::infinity();
  t.constraints.eta_x_hi[2] = 0.3;
  const Preconditioner sc = cstr_like_scaling();
  const ScaledProblem s = precondition(t.model, t.constraints, t.weights, sc);
  const ScaledProblem back = unprecondition(s.model, s.constraints, s.weights, sc);
  for (auto [a, b] : {std::pair{&back.model.A, &t.model.A}, {&back.model.B, &t.model.B}, {&back.model.C, &t.model.C},
                      {&back.model.Bd, &t.model.Bd}, {&back.model.E, &t.model.E}, {&back.model.F, &t.model.F},
                      {&back.weights.Q, &t.weights.Q}, {&back.weights.R, &t.weights.R},
                      {&back.weights.T, &t.weights.T}, {&back.weights.S, &t.weights.S}}) {
    CHECK(max_diff(*a, *b) < 1e-12);
  }
  CHECK(max_diff(back.constraints.x_hi, t.constraints.x_hi) < 1e-12);
  CHECK(max_diff(back.constraints.h_lo, t.constraints.h_lo) < 1e-12);
  CHECK(max_diff(back.constraints.eta_x_hi, t.constraints.eta_x_hi) < 1e-12);
  CHECK(max_diff(back.constraints.u_lo, t.constraints.u_lo) < 1e-12);

  // Scaled dynamics act on scaled coordinates: Nx x+ = A~ (Nx x) + B~ (Nu u).
  const VectorXd x = random_vector(rng, 6), u = random_vector(rng, 2);
  const VectorXd lhs = sc.Nx.asDiagonal() * (t.model.A * x + t.model.B * u);
  const VectorXd rhs = s.model.A * sc.Nx.cwiseProduct(x) + s.model.B * sc.Nu.cwiseProduct(u);
  CHECK(rel_inf_error(lhs, rhs) < 1e-12);
  // Stage cost is invariant.
  const VectorXd xs = sc.Nx.cwiseProduct(x);
  CHECK(xs.dot(s.weights.Q * xs) == doctest::Approx(x.dot(t.weights.Q * x)).epsilon(1e-12));
}

TEST_CASE("precondition: nonpositive scaling is rejected") {
  Preconditioner s = cstr_like_scaling();
  s.Nu[1] = 0.0;
  try {
    s.validate(6, 2, 2);
    FAIL("expected NonpositiveScaling");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonpositiveScaling);
  }
}

TEST_CASE("constraint validation") {
  std::mt19937_64 rng(3);
  RandomInstance t = random_instance(rng, 2, 1, 1, 3);
  CHECK_NOTHROW(t.constraints.validate(t.model));
  t.constraints.eta_h_lo[0] = -0.1;
  CHECK_THROWS_AS(t.constraints.validate(t.model), Error);
  t = random_instance(rng, 2, 1, 1, 3);
  t.constraints.u_hi = t.constraints.u_lo;
  CHECK_THROWS_AS(t.constraints.validate(t.model), Error);
  t = random_instance(rng, 2, 1, 1, 3);
  t.constraints.u_hi[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(t.constraints.validate(t.model), Error);
}

TEST_CASE("controllability index by rank staircase") {
  MatrixXd A = MatrixXd::Zero(3, 3);
  A(0, 1) = 1;
  A(1, 2) = 1;
  MatrixXd B = MatrixXd::Zero(3, 1);
  B(2, 0) = 1;
  ControllabilityInfo c = controllability_index(A, B);
  CHECK(c.index == 3);
  CHECK(c.controllable);
  MatrixXd B2 = MatrixXd::Identity(3, 2);
  c = controllability_index(MatrixXd::Identity(3, 3), B2);
  CHECK(c.index == 1);
  CHECK(c.rank == 2);
  CHECK_FALSE(c.controllable);
  CHECK(is_observable(A.transpose(), B.transpose()));
  CHECK_FALSE(is_observable(MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 2)));
}
