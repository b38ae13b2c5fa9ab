#include <doctest.h>

#include "moodyn/dynamics.hpp"
#include "moodyn/problems.hpp"
#include "moodyn/simplex_qp.hpp"
#include "oracles.hpp"

using namespace moodyn;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Problem scaled_half_square(int n, double curvature) {
  Problem::Definition def;
  def.label = "half-square";
  def.n = n;
  def.components = {Objective{[curvature](const Vec& x) { return 0.5 * curvature * x.squaredNorm(); },
                              [curvature](const Vec& x) -> Vec { return curvature * x; }}};
  return Problem(def);
}

DynParams ex1_params() {
  DynParams P;
  P.alpha = 4;
  P.beta = 0.5;
  P.p = 1.75;
  P.q = 0.875;
  P.t0 = 1;
  P.h = 1e-2;
  P.T = 100;
  return P;
}

}  // namespace

TEST_SUITE("dynamics") {
  TEST_CASE("single objective right-hand side") {
    Problem prob = random_quadratics(3, 3, 1);
    DynParams P = ex1_params();
    State s{2.5, vec({1, -2, 0.5}), vec({0.3, 0.1, -1})};
    Rhs r = di_rhs(prob, P, s);
    Vec expect = -P.damping(2.5) * s.v - P.tikhonov(2.5) * s.x - prob.gradient(0, s.x);
    CHECK((r.a - expect).norm() <= 1e-14);
    CHECK(r.theta[0] == 1.0);
  }

  TEST_CASE("rest at a common minimizer") {
    Problem prob = scaled_half_square(2, 1.0);
    DynParams P = ex1_params();
    P.beta = 0.0;
    P.q = 1.0;
    Rhs r = di_rhs(prob, P, State{3.0, Vec::Zero(2), Vec::Zero(2)});
    CHECK(r.a.norm() == 0.0);
    CHECK((r.flags & kFlagDegenerateVelocity) != 0);
    StepResult sr = step(prob, P, State{3.0, Vec::Zero(2), Vec::Zero(2)}, Vec::Zero(2));
    CHECK(sr.next.x.norm() == 0.0);
  }

  TEST_CASE("MOP-Ex2 acceleration at the start of the sweep runs") {
    Problem prob = mop_ex2_problem();
    DynParams P;
    P.alpha = 4;
    P.beta = 0.5;
    P.p = 1.1;
    P.q = 0.8;
    Vec x = vec({2, 3, 4, 5});
    Rhs r = di_rhs(prob, P, State{1.0, x, Vec::Zero(4)});
    // min over theta of |theta grad f1 + (1-theta) grad f2 + x/2| is attained at theta = 1
    CHECK((r.a - vec({-2, -3.5, -2, -2.5})).norm() <= 1e-12);
    Mat G = prob.jacobian(x);
    auto f = [&](const Vec& th) { return (G * th + 0.5 * x).squaredNorm(); };
    oracle::GridMin gm = oracle::simplex_grid_min(f, 2);
    CHECK((r.a + 0.5 * x + G * gm.arg).norm() <= 1e-4);
  }

  TEST_CASE("one step by hand") {
    Problem prob = scaled_half_square(1, 1.0);
    DynParams P;
    P.alpha = 4;
    P.beta = 0;
    P.q = 1;
    P.h = 0.1;
    P.t0 = 1;
    P.T = 2;
    StepResult sr = step(prob, P, State{1.0, vec({1}), vec({0})}, vec({1}));
    // (2 - 1 + 0.4 - 0.01) / 1.4
    CHECK(sr.next.x[0] == doctest::Approx(1.39 / 1.4).epsilon(1e-15));
    CHECK(sr.next.v[0] == doctest::Approx((1.39 / 1.4 - 1.0) / 0.1).epsilon(1e-12));
  }

  TEST_CASE("time grid and bookkeeping") {
    DynParams P = ex1_params();
    CHECK(time_at(P, 0) == 1.0);
    CHECK(time_at(P, 9900) == 1.0 + 9900 * 0.01);
    CHECK(step_count(P) == 9900);
    Trajectory traj = integrate(mop_ex1_problem(), P, vec({2.5, 0.5}), Vec::Zero(2));
    CHECK(traj.states.size() == traj.accel.size() + 1);
    CHECK(traj.weights.size() == traj.accel.size());
    CHECK(traj.flags.size() == traj.accel.size());
    for (size_t k = 0; k < traj.states.size(); k += 997) CHECK(traj.states[k].t == time_at(P, k));
    CHECK(traj.states.back().t >= P.T);
  }

  TEST_CASE("zero-length horizon") {
    DynParams P = ex1_params();
    P.T = P.t0;
    Trajectory traj = integrate(mop_ex1_problem(), P, vec({2.5, 0.5}), Vec::Zero(2));
    CHECK(traj.states.size() == 1);
    CHECK(traj.steps() == 0);
  }

  TEST_CASE("weights reproduce the acceleration") {
    Problem prob = mop_ex2_problem();
    DynParams P = ex1_params();
    P.p = 1.1;
    P.q = 0.8;
    P.h = 1e-2;
    P.T = 30;
    Trajectory traj = integrate(prob, P, vec({2, 3, 4, 5}), Vec::Zero(4));
    for (size_t k = 1; k < traj.accel.size(); ++k) {
      const State& s = traj.states[k];
      Vec resid = traj.accel[k] + P.damping(s.t) * s.v + P.tikhonov(s.t) * s.x + prob.jacobian(s.x) * traj.weights[k];
      CHECK(resid.norm() <= 1e-9 * (1.0 + traj.accel[k].norm()));
      CHECK(traj.weights[k].minCoeff() >= 0.0);
      CHECK(std::abs(traj.weights[k].sum() - 1.0) <= 1e-10);
    }
  }

  TEST_CASE("single objective matches a directly coded stepper") {
    Problem prob = random_quadratics(42, 3, 1);
    DynParams P = ex1_params();
    P.T = P.t0 + 1e4 * P.h;
    Vec x0 = vec({2, -1, 0.5}), v0 = vec({0.1, 0, -0.2});
    Trajectory traj = integrate(prob, P, x0, v0);
    REQUIRE(traj.steps() == 10000);
    std::vector<Vec> ref = oracle::trigs_reference([&](const Vec& x) { return prob.gradient(0, x); }, P.alpha, P.beta,
                                                   P.p, P.q, P.t0, P.h, 10000, x0, v0);
    double worst = 0.0;
    for (size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, (traj.states[k].x - ref[k]).cwiseAbs().maxCoeff());
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("MOP-Ex1 with regularization approaches the minimal-norm solution") {
    Trajectory traj = integrate(mop_ex1_problem(), ex1_params(), vec({2.5, 0.5}), Vec::Zero(2));
    const Vec& x = traj.states.back().x;
    CHECK(std::abs(x[1] - 1.0) <= 0.05);
    CHECK(std::abs(x[0]) <= 1.0);
  }

  TEST_CASE("MOP-Ex2 run ends near the weak Pareto set") {
    DynParams P = ex1_params();
    P.q = 0.8;
    P.p = 1.1;
    P.h = 1e-3;
    Trajectory traj = integrate(mop_ex2_problem(), P, vec({2, 3, 4, 5}), Vec::Zero(4));
    const Vec& x = traj.states.back().x;
    CHECK(std::abs(x[0]) <= 1.0);
    CHECK(x[1] == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("first-order convergence in the step size") {
    Problem prob = mop_ex2_problem();
    DynParams P = ex1_params();
    P.q = 0.8;
    P.p = 1.1;
    std::vector<Vec> finals;
    for (double h : {4e-3, 2e-3, 1e-3}) {
      P.h = h;
      finals.push_back(integrate(prob, P, vec({2, 3, 4, 5}), Vec::Zero(4)).states.back().x);
    }
    double ratio = (finals[0] - finals[1]).norm() / (finals[1] - finals[2]).norm();
    MESSAGE("successive difference ratio: ", ratio);
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 3.0);
  }

  TEST_CASE("blow-up is reported as a numeric failure") {
    Problem prob = scaled_half_square(1, 1e6);
    DynParams P = ex1_params();
    P.h = 0.5;
    P.T = 1000;
    CHECK_THROWS_AS(integrate(prob, P, vec({1}), vec({0})), NumericError);
  }

  TEST_CASE("flag names round-trip") {
    for (unsigned f : {0u, 1u, 2u, 3u}) CHECK(flags_from_string(flags_to_string(f)) == f);
    CHECK(flags_to_string(kFlagDegenerateVelocity | kFlagWarmStartReset) == "degenerate_v|qp_reset");
    CHECK_THROWS_AS(flags_from_string("bogus"), std::invalid_argument);
  }
}
