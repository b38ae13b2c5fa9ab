#include <doctest.h>

#include <random>

#include "moodyn/dynamics.hpp"
#include "moodyn/problems.hpp"
#include "moodyn/scalarization.hpp"
#include "oracles.hpp"

using namespace moodyn;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Objective quadratic(const Vec& center) {
  return Objective{[center](const Vec& x) { return 0.5 * (x - center).squaredNorm(); },
                   [center](const Vec& x) -> Vec { return x - center; }};
}

// MOP-Ex2 without its two idle coordinates.
Problem ex2_planar() {
  Problem::Definition def;
  def.label = "ex2-planar";
  def.n = 2;
  def.components = {quadratic(vec({1, 1})), quadratic(vec({-1, 1}))};
  return Problem(def);
}

double grid_scalarized_min(const Problem& prob, const Vec& q, double eps, const Vec& center, double width) {
  auto f = [&](const Vec& z) { return scalarized_objective(prob, q, eps, z); };
  return oracle::box_grid_min_2d(f, center, width).value;
}

}  // namespace

TEST_SUITE("scalarization") {
  TEST_CASE("single quadratic at the origin") {
    Problem::Definition def;
    def.label = "half-norm";
    def.n = 3;
    def.components = {quadratic(Vec::Zero(3))};
    Problem prob(def);
    ScalarizationResult r = solve_scalarized(prob, Vec::Zero(1), 1.0, vec({1, -2, 3}));
    CHECK(r.certified);
    CHECK(r.z_star.norm() <= 1e-10);
    CHECK(std::abs(r.value) <= 1e-18);
    CHECK(r.gap_bound == doctest::Approx(r.cert * r.cert / 2.0));
  }

  TEST_CASE("closed-form path of the T-shaped example at t0") {
    Example25Config cfg;
    Problem prob = example25_problem(cfg);
    const double t = cfg.t0();
    ClosedPathPoint cp = example25_closed_path(cfg, t);
    ScalarizationResult r = solve_scalarized(prob, cp.q, cfg.beta / std::pow(t, cfg.p), cp.q);
    CHECK(r.certified);
    CHECK((r.z_star - cp.z).cwiseAbs().maxCoeff() <= 1e-5);
  }

  TEST_CASE("planar MOP-Ex2 against the grid oracle") {
    Problem prob = ex2_planar();
    ScalarizationResult r = solve_scalarized(prob, Vec::Zero(2), 0.1, vec({3, 3}));
    double g = grid_scalarized_min(prob, Vec::Zero(2), 0.1, Vec::Zero(2), 4.0);
    CHECK(r.value <= g + 1e-12);
    CHECK(std::abs(r.value - g) <= 1e-4);
  }

  TEST_CASE("random quadratic instances against the grid oracle") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      Problem prob = random_quadratics(100 + static_cast<unsigned>(k), 2, 2 + k % 3);
      Vec x = vec({2 * u(rng), 2 * u(rng)});
      Vec q = prob.values(x);
      double eps = 0.05 + 0.5 * (u(rng) + 1.0);
      ScalarizationResult r = solve_scalarized(prob, q, eps, x);
      double g = grid_scalarized_min(prob, q, eps, Vec::Zero(2), 5.0);
      worst = std::max(worst, std::abs(r.value - g));
      CHECK(r.certified);
      CHECK(r.value <= g + 1e-12);
    }
    MESSAGE("worst value gap vs grid oracle: ", worst);
    CHECK(worst <= 1e-4);
  }

  TEST_CASE("shifting the anchor by a constant shifts only the value") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 10; ++k) {
      Problem prob = random_quadratics(200 + static_cast<unsigned>(k), 3, 3);
      Vec q = prob.values(Vec::Constant(3, 0.5 * k - 2.0));
      ScalarizationResult a = solve_scalarized(prob, q, 0.3, Vec::Zero(3));
      ScalarizationResult b = solve_scalarized(prob, q + Vec::Constant(3, 1.25), 0.3, Vec::Zero(3));
      CHECK((a.z_star - b.z_star).norm() <= 1e-9);
      CHECK(b.value == doctest::Approx(a.value - 1.25).epsilon(1e-9));
    }
  }

  TEST_CASE("quadratic growth around the certified minimizer") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    Problem prob = mop_ex1_problem();
    for (int k = 0; k < 20; ++k) {
      Vec x = vec({3 * g(rng), 3 * g(rng)});
      const double eps = 0.05 + 0.1 * k;
      ScalarizationResult r = solve_scalarized(prob, prob.values(x), eps, x);
      const double delta = std::max(10.0 * r.cert / eps, 1e-3);
      for (int j = 0; j < 10; ++j) {
        Vec u = vec({g(rng), g(rng)}).normalized();
        double rise = scalarized_objective(prob, prob.values(x), eps, r.z_star + delta * u) - r.value;
        CHECK(rise >= eps * delta * delta / 2.0 - 2.0 * r.cert * delta - 1e-12);
      }
    }
  }

  TEST_CASE("merit_phi_t on MOP-Ex1 against the grid oracle") {
    Problem prob = mop_ex1_problem();
    DynParams P;
    P.beta = 0.5;
    P.p = 1.75;
    Vec x = vec({2.5, 0.5});
    MeritT m = merit_phi_t(prob, x, 1.0, P);
    const double eps = P.tikhonov(1.0);
    double g = grid_scalarized_min(prob, prob.values(x), eps, Vec::Zero(2), 4.0);
    CHECK(m.phi_t > 0.0);
    CHECK(m.phi_t == doctest::Approx(0.5 * eps * x.squaredNorm() - g).epsilon(1e-6));
  }

  TEST_CASE("distance bound holds with the doubled constant") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g(0.0, 2.0);
    for (const Problem& prob : {mop_ex1_problem(), example25_problem()}) {
      DynParams P;
      P.beta = 0.5;
      P.p = 1.75;
      for (int k = 0; k < 50; ++k) {
        Vec x = vec({g(rng), g(rng)});
        const double t = 1.0 + 5.0 * k;
        MeritT m = merit_phi_t(prob, x, t, P);
        CHECK(m.phi_t >= -m.gap_bound - 1e-12);
        CHECK((x - m.z).squaredNorm() <= 2.0 * std::pow(t, P.p) * (m.phi_t + m.gap_bound) / P.beta + 1e-9);
      }
    }
  }

  TEST_CASE("analytic merit of MOP-Ex2 agrees with a sup-min grid oracle") {
    Problem prob = mop_ex2_problem();
    Problem planar = ex2_planar();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-2.5, 2.5);
    for (int k = 0; k < 50; ++k) {
      Vec x = vec({u(rng), u(rng), u(rng), u(rng)});
      Vec x2 = x.head(2);
      auto neg = [&](const Vec& z) {
        return -std::min(planar.value(0, x2) - planar.value(0, z), planar.value(1, x2) - planar.value(1, z));
      };
      double sup = -oracle::box_grid_min_2d(neg, Vec::Zero(2), 4.0).value;
      CHECK(prob.analytic_merit(x) == doctest::Approx(sup).epsilon(1e-4));
    }
    for (double x2 : {-1.0, 0.0, 1.0, 2.5}) CHECK(prob.analytic_merit(vec({0, x2, 3, -7})) == 0.5 * (x2 - 1) * (x2 - 1));
  }

  TEST_CASE("analytic merit of MOP-Ex1 agrees with a sup-min grid oracle") {
    Problem prob = mop_ex1_problem();
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 50; ++k) {
      Vec x = vec({u(rng), u(rng)});
      auto neg = [&](const Vec& z) {
        return -std::min(prob.value(0, x) - prob.value(0, z), prob.value(1, x) - prob.value(1, z));
      };
      double sup = -oracle::box_grid_min_2d(neg, vec({0, 1.5}), 4.0).value;
      CHECK(prob.analytic_merit(x) == doctest::Approx(sup).epsilon(1e-4));
    }
  }

  TEST_CASE("merit interval brackets the analytic merit") {
    Problem prob = mop_ex2_problem();
    Problem::Definition def;
    def.label = "ex2-no-merit";
    def.n = 4;
    Problem exact = prob;
    def.components = {Objective{[&exact](const Vec& x) { return exact.value(0, x); },
                                [&exact](const Vec& x) { return exact.gradient(0, x); }},
                      Objective{[&exact](const Vec& x) { return exact.value(1, x); },
                                [&exact](const Vec& x) { return exact.gradient(1, x); }}};
    def.r_bound = std::sqrt(2.0);
    Problem blind(def);
    DynParams P;
    P.beta = 0.5;
    P.p = 1.75;
    for (double t : {1.0, 10.0, 100.0, 1000.0}) {
      for (const Vec& x : {vec({0, 2, 0, 0}), vec({2, 3, 4, 5}), vec({-0.5, 1, 1, 1})}) {
        MeritInterval iv = merit_phi(blind, x, t, P);
        double phi = prob.analytic_merit(x);
        CHECK(iv.lo <= phi + 1e-9);
        CHECK(iv.hi >= phi - 1e-9);
        CHECK_FALSE(iv.analytic);
      }
    }
    MeritInterval a = merit_phi(prob, vec({0, 1, 5, 5}), 1.0, P);
    CHECK(a.analytic);
    CHECK(a.lo == 0.0);
    CHECK(a.hi == 0.0);
    // the interval shrinks as t grows
    MeritInterval w1 = merit_phi(blind, vec({2, 3, 4, 5}), 10.0, P);
    MeritInterval w2 = merit_phi(blind, vec({2, 3, 4, 5}), 1000.0, P);
    CHECK(w2.hi - w2.lo < w1.hi - w1.lo);
  }

  TEST_CASE("path of a constant trajectory at a minimal-norm Pareto point") {
    Problem::Definition def;
    def.label = "two-wells";
    def.n = 1;
    def.components = {quadratic(vec({1})), quadratic(vec({-1}))};
    Problem prob(def);
    DynParams P;
    P.beta = 0.5;
    P.p = 1.75;
    P.T = 10.0;
    Trajectory traj;
    traj.params = P;
    for (int k = 0; k <= 90; ++k) traj.states.push_back(State{time_at(P, static_cast<size_t>(k)), vec({0}), vec({0})});
    std::vector<PathSample> path = regularization_path(prob, traj, P, 7);
    CHECK(path.back().index == 90);
    for (const PathSample& ps : path) CHECK(std::abs(ps.z[0]) <= 1e-9);
  }

  TEST_CASE("path of the T-shaped example stays in the oscillation band") {
    Example25Config cfg;
    Problem prob = example25_problem(cfg);
    Vec warm;
    for (int k = 0; k < 20; ++k) {
      const double t = cfg.t0() * (1.0 + 9.0 * k / 19.0);
      ClosedPathPoint cp = example25_closed_path(cfg, t);
      ScalarizationResult r = solve_scalarized(prob, cp.q, cfg.beta / std::pow(t, cfg.p), warm.size() ? warm : cp.q);
      warm = r.z_star;
      CHECK(r.z_star[1] >= 2.25 - 1e-9);
      CHECK(r.z_star[1] <= 2.75 + 1e-9);
    }
  }

  TEST_CASE("regularization path needs regularization") {
    Trajectory traj;
    DynParams P;
    P.beta = 0.0;
    traj.states.push_back(State{1.0, vec({0, 0}), vec({0, 0})});
    CHECK_THROWS_AS(regularization_path(mop_ex1_problem(), traj, P), std::invalid_argument);
  }
}
