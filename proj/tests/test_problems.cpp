#include <doctest.h>

#include <random>

#include "moodyn/problems.hpp"

using namespace moodyn;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_SUITE("problems") {
  TEST_CASE("T-shaped example: gradient of g by region") {
    CHECK(example25_projection_m1(vec({0, 0})).norm() == 0.0);
    CHECK((example25_projection_m1(vec({2, -2})) - vec({1, -2})).norm() <= 1e-15);
    // f1(0, 2) = 1/2 + 0 + (sqrt(9) - 3)
    Problem prob = example25_problem();
    CHECK(prob.value(0, vec({0, 2})) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(example25_g(vec({0, 2})) == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("T-shaped example: g value pieces agree across region boundaries") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int k = 0; k < 500; ++k) {
      Vec x = vec({u(rng), u(rng)});
      Vec e = vec({1e-7, -2e-7});
      double dg = example25_g(x + e) - example25_g(x - e);
      CHECK(dg == doctest::Approx(2.0 * example25_projection_m1(x).dot(e)).epsilon(1e-5).scale(1e-9));
    }
  }

  TEST_CASE("T-shaped example: closed-form path") {
    Example25Config cfg;
    CHECK(cfg.t0() == doctest::Approx(96.0));
    for (int k = 0; k < 100; ++k) {
      const double t = cfg.t0() * (1.0 + 9.0 * k / 99.0);
      ClosedPathPoint cp = example25_closed_path(cfg, t);
      CHECK(cp.z[0] == doctest::Approx(-cp.q[0] / 2.0).epsilon(1e-15));
      CHECK(cp.z[1] >= 2.25);
      CHECK(cp.z[1] <= 2.75);
      Example25Stationarity st = example25_stationarity(cfg, t);
      CHECK(std::abs(st.second_residual) <= 1e-10);
      CHECK(std::abs(st.first_smooth_part) <= 1.0);
    }
    CHECK_THROWS_AS(example25_closed_path(cfg, 10.0), std::domain_error);
    Problem prob = example25_problem(cfg);
    ClosedPathPoint cp = example25_closed_path(cfg, 200.0);
    CHECK((*prob.analytic_path(200.0, cp.q) - cp.z).norm() <= 1e-12);
  }

  TEST_CASE("MOP-Ex1 oracles") {
    Problem prob = mop_ex1_problem();
    CHECK(prob.analytic_merit(vec({0, 1.5})) == 0.0);
    CHECK((prob.gradient(1, vec({2.5, 0.5})) - vec({1.5, -0.5})).norm() <= 1e-15);
    CHECK((prob.analytic_limit(vec({0.3, 1.7})) - vec({0.3, 1})).norm() == 0.0);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0, 3);
    for (int k = 0; k < 200; ++k) {
      Vec x = vec({g(rng), g(rng)}), y = vec({g(rng), g(rng)});
      for (int i = 0; i < 2; ++i) CHECK((prob.gradient(i, x) - prob.gradient(i, y)).norm() <= (x - y).norm() + 1e-12);
    }
  }

  TEST_CASE("MOP-Ex2 oracles") {
    Problem prob = mop_ex2_problem();
    CHECK((prob.gradient(0, Vec::Zero(4)) - vec({-1, -1, 0, 0})).norm() == 0.0);
    CHECK(prob.analytic_merit(vec({0, 1, 7, -3})) == 0.0);
    CHECK(prob.analytic_merit(vec({0, 2, 0, 0})) == 0.5);
  }

  TEST_CASE("random quadratics") {
    Problem a = random_quadratics(9, 3, 1), b = random_quadratics(9, 3, 1);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0, 1);
    for (int k = 0; k < 20; ++k) {
      Vec x = vec({g(rng), g(rng), g(rng)});
      CHECK(a.value(0, x) == b.value(0, x));
      CHECK((a.gradient(0, x) - b.gradient(0, x)).norm() == 0.0);
      CHECK(gradient_fd_error(a, 0, x) <= 1e-5);
    }
    // m = 1: the minimizer is where the gradient vanishes; value there is 0
    Vec x = Vec::Zero(3);
    for (int it = 0; it < 200; ++it) x -= a.gradient(0, x);
    CHECK(a.gradient(0, x).norm() <= 1e-8);
    CHECK(a.value(0, x) <= 1e-15);
    CHECK_THROWS(random_quadratics(1, 0, 2));
  }

  TEST_CASE("registry") {
    CHECK(make_problem("mop-ex1").dim() == 2);
    CHECK(make_problem("mop-ex2").dim() == 4);
    CHECK(make_problem("example25").num_objectives() == 2);
    Problem q = make_problem("quad:5:3:4");
    CHECK(q.dim() == 3);
    CHECK(q.num_objectives() == 4);
    CHECK_THROWS_AS(make_problem("quad:5:x:4"), std::invalid_argument);
    CHECK_THROWS_AS(make_problem("rosenbrock"), std::invalid_argument);
  }
}
