#pragma once

#include <cstdint>

#include "moodyn/core.hpp"

namespace moodyn {

/// T-shaped weak Pareto set with an oscillating closed-form regularization path.
struct Example25Config {
  double beta = 0.5;
  double p = 1.0;
  double eta = 1.0 / 50.0;

  /// (192 beta)^(1/p)
  double t0() const;
};

void validate(const Example25Config& config);

Problem example25_problem(const Example25Config& config = {});

/// Euclidean projection onto M1 = {|x1| <= 1, x2 + 1 <= sqrt(1 - x1^2)}; this is
/// the gradient of the shared component g of the two objectives.
Vec example25_projection_m1(const Vec& x);

/// Value of g, evaluated piecewise.
double example25_g(const Vec& x);

struct ClosedPathPoint {
  Vec q;  // anchor q(t)
  Vec z;  // closed-form path point z(t)
};

/// Closed-form anchor and path point at time t >= t0. Throws for t < t0.
ClosedPathPoint example25_closed_path(const Example25Config& config, double t);

/// Residuals of 0 in the subdifferential of the scalarized objective at the
/// closed-form z(t): the smooth second coordinate must vanish and the first
/// coordinate's smooth part must lie in [-1, 1].
struct Example25Stationarity {
  double second_residual = 0.0;
  double first_smooth_part = 0.0;
};
Example25Stationarity example25_stationarity(const Example25Config& config, double t);

/// f_i(x) = 1/2 dist(x, S_i)^2 with S_1 = {-1} x [1,2], S_2 = {1} x [1,2].
Problem mop_ex1_problem();

/// Two quadratics on R^4 whose weak Pareto set is [-1,1] x {1} x R x R.
Problem mop_ex2_problem();

/// m quadratics 1/2 (x - c_i)' A_i (x - c_i) with spec(A_i) in [1/conditioning, 1].
/// Bitwise deterministic in the seed on every platform.
Problem random_quadratics(std::uint64_t seed, int n, int m, double conditioning = 10.0);

/// Registry: "example25", "mop-ex1", "mop-ex2", "quad:<seed>:<n>:<m>".
Problem make_problem(const std::string& label);

}  // namespace moodyn
