#pragma once

#include <optional>
#include <vector>

#include "moodyn/core.hpp"

namespace moodyn {

/// Minimizer of Phi(z) = max_i (f_i(z) - q_i) + eps/2 |z|^2.
struct ScalarizationResult {
  Vec z_star;
  double value = 0.0;
  /// Norm of the minimal-norm element of conv{grad f_i(z*) + eps z* : i active}.
  double cert = 0.0;
  /// cert^2 / (2 eps); bounds value - value_exact.
  double gap_bound = 0.0;
  int iterations = 0;
  bool certified = false;
  Vec theta;  // multipliers of the final active set, length m
};

/// Phi(z) for the given anchor and regularization weight.
double scalarized_objective(const Problem& problem, const Vec& q, double eps, const Vec& z);

/// Sequential quadratic programming on the epigraph form, globalized by a
/// backtracking line search on Phi and finished by a Newton solve of the KKT
/// system on the identified active set. Stops once cert <= tol; after
/// max_iterations the best iterate is returned with certified = false.
ScalarizationResult solve_scalarized(const Problem& problem, const Vec& q, double eps, const Vec& z_init,
                                     double tol = 1e-10, int max_iterations = 10000);

struct MeritT {
  double phi_t = 0.0;
  Vec z;
  double gap_bound = 0.0;
  bool certified = false;
};

/// phi_t(x) = beta/(2 t^p)|x|^2 - min_z Phi(z) with q = F(x), eps = beta/t^p.
/// The reported value underestimates the exact one by at most gap_bound.
MeritT merit_phi_t(const Problem& problem, const Vec& x, double t, const DynParams& params,
                   double tol = 1e-10, const Vec* z_warm = nullptr);

struct MeritInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool analytic = false;
};

/// Two-sided bound on the unregularized merit phi(x); exact when the problem
/// carries an analytic merit oracle. Otherwise needs beta > 0 and an R bound
/// (argument, else the problem's own).
MeritInterval merit_phi(const Problem& problem, const Vec& x, double t, const DynParams& params,
                        std::optional<double> r_bound = std::nullopt, double tol = 1e-10);

/// Bound for a merit computed from an already solved phi_t.
MeritInterval merit_interval_from(double phi_t, double gap_bound, double x_norm_sq, double t,
                                  const DynParams& params, double r_bound);

struct PathSample {
  std::size_t index = 0;  // trajectory sample index
  double t = 0.0;
  Vec q;
  Vec z;
  double distance = 0.0;
  double phi_t = 0.0;
  double gap_bound = 0.0;
  bool certified = false;
  bool within_r = true;  // |z| <= R + 1e-6 when R is known
};

struct Trajectory;

/// Generalized regularization path along a trajectory, sampled every `stride`
/// states (the last state is always included). Warm-started from the previous
/// path point, the first solve from x(t).
std::vector<PathSample> regularization_path(const Problem& problem, const Trajectory& trajectory,
                                            const DynParams& params, std::size_t stride = 1,
                                            double tol = 1e-10);

/// max |z| over the samples plus a 10% margin.
double estimate_r_bound(const std::vector<PathSample>& samples);

}  // namespace moodyn
