#pragma once

#include "moodyn/core.hpp"

namespace moodyn {

/// theta in the unit simplex with the combination w = sum theta_i g_i + b.
struct SimplexWeights {
  Vec theta;
  Vec w;
  double value = 0.0;  // |w|^2
  int iterations = 0;
};

/// Euclidean projection onto {theta >= 0, sum theta = 1}.
Vec project_simplex(const Vec& y);

/// Minimizer over the simplex of 1/2 theta' Q theta + c' theta (Q symmetric PSD).
struct SimplexQpResult {
  Vec theta;
  int iterations = 0;
  double kkt_residual = 0.0;  // max_i (theta'r - r_i)_+ with r = Q theta + c
  bool converged = false;
};

/// Projected gradient with step 1/lambda_max(Q), polished by an exact solve on
/// the current support once the support stabilizes. Stops when the KKT
/// residual drops below 1e-9 (1 + |theta'Q theta| + |c'theta|).
SimplexQpResult minimize_on_simplex(const Mat& Q, const Vec& c, const Vec* warm_start = nullptr,
                                    int max_iterations = 10000);

/// Minimal-norm point of conv{g_i} + b, with G holding the g_i as columns.
SimplexWeights min_norm_combination(const Mat& G, const Vec& b, const Vec* warm_start = nullptr);
SimplexWeights min_norm_combination(const std::vector<Vec>& G, const Vec& b,
                                    const Vec* warm_start = nullptr);

/// KKT defect of a candidate: max_i (|w|^2 - <w, g_i + b>), clipped at zero.
double min_norm_kkt_defect(const Mat& G, const Vec& b, const Vec& w);

/// Minimal-norm element of C(x) + shift, where C(x) = conv{grad f_i(x)}.
SimplexWeights steepest_direction(const Problem& problem, const Vec& x, const Vec& shift,
                                  const Vec* warm_start = nullptr);

}  // namespace moodyn
