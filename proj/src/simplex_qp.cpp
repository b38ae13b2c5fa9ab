#include "moodyn/simplex_qp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace moodyn {

Vec project_simplex(const Vec& y) {
  const Eigen::Index m = y.size();
  if (m < 1) throw std::invalid_argument("project_simplex: empty vector");
  // already feasible up to rounding: return unchanged so projection is idempotent
  if ((y.array() >= 0.0).all() && std::abs(y.sum() - 1.0) <= 1e-14 * static_cast<double>(m)) return y;

  std::vector<double> s(y.data(), y.data() + m);
  std::sort(s.begin(), s.end(), std::greater<>());
  double cumsum = 0.0, tau = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    cumsum += s[k];
    double candidate = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (s[k] - candidate > 0.0) tau = candidate;
  }
  return (y.array() - tau).max(0.0).matrix();
}

namespace {

double kkt_tolerance(const Mat& Q, const Vec& c, const Vec& theta) {
  (void)theta;
  return 1e-10 * (Q.cwiseAbs().maxCoeff() + c.cwiseAbs().maxCoeff());
}

double kkt_residual(const Mat& Q, const Vec& c, const Vec& theta) {
  Vec r = Q * theta + c;
  double avg = theta.dot(r);
  return std::max(0.0, avg - r.minCoeff());
}

double objective(const Mat& Q, const Vec& c, const Vec& theta) {
  return 0.5 * theta.dot(Q * theta) + c.dot(theta);
}

// Exact minimizer on the face spanned by `support` (bordered KKT system).
// Returns nullopt if the face solution leaves the simplex.
std::optional<Vec> solve_face(const Mat& Q, const Vec& c, const std::vector<int>& support) {
  const int k = static_cast<int>(support.size());
  const int m = static_cast<int>(Q.rows());
  Mat K = Mat::Zero(k + 1, k + 1);
  Vec rhs(k + 1);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) K(a, b) = Q(support[a], support[b]);
    K(a, k) = 1.0;
    K(k, a) = 1.0;
    rhs[a] = -c[support[a]];
  }
  rhs[k] = 1.0;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(K);
  Vec sol = cod.solve(rhs);
  if (!sol.allFinite()) return std::nullopt;
  double scale = 1.0 + K.cwiseAbs().maxCoeff() + rhs.cwiseAbs().maxCoeff();
  if ((K * sol - rhs).cwiseAbs().maxCoeff() > 1e-10 * scale) return std::nullopt;
  Vec theta = Vec::Zero(m);
  for (int a = 0; a < k; ++a) {
    if (sol[a] < -1e-12) return std::nullopt;
    theta[support[a]] = std::max(0.0, sol[a]);
  }
  double s = theta.sum();
  if (!(s > 0.0)) return std::nullopt;
  return theta / s;
}

std::vector<int> support_of(const Vec& theta) {
  std::vector<int> s;
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (theta[i] > 0.0) s.push_back(static_cast<int>(i));
  return s;
}

}  // namespace

SimplexQpResult minimize_on_simplex(const Mat& Q, const Vec& c, const Vec* warm_start,
                                    int max_iterations) {
  const Eigen::Index m = Q.rows();
  if (m < 1 || Q.cols() != m || c.size() != m)
    throw std::invalid_argument("minimize_on_simplex: dimension mismatch");

  SimplexQpResult res;
  if (warm_start && warm_start->size() == m && warm_start->allFinite())
    res.theta = project_simplex(*warm_start);
  else
    res.theta = Vec::Constant(m, 1.0 / static_cast<double>(m));

  auto converged = [&](const Vec& th) { return kkt_residual(Q, c, th) <= kkt_tolerance(Q, c, th); };
  auto finish = [&](Vec th, int it) {
    res.theta = std::move(th);
    res.iterations = it;
    res.kkt_residual = kkt_residual(Q, c, res.theta);
    res.converged = res.kkt_residual <= kkt_tolerance(Q, c, res.theta);
    return res;
  };

  if (m == 1) return finish(Vec::Ones(1), 0);

  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (Q + Q.transpose()), Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double step = lmax > 0.0 ? 1.0 / lmax : 0.0;

  std::vector<int> last_support;
  for (int it = 0; it < max_iterations; ++it) {
    std::vector<int> support = support_of(res.theta);
    if (converged(res.theta)) {
      // polish: the exact minimizer on the certified support, if it is no worse
      if (auto face = solve_face(Q, c, support);
          face && converged(*face) && objective(Q, c, *face) <= objective(Q, c, res.theta))
        return finish(*face, it);
      return finish(res.theta, it);
    }
    if (support != last_support) {
      if (auto face = solve_face(Q, c, support); face && converged(*face)) return finish(*face, it);
      last_support = support;
    }
    if (step == 0.0) {
      // Q == 0: linear objective, optimum at the best vertex
      Eigen::Index best;
      c.minCoeff(&best);
      Vec th = Vec::Zero(m);
      th[best] = 1.0;
      return finish(th, it);
    }
    res.theta = project_simplex(res.theta - step * (Q * res.theta + c));
  }

  // Projected gradient did not certify: enumerate faces (m is small in practice).
  if (m <= 12) {
    std::optional<Vec> best;
    double best_val = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
      std::vector<int> support;
      for (int i = 0; i < m; ++i)
        if (mask & (1u << i)) support.push_back(i);
      if (auto face = solve_face(Q, c, support)) {
        double v = objective(Q, c, *face);
        if (v < best_val) {
          best_val = v;
          best = face;
        }
      }
    }
    if (best && objective(Q, c, *best) <= objective(Q, c, res.theta)) return finish(*best, max_iterations);
  }
  return finish(res.theta, max_iterations);
}

SimplexWeights min_norm_combination(const Mat& G, const Vec& b, const Vec* warm_start) {
  if (G.cols() < 1) throw std::invalid_argument("min_norm_combination: no vectors");
  if (G.rows() != b.size()) throw std::invalid_argument("min_norm_combination: dimension mismatch");
  Mat U = G.colwise() + b;
  Mat Q = U.transpose() * U;
  SimplexQpResult qp = minimize_on_simplex(Q, Vec::Zero(G.cols()), warm_start);
  SimplexWeights out;
  out.theta = qp.theta;
  out.w = G * qp.theta + b;
  out.value = out.w.squaredNorm();
  out.iterations = qp.iterations;
  return out;
}

SimplexWeights min_norm_combination(const std::vector<Vec>& G, const Vec& b, const Vec* warm_start) {
  if (G.empty()) throw std::invalid_argument("min_norm_combination: no vectors");
  Mat M(b.size(), static_cast<Eigen::Index>(G.size()));
  for (size_t i = 0; i < G.size(); ++i) {
    if (G[i].size() != b.size()) throw std::invalid_argument("min_norm_combination: dimension mismatch");
    M.col(static_cast<Eigen::Index>(i)) = G[i];
  }
  return min_norm_combination(M, b, warm_start);
}

double min_norm_kkt_defect(const Mat& G, const Vec& b, const Vec& w) {
  double ww = w.squaredNorm();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < G.cols(); ++i) worst = std::max(worst, ww - w.dot(G.col(i) + b));
  return worst;
}

SimplexWeights steepest_direction(const Problem& problem, const Vec& x, const Vec& shift,
                                  const Vec* warm_start) {
  return min_norm_combination(problem.jacobian(x), shift, warm_start);
}

}  // namespace moodyn
