#include "moodyn/scalarization.hpp"

#include <cmath>
#include <limits>

#include "moodyn/dynamics.hpp"
#include "moodyn/simplex_qp.hpp"

namespace moodyn {

namespace {

struct Point {
  Vec z;
  Vec l;  // f_i(z) - q_i
  Mat G;  // gradients as columns
  double phi = 0.0;
};

Point evaluate(const Problem& problem, const Vec& q, double eps, const Vec& z) {
  Point p;
  p.z = z;
  p.l = problem.values(z) - q;
  p.G = problem.jacobian(z);
  p.phi = p.l.maxCoeff() + 0.5 * eps * z.squaredNorm();
  return p;
}

std::vector<int> active_set(const Vec& l) {
  double top = l.maxCoeff();
  double cut = top - 1e-8 * (1.0 + std::abs(top));
  std::vector<int> a;
  for (Eigen::Index i = 0; i < l.size(); ++i)
    if (l[i] >= cut) a.push_back(static_cast<int>(i));
  return a;
}

Mat columns(const Mat& G, const std::vector<int>& idx) {
  Mat out(G.rows(), static_cast<Eigen::Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = G.col(idx[k]);
  return out;
}

struct Certificate {
  double norm = 0.0;
  Vec theta;  // length m
};

Certificate certificate(const Point& p, double eps) {
  std::vector<int> a = active_set(p.l);
  SimplexWeights sw = min_norm_combination(columns(p.G, a), eps * p.z);
  Certificate c;
  c.norm = sw.w.norm();
  c.theta = Vec::Zero(p.l.size());
  for (size_t k = 0; k < a.size(); ++k) c.theta[a[k]] = sw.theta[static_cast<Eigen::Index>(k)];
  return c;
}

// Central differences of the gradient oracle, symmetrized.
Mat fd_hessian(const Problem& problem, int i, const Vec& z) {
  const Eigen::Index n = z.size();
  Mat H(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double hj = 1e-5 * std::max(1.0, std::abs(z[j]));
    Vec zp = z, zm = z;
    zp[j] += hj;
    zm[j] -= hj;
    H.col(j) = (problem.gradient(i, zp) - problem.gradient(i, zm)) / (2.0 * hj);
  }
  return 0.5 * (H + H.transpose());
}

Mat clamp_psd(const Mat& H) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  Vec ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Mat weighted_hessian(const Problem& problem, const Vec& z, const Vec& theta) {
  const Eigen::Index n = z.size();
  Mat H = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (theta[i] > 0.0) H += theta[i] * fd_hessian(problem, static_cast<int>(i), z);
  return H;
}

// Newton iteration on the KKT system of the epigraph problem restricted to `support`:
//   sum theta_i grad f_i(z) + eps z = 0,  f_i(z) - q_i = s (i in support),  sum theta_i = 1.
std::optional<Point> kkt_newton(const Problem& problem, const Vec& q, double eps, const Point& start,
                                const std::vector<int>& support, const Vec& theta0) {
  const Eigen::Index n = start.z.size();
  const auto k = static_cast<Eigen::Index>(support.size());
  Vec th(k);
  for (Eigen::Index a = 0; a < k; ++a) th[a] = std::max(theta0[support[a]], 0.0);
  if (!(th.sum() > 0.0)) th.setConstant(1.0 / static_cast<double>(k));
  th /= th.sum();

  Point p = start;
  double s = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) s += p.l[support[a]] / static_cast<double>(k);

  auto residual = [&](const Point& pt, const Vec& tv, double sv) {
    Vec r(n + k + 1);
    Mat GA = columns(pt.G, support);
    r.head(n) = GA * tv + eps * pt.z;
    for (Eigen::Index a = 0; a < k; ++a) r[n + a] = pt.l[support[a]] - sv;
    r[n + k] = tv.sum() - 1.0;
    return r;
  };

  Vec r = residual(p, th, s);
  for (int it = 0; it < 30; ++it) {
    double scale = 1.0 + p.G.cwiseAbs().maxCoeff() + std::abs(s);
    if (r.norm() <= 1e-14 * scale) break;
    Vec full_theta = Vec::Zero(q.size());
    for (Eigen::Index a = 0; a < k; ++a) full_theta[support[a]] = th[a];
    Mat J = Mat::Zero(n + k + 1, n + k + 1);
    J.topLeftCorner(n, n) = weighted_hessian(problem, p.z, full_theta.cwiseMax(0.0));
    J.topLeftCorner(n, n).diagonal().array() += eps;
    Mat GA = columns(p.G, support);
    J.block(0, n, n, k) = GA;
    J.block(n, 0, k, n) = GA.transpose();
    J.block(n, n + k, k, 1).setConstant(-1.0);
    J.block(n + k, n, 1, k).setConstant(1.0);
    Vec delta = Eigen::CompleteOrthogonalDecomposition<Mat>(J).solve(-r);
    if (!delta.allFinite()) return std::nullopt;
    Point next = evaluate(problem, q, eps, p.z + delta.head(n));
    Vec th_next = th + delta.segment(n, k);
    double s_next = s + delta[n + k];
    Vec r_next = residual(next, th_next, s_next);
    if (!(r_next.norm() < r.norm())) break;
    p = std::move(next);
    th = th_next;
    s = s_next;
    r = r_next;
  }
  if ((th.array() < -1e-12).any()) return std::nullopt;
  return p;
}

}  // namespace

double scalarized_objective(const Problem& problem, const Vec& q, double eps, const Vec& z) {
  return (problem.values(z) - q).maxCoeff() + 0.5 * eps * z.squaredNorm();
}

ScalarizationResult solve_scalarized(const Problem& problem, const Vec& q, double eps, const Vec& z_init,
                                     double tol, int max_iterations) {
  if (!(eps > 0.0)) throw std::invalid_argument("solve_scalarized: eps must be > 0");
  if (!(tol > 0.0)) throw std::invalid_argument("solve_scalarized: tol must be > 0");
  if (q.size() != problem.num_objectives()) throw std::invalid_argument("solve_scalarized: q must have length m");
  if (!q.allFinite() || !z_init.allFinite()) throw std::invalid_argument("solve_scalarized: non-finite input");
  const Eigen::Index m = problem.num_objectives();

  Point p = evaluate(problem, q, eps, z_init);
  Certificate cert = certificate(p, eps);
  Vec theta = cert.theta;

  ScalarizationResult res;
  auto finish = [&](int it) {
    res.z_star = p.z;
    res.value = p.phi;
    res.cert = cert.norm;
    res.gap_bound = cert.norm * cert.norm / (2.0 * eps);
    res.iterations = it;
    res.certified = cert.norm <= tol;
    res.theta = cert.theta;
    return res;
  };

  for (int it = 0; it < max_iterations; ++it) {
    if (cert.norm <= tol) return finish(it);

    // QP model: max_i (l_i + u_i'd) + 1/2 d'Bd, solved through its dual over the simplex
    Mat B = clamp_psd(weighted_hessian(problem, p.z, theta));
    B.diagonal().array() += eps;
    Eigen::LLT<Mat> llt(B);
    Mat U = p.G.colwise() + eps * p.z;
    Mat BinvU = llt.solve(U);
    Mat Q = U.transpose() * BinvU;
    Q = 0.5 * (Q + Q.transpose());
    SimplexQpResult qp = minimize_on_simplex(Q, -p.l, &theta);
    Vec d = -BinvU * qp.theta;
    double predicted = (p.l + U.transpose() * d).maxCoeff() - p.l.maxCoeff() + 0.5 * d.dot(B * d);
    theta = qp.theta;

    // Newton polish on the support of the QP multipliers
    std::vector<int> support;
    for (Eigen::Index i = 0; i < m; ++i)
      if (theta[i] > 1e-12) support.push_back(static_cast<int>(i));
    if (!support.empty()) {
      if (auto polished = kkt_newton(problem, q, eps, p, support, theta)) {
        Certificate pc = certificate(*polished, eps);
        if (pc.norm < cert.norm && polished->phi <= p.phi + 1e-12 * (1.0 + std::abs(p.phi))) {
          p = std::move(*polished);
          cert = pc;
          continue;
        }
      }
    }

    if (!(predicted < 0.0) || !d.allFinite()) return finish(it + 1);
    double step = 1.0;
    bool accepted = false;
    while (step > 1e-12) {
      Point trial = evaluate(problem, q, eps, p.z + step * d);
      if (trial.phi <= p.phi + 1e-4 * step * predicted) {
        p = std::move(trial);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return finish(it + 1);
    cert = certificate(p, eps);
  }
  return finish(max_iterations);
}

MeritT merit_phi_t(const Problem& problem, const Vec& x, double t, const DynParams& params, double tol,
                   const Vec* z_warm) {
  if (!(params.beta > 0.0)) throw std::invalid_argument("merit_phi_t requires beta > 0");
  if (!(t > 0.0)) throw std::invalid_argument("merit_phi_t requires t > 0");
  const double eps = params.tikhonov(t);
  ScalarizationResult sr = solve_scalarized(problem, problem.values(x), eps, z_warm ? *z_warm : x, tol);
  MeritT out;
  out.phi_t = 0.5 * eps * x.squaredNorm() - sr.value;
  out.z = sr.z_star;
  out.gap_bound = sr.gap_bound;
  out.certified = sr.certified;
  return out;
}

MeritInterval merit_interval_from(double phi_t, double gap_bound, double x_norm_sq, double t,
                                  const DynParams& params, double r_bound) {
  const double eps = params.tikhonov(t);
  MeritInterval iv;
  iv.hi = std::max(0.0, phi_t + 0.5 * eps * r_bound * r_bound + gap_bound);
  iv.lo = std::min(iv.hi, std::max(0.0, phi_t - gap_bound - 0.5 * eps * x_norm_sq));
  return iv;
}

MeritInterval merit_phi(const Problem& problem, const Vec& x, double t, const DynParams& params,
                        std::optional<double> r_bound, double tol) {
  if (problem.has_analytic_merit()) {
    double v = problem.analytic_merit(x);
    return MeritInterval{v, v, true};
  }
  std::optional<double> R = r_bound ? r_bound : problem.r_bound();
  if (!R) throw std::invalid_argument("merit_phi needs an R bound for problem '" + problem.label() + "'");
  MeritT mt = merit_phi_t(problem, x, t, params, tol);
  return merit_interval_from(mt.phi_t, mt.gap_bound, x.squaredNorm(), t, params, *R);
}

std::vector<PathSample> regularization_path(const Problem& problem, const Trajectory& trajectory,
                                            const DynParams& params, std::size_t stride, double tol) {
  if (trajectory.states.empty()) throw std::invalid_argument("regularization_path: empty trajectory");
  if (!(params.beta > 0.0)) throw std::invalid_argument("regularization_path requires beta > 0");
  if (stride == 0) stride = 1;
  const std::size_t last = trajectory.states.size() - 1;
  const std::optional<double> R = problem.r_bound();

  std::vector<PathSample> out;
  Vec warm = trajectory.states.front().x;
  for (std::size_t k = 0;; k += stride) {
    if (k > last) k = last;
    const State& s = trajectory.states[k];
    const double eps = params.tikhonov(s.t);
    PathSample ps;
    ps.index = k;
    ps.t = s.t;
    ps.q = problem.values(s.x);
    ScalarizationResult sr = solve_scalarized(problem, ps.q, eps, warm, tol);
    ps.z = sr.z_star;
    ps.distance = (s.x - ps.z).norm();
    ps.phi_t = 0.5 * eps * s.x.squaredNorm() - sr.value;
    ps.gap_bound = sr.gap_bound;
    ps.certified = sr.certified;
    ps.within_r = !R || ps.z.norm() <= *R + 1e-6;
    warm = ps.z;
    out.push_back(std::move(ps));
    if (k == last) break;
  }
  return out;
}

double estimate_r_bound(const std::vector<PathSample>& samples) {
  double r = 0.0;
  for (const PathSample& s : samples) r = std::max(r, s.z.norm());
  return 1.1 * r;
}

}  // namespace moodyn
