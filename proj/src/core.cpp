#include "moodyn/core.hpp"

#include <cmath>
#include <sstream>

namespace moodyn {

Problem::Problem(Definition def) : def_(std::move(def)) {
  if (def_.n < 1) throw std::invalid_argument("problem dimension n must be >= 1");
  if (def_.components.empty()) throw std::invalid_argument("problem needs at least one objective");
  for (const Objective& c : def_.components) {
    if (!c.value || !c.gradient) throw std::invalid_argument("objective is missing an oracle");
  }
  if (!def_.lipschitz.empty()) {
    if (def_.lipschitz.size() != def_.components.size())
      throw std::invalid_argument("lipschitz list must have one entry per objective");
    for (double l : def_.lipschitz)
      if (!(l > 0.0)) throw std::invalid_argument("lipschitz constants must be positive");
  }
  if (def_.r_bound && !(*def_.r_bound >= 0.0))
    throw std::invalid_argument("R bound must be nonnegative");
}

void Problem::check_point(const Vec& x) const {
  if (x.size() != def_.n) {
    std::ostringstream os;
    os << "point has length " << x.size() << ", problem '" << def_.label << "' expects " << def_.n;
    throw std::invalid_argument(os.str());
  }
}

double Problem::value(int i, const Vec& x) const {
  check_point(x);
  double v = def_.components.at(i).value(x);
  if (!std::isfinite(v)) throw OracleError("objective " + std::to_string(i) + " returned a non-finite value");
  return v;
}

Vec Problem::gradient(int i, const Vec& x) const {
  check_point(x);
  Vec g = def_.components.at(i).gradient(x);
  if (g.size() != def_.n)
    throw OracleError("gradient of objective " + std::to_string(i) + " has wrong length");
  if (!g.allFinite())
    throw OracleError("gradient of objective " + std::to_string(i) + " is not finite");
  return g;
}

Vec Problem::values(const Vec& x) const {
  Vec f(num_objectives());
  for (int i = 0; i < num_objectives(); ++i) f[i] = value(i, x);
  return f;
}

Mat Problem::jacobian(const Vec& x) const {
  Mat g(def_.n, num_objectives());
  for (int i = 0; i < num_objectives(); ++i) g.col(i) = gradient(i, x);
  return g;
}

double Problem::analytic_merit(const Vec& x) const {
  if (!def_.analytic_merit) throw std::logic_error("problem '" + def_.label + "' has no analytic merit");
  check_point(x);
  return def_.analytic_merit(x);
}

std::optional<Vec> Problem::analytic_path(double t, const Vec& q) const {
  if (!def_.analytic_path) return std::nullopt;
  return def_.analytic_path(t, q);
}

Vec Problem::analytic_limit(const Vec& z) const {
  if (!def_.analytic_limit) throw std::logic_error("problem '" + def_.label + "' has no limit oracle");
  check_point(z);
  return def_.analytic_limit(z);
}

double DynParams::damping(double t) const { return alpha / std::pow(t, q); }

double DynParams::tikhonov(double t) const {
  if (beta == 0.0) return 0.0;
  return beta / std::pow(t, p);
}

void validate_params(const DynParams& params) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  auto finite = [&](double v, const char* name) {
    if (!std::isfinite(v)) fail(std::string(name) + " must be finite");
  };
  finite(params.alpha, "alpha");
  finite(params.beta, "beta");
  finite(params.p, "p");
  finite(params.q, "q");
  finite(params.t0, "t0");
  finite(params.h, "h");
  finite(params.T, "T");
  if (!(params.alpha > 0.0)) fail("alpha must be > 0");
  if (!(params.beta >= 0.0)) fail("beta must be >= 0");
  if (!(params.p > 0.0 && params.p <= 2.0)) fail("p out of (0,2]");
  if (!(params.q > 0.0 && params.q <= 1.0)) fail("q out of (0,1]");
  if (!(params.t0 > 0.0)) fail("t0 must be > 0");
  if (!(params.h > 0.0)) fail("h must be > 0");
  if (!(params.T >= params.t0)) fail("T must be >= t0");
  // a zero-length horizon is allowed and yields a single-sample trajectory
  if (params.T > params.t0 && !(params.h < params.T - params.t0)) fail("h must be < T - t0");
  if (!(params.eps_v >= 0.0)) fail("eps_v must be >= 0");
  if (!(params.eps_tie >= 0.0)) fail("eps_tie must be >= 0");
}

Vec level_offset(const Problem& problem, const DynParams& params, const Vec& x0, const Vec& v0) {
  double a = 0.5 * v0.squaredNorm();
  if (params.beta != 0.0) a += params.beta / (2.0 * std::pow(params.t0, params.p)) * x0.squaredNorm();
  return Vec::Constant(problem.num_objectives(), a);
}

bool level_set_membership(const Problem& problem, const Vec& x, const Vec& reference_values) {
  if (reference_values.size() != problem.num_objectives())
    throw std::invalid_argument("reference values must have length m");
  for (int i = 0; i < problem.num_objectives(); ++i)
    if (problem.value(i, x) > reference_values[i]) return false;
  return true;
}

double gradient_fd_error(const Problem& problem, int i, const Vec& x, double step) {
  Vec g = problem.gradient(i, x);
  Vec fd(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double hj = step * std::max(1.0, std::abs(x[j]));
    Vec xp = x, xm = x;
    xp[j] += hj;
    xm[j] -= hj;
    fd[j] = (problem.value(i, xp) - problem.value(i, xm)) / (2.0 * hj);
  }
  return (g - fd).norm() / std::max(1.0, g.norm());
}

}  // namespace moodyn
