#include "moodyn/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "moodyn/simplex_qp.hpp"

namespace moodyn {

std::string flags_to_string(unsigned flags) {
  std::string out;
  auto add = [&out](const char* name) {
    if (!out.empty()) out += '|';
    out += name;
  };
  if (flags & kFlagDegenerateVelocity) add("degenerate_v");
  if (flags & kFlagWarmStartReset) add("qp_reset");
  return out;
}

unsigned flags_from_string(const std::string& text) {
  unsigned flags = kFlagNone;
  std::istringstream is(text);
  std::string token;
  while (std::getline(is, token, '|')) {
    if (token.empty()) continue;
    if (token == "degenerate_v")
      flags |= kFlagDegenerateVelocity;
    else if (token == "qp_reset")
      flags |= kFlagWarmStartReset;
    else
      throw std::invalid_argument("unknown step flag '" + token + "'");
  }
  return flags;
}

Rhs di_rhs(const Problem& problem, const DynParams& params, const State& state, const Vec* warm_theta) {
  const int m = problem.num_objectives();
  const Mat G = problem.jacobian(state.x);
  const double eps = params.tikhonov(state.t);
  const Vec shift = eps * state.x;
  const double vn = state.v.norm();

  Rhs out;
  out.theta = Vec::Zero(m);
  if (vn > params.eps_v) {
    Vec slope = G.transpose() * state.v;
    double gmax = G.colwise().norm().maxCoeff();
    double cut = slope.maxCoeff() - params.eps_tie * (1.0 + vn * gmax);
    if (!std::isfinite(cut) || !slope.allFinite())
      throw NumericError("non-finite directional slopes at t = " + std::to_string(state.t));
    std::vector<int> active;
    for (int i = 0; i < m; ++i)
      if (slope[i] >= cut) active.push_back(i);

    if (active.size() == 1) {
      out.theta[active[0]] = 1.0;
    } else {
      Mat sub(G.rows(), static_cast<Eigen::Index>(active.size()));
      for (size_t k = 0; k < active.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = G.col(active[k]);
      Vec warm;
      bool use_warm = false;
      if (warm_theta && warm_theta->size() == m) {
        warm.resize(static_cast<Eigen::Index>(active.size()));
        for (size_t k = 0; k < active.size(); ++k) warm[static_cast<Eigen::Index>(k)] = (*warm_theta)[active[k]];
        use_warm = warm.sum() > 0.0;
        if (!use_warm) out.flags |= kFlagWarmStartReset;
      }
      SimplexWeights sw = min_norm_combination(sub, Vec::Zero(G.rows()), use_warm ? &warm : nullptr);
      for (size_t k = 0; k < active.size(); ++k) out.theta[active[k]] = sw.theta[static_cast<Eigen::Index>(k)];
    }
  } else {
    out.flags |= kFlagDegenerateVelocity;
    const Vec* warm = (warm_theta && warm_theta->size() == m) ? warm_theta : nullptr;
    out.theta = min_norm_combination(G, shift, warm).theta;
  }

  out.g = G * out.theta;
  out.a = -params.damping(state.t) * state.v - shift - out.g;
  if (!out.a.allFinite()) throw NumericError("non-finite acceleration at t = " + std::to_string(state.t));
  return out;
}

StepResult step(const Problem& problem, const DynParams& params, const State& prev, const Vec& prev_prev_x,
                const Vec* warm_theta) {
  StepResult res;
  res.rhs = di_rhs(problem, params, prev, warm_theta);
  const double h = params.h;
  const double c = params.damping(prev.t) * h;
  const double eps = params.tikhonov(prev.t);
  const Vec& x = prev.x;
  res.next.x = (2.0 * x - prev_prev_x + c * x - h * h * (eps * x + res.rhs.g)) / (1.0 + c);
  if (!res.next.x.allFinite()) {
    std::ostringstream os;
    os << "non-finite state after step at t = " << prev.t << " (h = " << h << " too large?)";
    throw NumericError(os.str());
  }
  res.next.v = (res.next.x - x) / h;
  res.next.t = prev.t + h;
  return res;
}

double time_at(const DynParams& params, std::size_t k) {
  return params.t0 + static_cast<double>(k) * params.h;
}

std::size_t step_count(const DynParams& params) {
  if (!(params.T > params.t0)) return 0;
  auto k = static_cast<std::size_t>(std::ceil((params.T - params.t0) / params.h));
  while (k > 0 && time_at(params, k - 1) >= params.T) --k;
  while (time_at(params, k) < params.T) ++k;
  return k;
}

Trajectory integrate(const Problem& problem, const DynParams& params, const Vec& x0, const Vec& v0) {
  validate_params(params);
  if (x0.size() != problem.dim() || v0.size() != problem.dim())
    throw std::invalid_argument("initial data must have length n = " + std::to_string(problem.dim()));
  if (!x0.allFinite() || !v0.allFinite()) throw std::invalid_argument("initial data must be finite");

  Trajectory traj;
  traj.params = params;
  const std::size_t n_steps = step_count(params);
  traj.states.reserve(n_steps + 1);
  traj.accel.reserve(n_steps);
  traj.weights.reserve(n_steps);
  traj.flags.reserve(n_steps);
  traj.states.push_back(State{params.t0, x0, v0});
  if (n_steps == 0) return traj;

  auto record = [&traj](const Rhs& rhs) {
    traj.accel.push_back(rhs.a);
    traj.weights.push_back(rhs.theta);
    traj.flags.push_back(rhs.flags);
  };

  // half-start: x1 = x0 + h v0 + h^2/2 a0
  const double h = params.h;
  Rhs r0 = di_rhs(problem, params, traj.states[0]);
  State s1;
  s1.t = time_at(params, 1);
  s1.x = x0 + h * v0 + (0.5 * h * h) * r0.a;
  if (!s1.x.allFinite()) throw NumericError("non-finite state after the start step");
  s1.v = (s1.x - x0) / h;
  record(r0);
  traj.states.push_back(std::move(s1));

  for (std::size_t k = 1; k < n_steps; ++k) {
    const State& cur = traj.states[k];
    StepResult sr = step(problem, params, cur, traj.states[k - 1].x, &traj.weights.back());
    sr.next.t = time_at(params, k + 1);
    record(sr.rhs);
    traj.states.push_back(std::move(sr.next));
  }
  return traj;
}

}  // namespace moodyn
