#pragma once

#include <string>
#include <vector>

#include "moodyn/core.hpp"

namespace moodyn {

/// Raised when the integrator produces non-finite values (step size too large).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum StepFlag : unsigned {
  kFlagNone = 0,
  kFlagDegenerateVelocity = 1u << 0,  // |v| <= eps_v, full regularized set used
  kFlagWarmStartReset = 1u << 1,      // previous weights did not fit the active set
};

/// "degenerate_v|qp_reset" style rendering; empty for kFlagNone.
std::string flags_to_string(unsigned flags);
unsigned flags_from_string(const std::string& text);

/// Sampled solution. states[k].v is the backward difference (x_k - x_{k-1})/h
/// (v0 at k = 0); accel[k], weights[k], flags[k] describe the step k -> k+1.
struct Trajectory {
  DynParams params;
  std::vector<State> states;
  std::vector<Vec> accel;
  std::vector<Vec> weights;
  std::vector<unsigned> flags;

  std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }
};

struct Rhs {
  Vec a;
  Vec theta;
  Vec g;  // sum theta_i grad f_i(x)
  unsigned flags = kFlagNone;
};

/// a = -alpha/t^q v - beta/t^p x - g with g the minimal-norm element of the
/// face of C(x) maximizing <c, v>; for |v| <= eps_v, g is taken from the
/// minimal-norm element of C(x) + beta/t^p x.
Rhs di_rhs(const Problem& problem, const DynParams& params, const State& state,
           const Vec* warm_theta = nullptr);

struct StepResult {
  State next;
  Rhs rhs;  // evaluated at (t_k, x_k, lagged velocity)
};

/// One semi-implicit step from x_k (prev) and x_{k-1}; the returned velocity is
/// the backward difference.
StepResult step(const Problem& problem, const DynParams& params, const State& prev, const Vec& prev_prev_x,
                const Vec* warm_theta = nullptr);

/// t0 + k h, evaluated without accumulation.
double time_at(const DynParams& params, std::size_t k);

/// Smallest k with t0 + k h >= T.
std::size_t step_count(const DynParams& params);

/// Integrates from (x0, v0) at t0 until t >= T.
Trajectory integrate(const Problem& problem, const DynParams& params, const Vec& x0, const Vec& v0);

}  // namespace moodyn
