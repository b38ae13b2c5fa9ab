#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "moodyn/core.hpp"
#include "moodyn/dynamics.hpp"
#include "moodyn/scalarization.hpp"

namespace moodyn {

struct Series {
  std::vector<double> t;
  std::vector<double> y;
};

/// W_i(t_k) = f_i(x_k) + beta/(2 t_k^p)|x_k|^2 + 1/2 |v_k|^2 for every state.
Series energy_W(const Problem& problem, const Trajectory& trajectory, int i);

/// Largest single-step increase W_i(t_{k+1}) - W_i(t_k) over all i and k.
double max_energy_increase(const Problem& problem, const Trajectory& trajectory);

/// Parameter functions of the inertial energy
///   t^{2r} min_i (f_{t,i}(x) - f_{t,i}(z)) + 1/2 |gamma (x - z) + t^r v|^2 + xi/2 |x - z|^2.
struct EnergySpec {
  enum class Gamma { Lambda, TwoR };  // gamma = lambda | 2 r t^{r-1}
  // xi = lambda (r t^{r-1} + alpha t^{r-q} - 2 lambda) | 2 alpha r t^{2r-q-1} + 2r(1-4r) t^{2(r-1)}
  enum class Xi { Lambda, G };
  double r = 0.875;
  double lambda = 0.5;
  Gamma gamma = Gamma::Lambda;
  Xi xi = Xi::Lambda;
  std::optional<Vec> anchor;  // empty: the regularization path z(t)
};

void validate(const EnergySpec& spec, const DynParams& params);

double energy_gamma(const EnergySpec& spec, const DynParams& params, double t);
double energy_gamma_dot(const EnergySpec& spec, const DynParams& params, double t);
double energy_xi(const EnergySpec& spec, const DynParams& params, double t);
double energy_xi_dot(const EnergySpec& spec, const DynParams& params, double t);

/// Energy at one (t, x, v) against anchor z.
double energy_value(const Problem& problem, const DynParams& params, const EnergySpec& spec, double t,
                    const Vec& x, const Vec& v, const Vec& z);

/// Upper bound on the time derivative of the energy at (t, x, v) for a fixed anchor z.
double energy_derivative_bound(const Problem& problem, const DynParams& params, const EnergySpec& spec,
                               double t, const Vec& x, const Vec& v, const Vec& z);

/// Energy series. A fixed anchor is evaluated at every state; a path anchor at
/// the path samples (which must come from the same trajectory).
Series energy_E(const Problem& problem, const Trajectory& trajectory, const EnergySpec& spec,
                const std::vector<PathSample>* path = nullptr);

struct MonitorCheck {
  std::string name;
  bool enforced = true;
  bool skipped = false;
  std::string note;
  double bound = 0.05;  // pass iff worst_slack <= bound
  double worst_slack = -std::numeric_limits<double>::infinity();
  double worst_t = 0.0;
  std::size_t evaluated = 0;
  std::size_t violations = 0;
  std::vector<double> t;
  std::vector<double> slack;  // > 0 means the inequality is violated by that much

  bool passed() const { return skipped || evaluated == 0 || worst_slack <= bound; }
  void add(double time, double value);
};

struct MonitorOptions {
  double slack_bound = 0.05;
  double energy_step_constant = 50.0;  // W_i may rise by at most C h^2 per step
  std::optional<double> r_bound;
  EnergySpec energy;  // anchor defaults to the last path point, else x(T)
  bool keep_series = true;
};

struct MonitorReport {
  std::vector<MonitorCheck> checks;

  bool passed() const;
  const MonitorCheck* find(const std::string& name) const;
};

/// Discrete renditions of the trajectory inequalities:
///   velocity_vi     <grad f_i + beta/t^p x + a + alpha/t^q u, u> <= 0 (u forward velocity)
///   merit_bound     phi(x) <= phi_t(x) + beta R^2/(2 t^p)
///   path_distance   |x - z|^2 <= 2 t^p phi_t(x)/beta
///   path_distance_literal  the same without the factor 2 (reported, not enforced)
///   energy_rate     finite difference of the inertial energy vs its derivative bound, over t^{2r}
///   energy_W        W_i increase per step <= C h^2
MonitorReport monitor_inequalities(const Problem& problem, const Trajectory& trajectory,
                                   const std::vector<PathSample>& path, const MonitorOptions& options = {});

struct RateFit {
  double t_lo = 0.0;
  double t_hi = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the log-log fit
  std::size_t samples = 0;
};

/// Least-squares line through (log t, log y) for t in [t_lo, t_hi].
RateFit fit_rate(const Series& series, double t_lo, double t_hi);

struct LimitEstimate {
  Vec mean;
  Vec spread;  // max - min over the tail
};

/// Trailing-mean estimate of lim f_i(x(t)).
LimitEstimate limit_values(const Problem& problem, const Trajectory& trajectory, double tail_fraction = 0.1);

/// Partial sums of t_k |v_k|^2 h.
Series velocity_integral(const Trajectory& trajectory);

/// Exponents from the regime classification of (p, q, alpha, beta).
struct TheoreticalRates {
  std::string regime;
  std::optional<double> phi;
  std::optional<double> velocity;
  std::optional<double> distance;
};

TheoreticalRates theoretical_rates(double p, double q, double alpha, double beta);

}  // namespace moodyn
