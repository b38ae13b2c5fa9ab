#include "moodyn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace moodyn {

Series energy_W(const Problem& problem, const Trajectory& trajectory, int i) {
  if (i < 0 || i >= problem.num_objectives()) throw std::out_of_range("energy_W: objective index out of range");
  const DynParams& params = trajectory.params;
  Series s;
  s.t.reserve(trajectory.states.size());
  s.y.reserve(trajectory.states.size());
  for (const State& st : trajectory.states) {
    s.t.push_back(st.t);
    s.y.push_back(problem.value(i, st.x) + 0.5 * params.tikhonov(st.t) * st.x.squaredNorm() +
                  0.5 * st.v.squaredNorm());
  }
  return s;
}

double max_energy_increase(const Problem& problem, const Trajectory& trajectory) {
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < problem.num_objectives(); ++i) {
    Series w = energy_W(problem, trajectory, i);
    for (size_t k = 1; k < w.y.size(); ++k) worst = std::max(worst, w.y[k] - w.y[k - 1]);
  }
  return worst;
}

void validate(const EnergySpec& spec, const DynParams& params) {
  if (!(spec.r >= params.q && spec.r <= 1.0)) {
    std::ostringstream os;
    os << "energy r = " << spec.r << " must lie in [q, 1] = [" << params.q << ", 1]";
    throw std::invalid_argument(os.str());
  }
  if (!(spec.lambda > 0.0)) throw std::invalid_argument("energy lambda must be > 0");
}

double energy_gamma(const EnergySpec& spec, const DynParams&, double t) {
  if (spec.gamma == EnergySpec::Gamma::Lambda) return spec.lambda;
  return 2.0 * spec.r * std::pow(t, spec.r - 1.0);
}

double energy_gamma_dot(const EnergySpec& spec, const DynParams&, double t) {
  if (spec.gamma == EnergySpec::Gamma::Lambda) return 0.0;
  return 2.0 * spec.r * (spec.r - 1.0) * std::pow(t, spec.r - 2.0);
}

double energy_xi(const EnergySpec& spec, const DynParams& params, double t) {
  const double r = spec.r, a = params.alpha, q = params.q;
  if (spec.xi == EnergySpec::Xi::Lambda)
    return spec.lambda * (r * std::pow(t, r - 1.0) + a * std::pow(t, r - q) - 2.0 * spec.lambda);
  return 2.0 * a * r * std::pow(t, 2.0 * r - q - 1.0) + 2.0 * r * (1.0 - 4.0 * r) * std::pow(t, 2.0 * (r - 1.0));
}

double energy_xi_dot(const EnergySpec& spec, const DynParams& params, double t) {
  const double r = spec.r, a = params.alpha, q = params.q;
  if (spec.xi == EnergySpec::Xi::Lambda)
    return spec.lambda * (r * (r - 1.0) * std::pow(t, r - 2.0) + a * (r - q) * std::pow(t, r - q - 1.0));
  return 2.0 * a * r * (2.0 * r - q - 1.0) * std::pow(t, 2.0 * r - q - 2.0) +
         4.0 * r * (r - 1.0) * (1.0 - 4.0 * r) * std::pow(t, 2.0 * r - 3.0);
}

namespace {

// min_i (f_{t,i}(x) - f_{t,i}(z))
double min_regularized_gap(const Problem& problem, const DynParams& params, double t, const Vec& x,
                           const Vec& z) {
  Vec d = problem.values(x) - problem.values(z);
  return d.minCoeff() + 0.5 * params.tikhonov(t) * (x.squaredNorm() - z.squaredNorm());
}

}  // namespace

double energy_value(const Problem& problem, const DynParams& params, const EnergySpec& spec, double t,
                    const Vec& x, const Vec& v, const Vec& z) {
  const double tr = std::pow(t, spec.r);
  const Vec e = x - z;
  return tr * tr * min_regularized_gap(problem, params, t, x, z) +
         0.5 * (energy_gamma(spec, params, t) * e + tr * v).squaredNorm() +
         0.5 * energy_xi(spec, params, t) * e.squaredNorm();
}

double energy_derivative_bound(const Problem& problem, const DynParams& params, const EnergySpec& spec,
                               double t, const Vec& x, const Vec& v, const Vec& z) {
  const double r = spec.r, a = params.alpha;
  const double tr = std::pow(t, r);
  const double g = energy_gamma(spec, params, t);
  const double gd = energy_gamma_dot(spec, params, t);
  const double xi = energy_xi(spec, params, t);
  const double xid = energy_xi_dot(spec, params, t);
  const double eps = params.tikhonov(t);  // beta / t^p
  const double friction = g + r * std::pow(t, r - 1.0) - a * std::pow(t, r - params.q);
  const Vec e = x - z;

  double bound = (2.0 * r * std::pow(t, 2.0 * r - 1.0) - tr * g) * min_regularized_gap(problem, params, t, x, z);
  bound += params.p * eps * tr * tr / (2.0 * t) * z.squaredNorm();
  bound += (g * friction + tr * gd + xi) * e.dot(v);
  bound += (g * gd + 0.5 * xid - g * tr * 0.5 * eps) * e.squaredNorm();
  bound += tr * friction * v.squaredNorm();
  return bound;
}

Series energy_E(const Problem& problem, const Trajectory& trajectory, const EnergySpec& spec,
                const std::vector<PathSample>* path) {
  const DynParams& params = trajectory.params;
  validate(spec, params);
  Series s;
  if (spec.anchor) {
    for (const State& st : trajectory.states) {
      s.t.push_back(st.t);
      s.y.push_back(energy_value(problem, params, spec, st.t, st.x, st.v, *spec.anchor));
    }
    return s;
  }
  if (!path) throw std::invalid_argument("energy_E: a path anchor needs path samples");
  for (const PathSample& ps : *path) {
    if (ps.index >= trajectory.states.size()) throw std::out_of_range("energy_E: path sample outside trajectory");
    const State& st = trajectory.states[ps.index];
    s.t.push_back(st.t);
    s.y.push_back(energy_value(problem, params, spec, st.t, st.x, st.v, ps.z));
  }
  return s;
}

void MonitorCheck::add(double time, double value) {
  ++evaluated;
  if (value > bound) ++violations;
  if (value > worst_slack || evaluated == 1) {
    worst_slack = value;
    worst_t = time;
  }
}

bool MonitorReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const MonitorCheck& c) { return !c.enforced || c.passed(); });
}

const MonitorCheck* MonitorReport::find(const std::string& name) const {
  for (const MonitorCheck& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

MonitorReport monitor_inequalities(const Problem& problem, const Trajectory& trajectory,
                                   const std::vector<PathSample>& path, const MonitorOptions& options) {
  const DynParams& params = trajectory.params;
  const auto& S = trajectory.states;
  const double h = params.h;
  MonitorReport report;

  auto make = [&](const std::string& name, double bound) {
    MonitorCheck c;
    c.name = name;
    c.bound = bound;
    return c;
  };
  auto record = [&](MonitorCheck& c, double time, double value) {
    c.add(time, value);
    if (options.keep_series) {
      c.t.push_back(time);
      c.slack.push_back(value);
    }
  };

  // velocity variational inequality with forward velocity and central acceleration
  {
    MonitorCheck c = make("velocity_vi", options.slack_bound);
    for (size_t k = 0; k + 1 < S.size(); ++k) {
      const double t = S[k].t;
      const Vec& u = S[k + 1].v;
      Vec acc = (S[k + 1].v - S[k].v) / h;
      Vec common = params.tikhonov(t) * S[k].x + acc + params.damping(t) * u;
      Mat G = problem.jacobian(S[k].x);
      double worst = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < G.cols(); ++i) worst = std::max(worst, (G.col(i) + common).dot(u));
      record(c, t, worst);
    }
    report.checks.push_back(std::move(c));
  }

  // merit and path-distance bounds need the regularized path
  {
    MonitorCheck merit = make("merit_bound", options.slack_bound);
    MonitorCheck dist = make("path_distance", options.slack_bound);
    MonitorCheck literal = make("path_distance_literal", options.slack_bound);
    literal.enforced = false;
    literal.note = "bound without the factor 2; strong convexity only yields the doubled bound";
    if (!(params.beta > 0.0)) {
      for (MonitorCheck* c : {&merit, &dist, &literal}) {
        c->skipped = true;
        c->note = "requires beta > 0";
      }
    } else if (path.empty()) {
      for (MonitorCheck* c : {&merit, &dist, &literal}) {
        c->skipped = true;
        c->note = "no path samples";
      }
    } else {
      std::optional<double> R = options.r_bound ? options.r_bound : problem.r_bound();
      if (!R) {
        R = estimate_r_bound(path);
        merit.note = "R estimated from the path samples";
      }
      if (!problem.has_analytic_merit()) merit.note = "no analytic merit; lower interval end used";
      for (const PathSample& ps : path) {
        const State& st = S.at(ps.index);
        const double eps = params.tikhonov(st.t);
        const double tp_over_beta = 1.0 / eps;
        double phi;
        if (problem.has_analytic_merit()) {
          phi = problem.analytic_merit(st.x);
        } else {
          phi = merit_interval_from(ps.phi_t, ps.gap_bound, st.x.squaredNorm(), st.t, params, *R).lo;
        }
        record(merit, st.t, phi - (ps.phi_t + 0.5 * eps * (*R) * (*R) + ps.gap_bound));
        const double d2 = ps.distance * ps.distance;
        record(dist, st.t, d2 - 2.0 * tp_over_beta * (ps.phi_t + ps.gap_bound));
        record(literal, st.t, d2 - tp_over_beta * (ps.phi_t + ps.gap_bound));
      }
    }
    report.checks.push_back(std::move(merit));
    report.checks.push_back(std::move(dist));
    report.checks.push_back(std::move(literal));
  }

  // energy rate: half-node energies against the derivative bound at the node in between
  {
    MonitorCheck c = make("energy_rate", options.slack_bound);
    c.note = "slack divided by t^(2r)";
    EnergySpec spec = options.energy;
    bool ok = true;
    try {
      validate(spec, params);
    } catch (const std::invalid_argument& e) {
      c.skipped = true;
      c.note = e.what();
      ok = false;
    }
    if (ok && S.size() >= 3) {
      Vec z = spec.anchor ? *spec.anchor : (!path.empty() ? path.back().z : S.back().x);
      auto half = [&](size_t k) {
        // energy at t_k + h/2 from the midpoint position and the step velocity
        Vec xm = 0.5 * (S[k].x + S[k + 1].x);
        return energy_value(problem, params, spec, S[k].t + 0.5 * h, xm, S[k + 1].v, z);
      };
      double prev = half(0);
      for (size_t k = 1; k + 1 < S.size(); ++k) {
        double next = half(k);
        Vec vc = 0.5 * (S[k].v + S[k + 1].v);
        double rhs = energy_derivative_bound(problem, params, spec, S[k].t, S[k].x, vc, z);
        // the energy carries a t^{2r} weight; compare on the unweighted scale
        record(c, S[k].t, ((next - prev) / h - rhs) / std::pow(S[k].t, 2.0 * spec.r));
        prev = next;
      }
    }
    report.checks.push_back(std::move(c));
  }

  // W_i decay
  {
    MonitorCheck c = make("energy_W", options.energy_step_constant * h * h);
    std::vector<Series> w;
    for (int i = 0; i < problem.num_objectives(); ++i) w.push_back(energy_W(problem, trajectory, i));
    for (size_t k = 1; k < S.size(); ++k) {
      double worst = -std::numeric_limits<double>::infinity();
      for (const Series& s : w) worst = std::max(worst, s.y[k] - s.y[k - 1]);
      record(c, S[k].t, worst);
    }
    report.checks.push_back(std::move(c));
  }
  return report;
}

RateFit fit_rate(const Series& series, double t_lo, double t_hi) {
  if (series.t.size() != series.y.size()) throw std::invalid_argument("fit_rate: t and y differ in length");
  if (!(t_lo < t_hi)) throw std::invalid_argument("fit_rate: empty window");
  std::vector<double> lx, ly;
  for (size_t k = 0; k < series.t.size(); ++k) {
    double t = series.t[k];
    if (t < t_lo || t > t_hi) continue;
    if (!(series.y[k] > 0.0)) {
      std::ostringstream os;
      os << "fit_rate: nonpositive value " << series.y[k] << " at t = " << t;
      throw std::domain_error(os.str());
    }
    lx.push_back(std::log(t));
    ly.push_back(std::log(series.y[k]));
  }
  if (lx.size() < 10) throw std::invalid_argument("fit_rate: window holds fewer than 10 samples");
  const double nn = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= nn;
  my /= nn;
  double sxx = 0.0, sxy = 0.0;
  for (size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: degenerate window");
  RateFit fit;
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (size_t k = 0; k < lx.size(); ++k) {
    double r = ly[k] - (fit.intercept + fit.slope * lx[k]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / nn);
  fit.samples = lx.size();
  return fit;
}

LimitEstimate limit_values(const Problem& problem, const Trajectory& trajectory, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
    throw std::invalid_argument("limit_values: tail fraction must lie in (0,1)");
  const auto& S = trajectory.states;
  if (S.empty()) throw std::invalid_argument("limit_values: empty trajectory");
  auto count = static_cast<size_t>(std::ceil(tail_fraction * static_cast<double>(S.size())));
  count = std::clamp<size_t>(count, 1, S.size());
  const int m = problem.num_objectives();
  LimitEstimate est;
  est.mean = Vec::Zero(m);
  Vec lo = Vec::Constant(m, std::numeric_limits<double>::infinity());
  Vec hi = -lo;
  for (size_t k = S.size() - count; k < S.size(); ++k) {
    Vec f = problem.values(S[k].x);
    est.mean += f;
    lo = lo.cwiseMin(f);
    hi = hi.cwiseMax(f);
  }
  est.mean /= static_cast<double>(count);
  est.spread = hi - lo;
  return est;
}

Series velocity_integral(const Trajectory& trajectory) {
  const double h = trajectory.params.h;
  Series s;
  double acc = 0.0;
  for (const State& st : trajectory.states) {
    acc += st.t * st.v.squaredNorm() * h;
    s.t.push_back(st.t);
    s.y.push_back(acc);
  }
  return s;
}

TheoreticalRates theoretical_rates(double p, double q, double alpha, double beta) {
  TheoreticalRates r;
  if (p == q + 1.0) {
    r.regime = "critical - no theoretical rate";
    return r;
  }
  if (q < 1.0 && p < q + 1.0) {
    double m = std::max(q, p - q);
    r.regime = "q<1, p<q+1";
    r.phi = -p;
    r.velocity = (m - (p + 1.0)) / 2.0;
    r.distance = (m - 1.0) / 2.0;
    return r;
  }
  if (q == 1.0) {
    if (alpha >= 3.0) {
      r.regime = "q=1, alpha>=3";
      r.phi = -p;
      r.velocity = -p / 2.0;
      r.distance = 0.0;
    } else {
      r.regime = "q=1, alpha<3 - no theoretical rate";
    }
    return r;
  }
  if (q + 1.0 < p && p < 2.0) {
    r.regime = "q+1<p<2";
    r.phi = -2.0 * q;
    r.velocity = -q;
    r.distance = 0.0;
    return r;
  }
  if (p == 2.0 && beta >= q * (1.0 - q)) {
    r.regime = "p=2, beta>=q(1-q)";
    r.phi = -2.0 * q;
    r.velocity = -q;
    r.distance = 0.0;
    return r;
  }
  if (2.0 * q < p) {
    r.regime = "2q<p";
    r.phi = -2.0 * q;
    r.velocity = -q;
    r.distance = 0.0;
    return r;
  }
  r.regime = "no theoretical rate";
  return r;
}

}  // namespace moodyn
