#include "moodyn/commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "moodyn/io.hpp"
#include "moodyn/problems.hpp"

namespace moodyn {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr const char* kSchema = "moodyn/1";

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

json params_json(const DynParams& p) {
  return json{{"alpha", p.alpha}, {"beta", p.beta}, {"p", p.p},         {"q", p.q},         {"t0", p.t0},
              {"h", p.h},         {"T", p.T},       {"eps_v", p.eps_v}, {"eps_tie", p.eps_tie}};
}

json config_json(const ExperimentConfig& c) {
  json j;
  j["problem"] = c.problem;
  j["system"] = c.system == System::Mavd ? "mavd" : "mtrigs";
  j["params"] = params_json(c.params);
  j["initial"] = json{{"x0", vec_json(c.x0)}, {"v0", vec_json(c.v0)}};
  j["channels"] = c.channels;
  j["formats"] = c.formats;
  json sweep = json::object();
  if (!c.sweep_p.empty()) sweep["p"] = c.sweep_p;
  if (!c.sweep_q.empty()) sweep["q"] = c.sweep_q;
  j["sweep"] = sweep;
  return j;
}

json fit_json(const RateFit& f) {
  return json{{"slope", number(f.slope)},     {"intercept", number(f.intercept)}, {"residual", number(f.residual)},
              {"samples", f.samples},         {"t_lo", f.t_lo},                   {"t_hi", f.t_hi}};
}

json check_json(const MonitorCheck& c) {
  return json{{"name", c.name},
              {"enforced", c.enforced},
              {"skipped", c.skipped},
              {"passed", c.passed()},
              {"bound", number(c.bound)},
              {"worst_slack", c.evaluated ? number(c.worst_slack) : json(nullptr)},
              {"worst_t", c.evaluated ? number(c.worst_t) : json(nullptr)},
              {"evaluated", c.evaluated},
              {"violations", c.violations},
              {"note", c.note}};
}

json theory_json(const TheoreticalRates& r) {
  return json{{"regime", r.regime}, {"phi", number(r.phi)}, {"velocity", number(r.velocity)},
              {"distance", number(r.distance)}};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : ""; }

std::string csv_number(const std::optional<double>& v) { return v ? csv_number(*v) : ""; }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Every k-th index so that at most max_points remain, always keeping the last.
std::vector<std::size_t> thin(std::size_t n, std::size_t max_points = 2000) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  std::size_t stride = (n + max_points - 1) / max_points;
  for (std::size_t k = 0; k < n; k += stride) idx.push_back(k);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

PlotSeries plot_series(const std::string& label, const std::vector<double>& x, const std::vector<double>& y,
                       bool positive_only, std::size_t max_points = 2000) {
  PlotSeries s;
  s.label = label;
  for (std::size_t k : thin(x.size(), max_points)) {
    if (positive_only && !(y[k] > 0.0)) continue;
    s.x.push_back(x[k]);
    s.y.push_back(y[k]);
  }
  return s;
}

// Drops empty series (everything filtered out under a log axis); no file when none remain.
void write_svg(const std::string& path, std::vector<PlotSeries> series, const Axes& axes) {
  series.erase(std::remove_if(series.begin(), series.end(), [](const PlotSeries& s) { return s.x.empty(); }),
               series.end());
  if (series.empty()) return;
  write_file(path, emit_svg(series, axes));
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(count, sweep_threads());
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  for (std::thread& t : pool) t.join();
}

std::string cell_dir(const std::string& base, const Cell& cell) {
  return cell.name.empty() ? base : (std::filesystem::path(base) / cell.name).string();
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

struct CellOutcome {
  json run;
  int code = kExitOk;
  std::string log;
};

// Runs body and records failures in the run entry instead of propagating them.
CellOutcome guarded(const Cell& cell, const std::function<void(CellOutcome&)>& body) {
  CellOutcome out;
  out.run["cell"] = cell.name;
  out.run["params"] = params_json(cell.params);
  out.run["status"] = "ok";
  try {
    body(out);
  } catch (const NumericError& e) {
    out.code = kExitNumeric;
    out.run["status"] = "numeric_failure";
    out.run["error"] = e.what();
    out.log += "numeric failure: " + std::string(e.what()) + "\n";
  } catch (const OracleError& e) {
    out.code = kExitNumeric;
    out.run["status"] = "numeric_failure";
    out.run["error"] = e.what();
    out.log += "oracle failure: " + std::string(e.what()) + "\n";
  } catch (const ConfigError& e) {
    out.code = kExitConfig;
    out.run["status"] = "config_error";
    out.run["error"] = e.what();
    out.log += "config error: " + std::string(e.what()) + "\n";
  } catch (const std::exception& e) {
    out.code = kExitFailure;
    out.run["status"] = "failure";
    out.run["error"] = e.what();
    out.log += "error: " + std::string(e.what()) + "\n";
  }
  return out;
}

int worst_code(const std::vector<CellOutcome>& outcomes) {
  int code = kExitOk;
  for (const CellOutcome& o : outcomes) code = std::max(code, o.code);
  return code;
}

std::string out_base(const ExperimentConfig& config, const CommandOptions& options) {
  return options.out_dir ? *options.out_dir : config.output_dir;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void summarize_run(json& run, const Problem& problem, const ExperimentConfig& config, const RunResult& r) {
  const State& last = r.trajectory.states.back();
  run["path_params"] = json{{"beta", r.path_params.beta}, {"p", r.path_params.p}};
  run["steps"] = r.trajectory.steps();
  run["final_state"] = json{{"t", last.t}, {"x", vec_json(last.x)}, {"v", vec_json(last.v)}};
  if (!r.path.empty()) {
    const PathSample& ps = r.path.back();
    run["path_final"] = json{{"t", ps.t},
                             {"z", vec_json(ps.z)},
                             {"distance", number(ps.distance)},
                             {"phi_t", number(ps.phi_t)},
                             {"gap_bound", number(ps.gap_bound)},
                             {"certified", ps.certified}};
    run["r_bound"] = r.r_bound;
  }
  if (r.trajectory.states.size() >= 2) {
    LimitEstimate lim = limit_values(problem, r.trajectory, config.tail_fraction);
    run["limit_values"] = json{{"mean", vec_json(lim.mean)}, {"spread", vec_json(lim.spread)}};
  }
  const DynParams& P = r.cell.params;
  run["theory"] = theory_json(theoretical_rates(P.p, P.q, P.alpha, P.beta));
}

json rates_json(const Problem& problem, const ExperimentConfig& config, const RunResult& r, std::string* error) {
  RateChannels ch = rate_channels(problem, r);
  auto [lo, hi] = rate_window(config, r.cell.params);
  json out = json::object();
  auto fit = [&](const char* name, const Series& s) {
    if (s.t.empty()) return;
    try {
      out[name] = fit_json(fit_rate(s, lo, hi));
    } catch (const std::exception& e) {
      out[name] = nullptr;
      if (error) *error += std::string(name) + ": " + e.what() + "\n";
    }
  };
  fit("phi_bound", ch.phi_bound);
  fit("phi_exact", ch.phi_exact);
  fit("velocity", ch.speed);
  fit("distance", ch.distance);
  return out;
}

// Channel files of one simulated cell.
void write_channels(const Problem& problem, const ExperimentConfig& config, const RunResult& r, const std::string& dir,
                    json& run) {
  const int n = problem.dim(), m = problem.num_objectives();
  const bool csv = config.wants_format("csv"), svg = config.wants_format("svg");
  const Trajectory& traj = r.trajectory;
  const auto& S = traj.states;

  if (csv) write_file(join(dir, "trajectory.csv"), trajectory_to_csv(traj, n, m));
  if (svg && config.wants("trajectory")) {
    std::vector<PlotSeries> ps;
    std::vector<double> t;
    for (const State& s : S) t.push_back(s.t);
    for (int i = 0; i < n; ++i) {
      std::vector<double> y;
      for (const State& s : S) y.push_back(s.x[i]);
      ps.push_back(plot_series("x_" + std::to_string(i + 1), t, y, false));
    }
    if (S.size() >= 2) write_svg(join(dir, "trajectory.svg"), ps, Axes{"trajectory", "t", "x_i(t)", false, false});
  }

  if (config.wants("merit") && !r.path.empty()) {
    Table tab;
    tab.header = {"t", "phi_lo", "phi_hi", "phi_t", "phi_bound", "gap_bound"};
    std::vector<double> t, bound, hi;
    for (const PathSample& ps : r.path) {
      const State& st = S[ps.index];
      double eps = r.path_params.tikhonov(st.t);
      MeritInterval mi = problem.has_analytic_merit()
                             ? MeritInterval{problem.analytic_merit(st.x), problem.analytic_merit(st.x), true}
                             : merit_interval_from(ps.phi_t, ps.gap_bound, st.x.squaredNorm(), st.t, r.path_params,
                                                   r.r_bound);
      double b = ps.phi_t + 0.5 * eps * r.r_bound * r.r_bound + ps.gap_bound;
      tab.rows.push_back({st.t, mi.lo, mi.hi, ps.phi_t, b, ps.gap_bound});
      t.push_back(st.t);
      bound.push_back(b);
      hi.push_back(mi.hi);
    }
    if (csv) write_file(join(dir, "merit.csv"), table_to_csv(tab));
    if (svg && t.size() >= 2)
      write_svg(join(dir, "merit.svg"),
                {plot_series("phi upper bound", t, bound, true), plot_series("phi", t, hi, true)},
                Axes{"merit function", "t", "phi(x(t))", true, true});
  }

  if (config.wants("path-distance") && !r.path.empty()) {
    Table tab;
    tab.header = {"t", "distance"};
    for (int i = 1; i <= n; ++i) tab.header.push_back("z_" + std::to_string(i));
    for (const char* h : {"phi_t", "gap_bound", "certified"}) tab.header.push_back(h);
    std::vector<double> t, d;
    for (const PathSample& ps : r.path) {
      std::vector<double> row = {ps.t, ps.distance};
      for (int i = 0; i < n; ++i) row.push_back(ps.z[i]);
      row.push_back(ps.phi_t);
      row.push_back(ps.gap_bound);
      row.push_back(ps.certified ? 1.0 : 0.0);
      tab.rows.push_back(std::move(row));
      t.push_back(ps.t);
      d.push_back(ps.distance);
    }
    if (csv) write_file(join(dir, "path_distance.csv"), table_to_csv(tab));
    if (svg && t.size() >= 2)
      write_svg(join(dir, "path_distance.svg"), {plot_series("|x - z|", t, d, true, t.size())},
                Axes{"distance to the regularization path", "t", "|x(t) - z(t)|", true, true});
  }

  if (config.wants("energies") && !r.path.empty()) {
    EnergySpec spec = monitor_options(config, r).energy;
    Series E = energy_E(problem, traj, spec, &r.path);
    Series vi = velocity_integral(traj);
    std::vector<Series> W;
    for (int i = 0; i < m; ++i) W.push_back(energy_W(problem, traj, i));
    Table tab;
    tab.header = {"t"};
    for (int i = 1; i <= m; ++i) tab.header.push_back("W_" + std::to_string(i));
    tab.header.push_back("E");
    tab.header.push_back("velocity_integral");
    std::vector<double> t;
    std::vector<std::vector<double>> wy(static_cast<size_t>(m));
    for (std::size_t j = 0; j < r.path.size(); ++j) {
      std::size_t k = r.path[j].index;
      std::vector<double> row = {S[k].t};
      for (int i = 0; i < m; ++i) {
        row.push_back(W[static_cast<size_t>(i)].y[k]);
        wy[static_cast<size_t>(i)].push_back(W[static_cast<size_t>(i)].y[k]);
      }
      row.push_back(E.y[j]);
      row.push_back(vi.y[k]);
      tab.rows.push_back(std::move(row));
      t.push_back(S[k].t);
    }
    if (csv) write_file(join(dir, "energies.csv"), table_to_csv(tab));
    if (svg && t.size() >= 2) {
      std::vector<PlotSeries> ps;
      for (int i = 0; i < m; ++i)
        ps.push_back(plot_series("W_" + std::to_string(i + 1), t, wy[static_cast<size_t>(i)], false));
      write_svg(join(dir, "energies.svg"), ps, Axes{"energies", "t", "W_i(t)", false, false});
    }
  }

  if (config.wants("rates") && !r.path.empty()) {
    std::string err;
    json rates = rates_json(problem, config, r, &err);
    run["rates"] = rates;
    if (!err.empty()) run["rates_error"] = err;
    if (csv) {
      std::string out = "channel,slope,intercept,residual,samples,t_lo,t_hi\n";
      for (auto it = rates.begin(); it != rates.end(); ++it) {
        out += it.key();
        if (it.value().is_null()) {
          out += ",,,,,,\n";
          continue;
        }
        const json& f = it.value();
        out += "," + csv_number(f["slope"].get<double>()) + "," + csv_number(f["intercept"].get<double>()) + "," +
               csv_number(f["residual"].get<double>()) + "," + std::to_string(f["samples"].get<std::size_t>()) +
               "," + csv_number(f["t_lo"].get<double>()) + "," + csv_number(f["t_hi"].get<double>()) + "\n";
      }
      write_file(join(dir, "rates.csv"), out);
    }
    if (svg) {
      RateChannels ch = rate_channels(problem, r);
      write_svg(join(dir, "rates.svg"),
                {plot_series("phi upper bound", ch.phi_bound.t, ch.phi_bound.y, true),
                 plot_series("|v|", ch.speed.t, ch.speed.y, true),
                 plot_series("|x - z|", ch.distance.t, ch.distance.y, true)},
                Axes{"rate channels", "t", "value", true, true});
    }
  }

  if (config.wants("monitors")) {
    MonitorReport rep = monitor_inequalities(problem, traj, r.path, monitor_options(config, r));
    json checks = json::array();
    for (const MonitorCheck& c : rep.checks) checks.push_back(check_json(c));
    run["monitors"] = checks;
    if (csv) {
      std::string out = "name,enforced,skipped,passed,bound,worst_slack,worst_t,evaluated,violations\n";
      for (const MonitorCheck& c : rep.checks)
        out += c.name + "," + (c.enforced ? "1" : "0") + "," + (c.skipped ? "1" : "0") + "," +
               (c.passed() ? "1" : "0") + "," + csv_number(c.bound) + "," +
               (c.evaluated ? csv_number(c.worst_slack) : "") + "," + (c.evaluated ? csv_number(c.worst_t) : "") +
               "," + std::to_string(c.evaluated) + "," + std::to_string(c.violations) + "\n";
      write_file(join(dir, "monitors.csv"), out);
    }
    if (svg) {
      std::vector<PlotSeries> ps;
      for (const MonitorCheck& c : rep.checks)
        if (c.enforced && !c.skipped && c.t.size() >= 2) ps.push_back(plot_series(c.name, c.t, c.slack, false));
      if (!ps.empty()) write_svg(join(dir, "monitors.svg"), ps, Axes{"monitor slacks", "t", "slack", false, false});
    }
  }
}

bool needs_path(const ExperimentConfig& config) {
  for (const char* c : {"merit", "path-distance", "energies", "rates", "monitors"})
    if (config.wants(c)) return true;
  return false;
}

Trajectory load_or_integrate(const Problem& problem, const ExperimentConfig& config, const Cell& cell) {
  if (!config.trajectory_file) return integrate(problem, cell.params, config.x0, config.v0);
  Trajectory traj;
  try {
    traj = trajectory_from_csv(read_file(*config.trajectory_file));
  } catch (const std::runtime_error& e) {
    throw ConfigError(*config.trajectory_file + ": " + e.what());
  }
  traj.params = cell.params;
  const auto& S = traj.states;
  if (S.front().x.size() != problem.dim())
    throw ConfigError(*config.trajectory_file + ": dimension differs from problem " + config.problem);
  if (S.size() >= 2 && std::abs((S[1].t - S[0].t) - cell.params.h) > 1e-9 * (1.0 + cell.params.h))
    throw ConfigError(*config.trajectory_file + ": time step differs from h in the config");
  return traj;
}

RunResult execute(const Problem& problem, const ExperimentConfig& config, const Cell& cell, bool with_path) {
  if (with_path) return execute_run(problem, config, cell);
  RunResult r;
  r.cell = cell;
  r.path_params = path_params(config, cell.params);
  r.trajectory = load_or_integrate(problem, config, cell);
  return r;
}

json report(const ExperimentConfig& config, const std::string& command, json runs) {
  json j;
  j["schema_version"] = kSchema;
  j["command"] = command;
  j["config"] = config_json(config);
  j["runs"] = std::move(runs);
  return j;
}

}  // namespace

Problem build_problem(const ExperimentConfig& config, const DynParams& params) {
  if (config.problem == "example25") {
    Example25Config ex;
    ex.beta = params.beta;
    ex.p = params.p;
    ex.eta = config.eta;
    validate(ex);
    return example25_problem(ex);
  }
  return make_problem(config.problem);
}

std::size_t path_stride_for(const ExperimentConfig& config, std::size_t steps) {
  if (config.path_stride > 0) return config.path_stride;
  return std::max<std::size_t>(1, (steps + 999) / 1000);
}

std::pair<double, double> rate_window(const ExperimentConfig& config, const DynParams& params) {
  double lo = config.rate_lo.value_or(std::max(params.t0, params.T / 10.0));
  double hi = config.rate_hi.value_or(params.T);
  return {lo, hi};
}

RunResult execute_run(const Problem& problem, const ExperimentConfig& config, const Cell& cell) {
  RunResult r;
  r.cell = cell;
  r.path_params = path_params(config, cell.params);
  r.trajectory = load_or_integrate(problem, config, cell);
  r.path = regularization_path(problem, r.trajectory, r.path_params,
                               path_stride_for(config, r.trajectory.steps()), config.solver_tol);
  r.r_bound = problem.r_bound() ? *problem.r_bound() : estimate_r_bound(r.path);
  return r;
}

RateChannels rate_channels(const Problem& problem, const RunResult& run) {
  RateChannels ch;
  for (const PathSample& ps : run.path) {
    const State& st = run.trajectory.states.at(ps.index);
    const double eps = run.path_params.tikhonov(st.t);
    ch.phi_bound.t.push_back(st.t);
    ch.phi_bound.y.push_back(ps.phi_t + 0.5 * eps * run.r_bound * run.r_bound + ps.gap_bound);
    if (problem.has_analytic_merit()) {
      ch.phi_exact.t.push_back(st.t);
      ch.phi_exact.y.push_back(problem.analytic_merit(st.x));
    }
    ch.speed.t.push_back(st.t);
    ch.speed.y.push_back(st.v.norm());
    ch.distance.t.push_back(st.t);
    ch.distance.y.push_back(ps.distance);
  }
  return ch;
}

MonitorOptions monitor_options(const ExperimentConfig& config, const RunResult& run) {
  MonitorOptions o;
  o.slack_bound = config.slack_bound;
  o.energy_step_constant = config.energy_step_constant;
  o.r_bound = run.r_bound > 0.0 ? std::optional<double>(run.r_bound) : std::nullopt;
  o.energy.r = config.energy_r.value_or(run.cell.params.q);
  o.energy.lambda = config.energy_lambda;
  return o;
}

unsigned sweep_threads() {
  if (const char* env = std::getenv("MOODYN_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(std::min(v, 1024L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_simulate(const ExperimentConfig& config, const CommandOptions& options) {
  const auto start = Clock::now();
  const std::string base = out_base(config, options);
  const std::vector<Cell> cells = expand_cells(config);
  std::vector<CellOutcome> outcomes(cells.size());
  const bool with_path = needs_path(config);

  parallel_for(cells.size(), [&](std::size_t i) {
    const Cell& cell = cells[i];
    const auto cell_start = Clock::now();
    outcomes[i] = guarded(cell, [&](CellOutcome& out) {
      Problem problem = build_problem(config, cell.params);
      RunResult r = execute(problem, config, cell, with_path);
      summarize_run(out.run, problem, config, r);
      const std::string dir = cell_dir(base, cell);
      std::filesystem::create_directories(dir);
      write_channels(problem, config, r, dir, out.run);
      std::ostringstream os;
      os << (cell.name.empty() ? "run" : cell.name) << ": " << r.trajectory.steps() << " steps, x(T) = ["
         << r.trajectory.states.back().x.transpose() << "]";
      if (!r.path.empty()) os << ", |x - z| = " << r.path.back().distance;
      out.log += os.str() + "\n";
    });
    if (options.timing) outcomes[i].run["wall_clock_seconds"] = seconds_since(cell_start);
    if (config.wants_format("json") && !cell.name.empty())
      write_file(join(cell_dir(base, cell), "summary.json"), dump(report(config, "simulate", json::array({outcomes[i].run}))));
  });

  json runs = json::array();
  for (const CellOutcome& o : outcomes) {
    runs.push_back(o.run);
    if (options.log) *options.log << o.log;
  }
  json j = report(config, "simulate", runs);
  if (options.timing) j["wall_clock_seconds"] = seconds_since(start);
  if (config.wants_format("json")) write_file(join(base, "summary.json"), dump(j));
  return worst_code(outcomes);
}

int cmd_verify(const ExperimentConfig& config, const CommandOptions& options) {
  const auto start = Clock::now();
  const std::string base = out_base(config, options);
  const std::vector<Cell> cells = expand_cells(config);
  std::vector<CellOutcome> outcomes(cells.size());

  parallel_for(cells.size(), [&](std::size_t i) {
    const Cell& cell = cells[i];
    outcomes[i] = guarded(cell, [&](CellOutcome& out) {
      Problem problem = build_problem(config, cell.params);
      RunResult r = execute_run(problem, config, cell);
      summarize_run(out.run, problem, config, r);
      MonitorReport rep = monitor_inequalities(problem, r.trajectory, r.path, monitor_options(config, r));
      json checks = json::array();
      std::ostringstream os;
      const std::string name = cell.name.empty() ? "run" : cell.name;
      for (const MonitorCheck& c : rep.checks) {
        checks.push_back(check_json(c));
        const char* status = c.skipped ? "SKIP" : !c.enforced ? "INFO" : c.passed() ? "PASS" : "FAIL";
        os << std::left << std::setw(8) << name << "  " << std::setw(22) << c.name << " " << std::setw(5) << status;
        if (c.evaluated)
          os << " worst " << std::setw(13) << c.worst_slack << " at t = " << std::setw(8) << c.worst_t << " bound "
             << c.bound;
        if (!c.note.empty()) os << "  (" << c.note << ")";
        os << "\n";
      }
      out.run["monitors"] = checks;
      out.run["passed"] = rep.passed();
      if (!rep.passed()) out.code = kExitVerify;
      out.log += os.str();
    });
  });

  json runs = json::array();
  for (const CellOutcome& o : outcomes) {
    runs.push_back(o.run);
    if (options.log) *options.log << o.log;
  }
  json j = report(config, "verify", runs);
  const int code = worst_code(outcomes);
  j["passed"] = code == kExitOk;
  if (options.timing) j["wall_clock_seconds"] = seconds_since(start);
  if (config.wants_format("json")) write_file(join(base, "verify.json"), dump(j));
  if (options.log) *options.log << (code == kExitOk ? "verify: all enforced checks pass\n" : "verify: FAILED\n");
  return code;
}

int cmd_rates(const ExperimentConfig& config, const CommandOptions& options) {
  const auto start = Clock::now();
  const std::string base = out_base(config, options);
  const std::vector<Cell> cells = expand_cells(config);
  std::vector<CellOutcome> outcomes(cells.size());

  parallel_for(cells.size(), [&](std::size_t i) {
    const Cell& cell = cells[i];
    outcomes[i] = guarded(cell, [&](CellOutcome& out) {
      Problem problem = build_problem(config, cell.params);
      RunResult r = execute_run(problem, config, cell);
      const DynParams& P = cell.params;
      std::string err;
      out.run["theory"] = theory_json(theoretical_rates(P.p, P.q, P.alpha, P.beta));
      out.run["rates"] = rates_json(problem, config, r, &err);
      if (!err.empty()) out.run["rates_error"] = err;
    });
  });

  std::string csv =
      "cell,p,q,alpha,beta,regime,phi_slope,phi_theory,velocity_slope,velocity_theory,distance_slope,"
      "distance_theory,phi_exact_slope,t_lo,t_hi\n";
  json runs = json::array();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const json& run = outcomes[i].run;
    const DynParams& P = cells[i].params;
    TheoreticalRates th = theoretical_rates(P.p, P.q, P.alpha, P.beta);
    auto slope = [&](const char* ch) -> std::string {
      if (!run.contains("rates") || !run["rates"].contains(ch) || run["rates"][ch].is_null()) return "";
      return csv_number(run["rates"][ch]["slope"].get<double>());
    };
    auto [lo, hi] = rate_window(config, P);
    csv += csv_field(cells[i].name) + "," + format_double(P.p) + "," + format_double(P.q) + "," +
           format_double(P.alpha) + "," + format_double(P.beta) + "," + csv_field(th.regime) + "," +
           slope("phi_bound") + "," + csv_number(th.phi) + "," + slope("velocity") + "," +
           csv_number(th.velocity) + "," + slope("distance") + "," + csv_number(th.distance) + "," +
           slope("phi_exact") + "," + format_double(lo) + "," + format_double(hi) + "\n";
    runs.push_back(run);
    if (options.log) {
      *options.log << (cells[i].name.empty() ? "run" : cells[i].name) << ": regime " << th.regime;
      if (run.contains("rates") && run["rates"].contains("phi_bound") && !run["rates"]["phi_bound"].is_null())
        *options.log << ", phi slope " << run["rates"]["phi_bound"]["slope"].get<double>();
      if (th.phi) *options.log << " (theory " << *th.phi << ")";
      *options.log << "\n" << outcomes[i].log;
    }
  }
  if (config.wants_format("csv")) write_file(join(base, "rates.csv"), csv);
  json j = report(config, "rates", runs);
  if (options.timing) j["wall_clock_seconds"] = seconds_since(start);
  if (config.wants_format("json")) write_file(join(base, "rates.json"), dump(j));
  return worst_code(outcomes);
}

int cmd_path(const ExperimentConfig& config, const CommandOptions& options) {
  const auto start = Clock::now();
  const std::string base = out_base(config, options);
  const std::vector<Cell> cells = expand_cells(config);
  std::vector<CellOutcome> outcomes(cells.size());

  parallel_for(cells.size(), [&](std::size_t i) {
    const Cell& cell = cells[i];
    outcomes[i] = guarded(cell, [&](CellOutcome& out) {
      Problem problem = build_problem(config, cell.params);
      const std::string dir = cell_dir(base, cell);
      const int n = problem.dim(), m = problem.num_objectives();
      Table tab;
      tab.header = {"t"};
      for (int k = 1; k <= m; ++k) tab.header.push_back("q_" + std::to_string(k));
      for (int k = 1; k <= n; ++k) tab.header.push_back("z_" + std::to_string(k));

      if (config.problem == "example25") {
        // the anchor q(t) is prescribed; compare against the closed form
        Example25Config ex{cell.params.beta, cell.params.p, config.eta};
        for (int k = 1; k <= n; ++k) tab.header.push_back("z_closed_" + std::to_string(k));
        for (const char* h : {"error", "cert", "second_residual", "first_smooth_part"}) tab.header.push_back(h);
        const double t0 = ex.t0(), t1 = config.t_end_factor * t0;
        double max_err = 0.0, z2_lo = INFINITY, z2_hi = -INFINITY;
        bool certified = true;
        std::vector<double> ts, z1, z2;
        Vec warm;
        for (int s = 0; s < config.samples; ++s) {
          const double t = t0 + (t1 - t0) * s / (config.samples - 1);
          ClosedPathPoint cp = example25_closed_path(ex, t);
          const double eps = ex.beta / std::pow(t, ex.p);
          ScalarizationResult sr = solve_scalarized(problem, cp.q, eps, warm.size() ? warm : cp.q, config.solver_tol);
          warm = sr.z_star;
          Example25Stationarity st = example25_stationarity(ex, t);
          const double err = (sr.z_star - cp.z).cwiseAbs().maxCoeff();
          max_err = std::max(max_err, err);
          z2_lo = std::min(z2_lo, sr.z_star[1]);
          z2_hi = std::max(z2_hi, sr.z_star[1]);
          certified = certified && sr.certified;
          std::vector<double> row = {t};
          for (int k = 0; k < m; ++k) row.push_back(cp.q[k]);
          for (int k = 0; k < n; ++k) row.push_back(sr.z_star[k]);
          for (int k = 0; k < n; ++k) row.push_back(cp.z[k]);
          row.insert(row.end(), {err, sr.cert, st.second_residual, st.first_smooth_part});
          tab.rows.push_back(std::move(row));
          ts.push_back(t);
          z1.push_back(sr.z_star[0]);
          z2.push_back(sr.z_star[1]);
        }
        out.run["closed_form"] = json{{"t_range", {t0, t1}},      {"samples", config.samples},
                                      {"max_error", max_err},       {"z2_min", z2_lo},
                                      {"z2_max", z2_hi},            {"all_certified", certified}};
        if (config.wants_format("svg"))
          write_svg(join(dir, "path.svg"), {plot_series("z_1", ts, z1, false), plot_series("z_2", ts, z2, false)},
                    Axes{"regularization path", "t", "z(t)", false, false});
        std::ostringstream os;
        os << (cell.name.empty() ? "run" : cell.name) << ": max |z - z_closed| = " << max_err << ", z_2 in ["
           << z2_lo << ", " << z2_hi << "]";
        out.log += os.str() + "\n";
      } else {
        RunResult r = execute_run(problem, config, cell);
        summarize_run(out.run, problem, config, r);
        for (const char* h : {"distance", "phi_t", "gap_bound", "certified", "within_r"}) tab.header.push_back(h);
        std::vector<double> ts;
        std::vector<std::vector<double>> zs(static_cast<size_t>(n));
        for (const PathSample& ps : r.path) {
          std::vector<double> row = {ps.t};
          for (int k = 0; k < m; ++k) row.push_back(ps.q[k]);
          for (int k = 0; k < n; ++k) {
            row.push_back(ps.z[k]);
            zs[static_cast<size_t>(k)].push_back(ps.z[k]);
          }
          row.insert(row.end(),
                     {ps.distance, ps.phi_t, ps.gap_bound, ps.certified ? 1.0 : 0.0, ps.within_r ? 1.0 : 0.0});
          tab.rows.push_back(std::move(row));
          ts.push_back(ps.t);
        }
        if (config.wants_format("svg") && ts.size() >= 2) {
          std::vector<PlotSeries> ps;
          for (int k = 0; k < n; ++k)
            ps.push_back(plot_series("z_" + std::to_string(k + 1), ts, zs[static_cast<size_t>(k)], false, ts.size()));
          write_svg(join(dir, "path.svg"), ps, Axes{"regularization path", "t", "z(t)", false, false});
        }
        std::ostringstream os;
        os << (cell.name.empty() ? "run" : cell.name) << ": " << r.path.size() << " path samples, z(T) = ["
           << r.path.back().z.transpose() << "]";
        out.log += os.str() + "\n";
      }
      if (config.wants_format("csv")) write_file(join(dir, "path.csv"), table_to_csv(tab));
    });
  });

  json runs = json::array();
  for (const CellOutcome& o : outcomes) {
    runs.push_back(o.run);
    if (options.log) *options.log << o.log;
  }
  json j = report(config, "path", runs);
  if (options.timing) j["wall_clock_seconds"] = seconds_since(start);
  if (config.wants_format("json")) write_file(join(base, "path.json"), dump(j));
  return worst_code(outcomes);
}

}  // namespace moodyn
