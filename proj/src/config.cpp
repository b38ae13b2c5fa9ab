#include "moodyn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "moodyn/problems.hpp"

namespace moodyn {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string at_line(int line, const std::string& msg) { return "line " + std::to_string(line) + ": " + msg; }

struct Entry {
  std::string value;
  int line = 0;
};

double parse_number(const Entry& e, const std::string& key) {
  std::string s = trim(e.value);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(at_line(e.line, "'" + key + "' expects a finite number, got '" + s + "'"));
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

std::vector<double> parse_numbers(const Entry& e, const std::string& key) {
  std::vector<double> out;
  for (const std::string& item : split_list(e.value)) {
    if (item.empty()) throw ConfigError(at_line(e.line, "empty item in list '" + key + "'"));
    out.push_back(parse_number(Entry{item, e.line}, key));
  }
  return out;
}

std::size_t parse_count(const Entry& e, const std::string& key) {
  double v = parse_number(e, key);
  if (v < 0.0 || v != std::floor(v) || v > 1e12)
    throw ConfigError(at_line(e.line, "'" + key + "' expects a nonnegative integer"));
  return static_cast<std::size_t>(v);
}

bool parse_bool_like(const Entry& e, const std::string& key, const std::vector<std::string>& allowed,
                     std::string& out) {
  std::string v = trim(e.value);
  if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ConfigError(at_line(e.line, "'" + key + "' must be one of " + list + ", got '" + v + "'"));
  }
  out = v;
  return true;
}

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment",
       {"problem", "system", "output_dir", "trajectory", "path_stride", "path_beta", "path_p", "rate_window",
        "energy_r", "energy_lambda", "tail_fraction", "slack_bound", "energy_step_constant", "solver_tol", "eta",
        "samples", "t_end_factor"}},
      {"params", {"alpha", "beta", "p", "q", "t0", "h", "T", "eps_v", "eps_tie"}},
      {"initial", {"x0", "v0"}},
      {"outputs", {"channels", "formats"}},
      {"sweep", {"p", "q"}},
  };
  return keys;
}

}  // namespace

bool ExperimentConfig::wants(const std::string& channel) const {
  return std::find(channels.begin(), channels.end(), channel) != channels.end();
}

bool ExperimentConfig::wants_format(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  std::map<std::string, Section> sections;
  std::map<std::string, int> section_line;
  std::string current;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    auto hash = s.find_first_of("#;");
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(at_line(line, "unterminated section header"));
      current = trim(s.substr(1, s.size() - 2));
      if (!known_keys().count(current)) throw ConfigError(at_line(line, "unknown section [" + current + "]"));
      if (section_line.count(current)) throw ConfigError(at_line(line, "duplicate section [" + current + "]"));
      section_line[current] = line;
      sections[current];
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(at_line(line, "expected 'key = value'"));
    if (current.empty()) throw ConfigError(at_line(line, "key outside of any section"));
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(at_line(line, "missing key before '='"));
    if (!known_keys().at(current).count(key))
      throw ConfigError(at_line(line, "unknown key '" + key + "' in [" + current + "]"));
    Section& sec = sections[current];
    if (sec.count(key)) throw ConfigError(at_line(line, "duplicate key '" + key + "'"));
    if (value.empty()) throw ConfigError(at_line(line, "missing value for '" + key + "'"));
    sec[key] = Entry{value, line};
  }

  auto find = [&](const std::string& sec, const std::string& key) -> const Entry* {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  };
  auto number = [&](const std::string& sec, const std::string& key, double& target) {
    if (const Entry* e = find(sec, key)) target = parse_number(*e, key);
  };
  auto positive = [&](const std::string& sec, const std::string& key, double value) {
    if (!(value > 0.0)) {
      const Entry* e = find(sec, key);
      std::string msg = "'" + key + "' must be positive";
      throw ConfigError(e ? at_line(e->line, msg) : msg);
    }
  };

  ExperimentConfig cfg;
  const Entry* problem = find("experiment", "problem");
  if (!problem) throw ConfigError("missing required key 'problem' in [experiment]");
  cfg.problem = problem->value;
  int n = 0;
  try {
    n = make_problem(cfg.problem).dim();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(at_line(problem->line, e.what()));
  }

  if (const Entry* e = find("experiment", "system")) {
    std::string v;
    parse_bool_like(*e, "system", {"mtrigs", "mavd"}, v);
    cfg.system = v == "mavd" ? System::Mavd : System::Mtrigs;
  }
  if (const Entry* e = find("experiment", "output_dir")) cfg.output_dir = e->value;
  if (const Entry* e = find("experiment", "trajectory")) {
    std::filesystem::path p(e->value);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    cfg.trajectory_file = p.string();
  }
  if (const Entry* e = find("experiment", "path_stride")) cfg.path_stride = parse_count(*e, "path_stride");
  if (const Entry* e = find("experiment", "path_beta")) {
    cfg.path_beta = parse_number(*e, "path_beta");
    positive("experiment", "path_beta", *cfg.path_beta);
  }
  if (const Entry* e = find("experiment", "path_p")) {
    cfg.path_p = parse_number(*e, "path_p");
    positive("experiment", "path_p", *cfg.path_p);
  }
  if (const Entry* e = find("experiment", "rate_window")) {
    std::vector<double> w = parse_numbers(*e, "rate_window");
    if (w.size() != 2 || !(w[0] > 0.0) || !(w[0] < w[1]))
      throw ConfigError(at_line(e->line, "'rate_window' expects 'lo, hi' with 0 < lo < hi"));
    cfg.rate_lo = w[0];
    cfg.rate_hi = w[1];
  }
  if (const Entry* e = find("experiment", "energy_r")) cfg.energy_r = parse_number(*e, "energy_r");
  number("experiment", "energy_lambda", cfg.energy_lambda);
  positive("experiment", "energy_lambda", cfg.energy_lambda);
  number("experiment", "tail_fraction", cfg.tail_fraction);
  if (!(cfg.tail_fraction > 0.0 && cfg.tail_fraction < 1.0)) {
    const Entry* e = find("experiment", "tail_fraction");
    throw ConfigError(at_line(e->line, "'tail_fraction' must lie in (0, 1)"));
  }
  number("experiment", "slack_bound", cfg.slack_bound);
  positive("experiment", "slack_bound", cfg.slack_bound);
  number("experiment", "energy_step_constant", cfg.energy_step_constant);
  positive("experiment", "energy_step_constant", cfg.energy_step_constant);
  number("experiment", "solver_tol", cfg.solver_tol);
  positive("experiment", "solver_tol", cfg.solver_tol);
  number("experiment", "eta", cfg.eta);
  if (const Entry* e = find("experiment", "samples")) {
    std::size_t s = parse_count(*e, "samples");
    if (s < 2 || s > 100000) throw ConfigError(at_line(e->line, "'samples' must lie in [2, 100000]"));
    cfg.samples = static_cast<int>(s);
  }
  number("experiment", "t_end_factor", cfg.t_end_factor);
  if (!(cfg.t_end_factor > 1.0)) {
    const Entry* e = find("experiment", "t_end_factor");
    throw ConfigError(at_line(e->line, "'t_end_factor' must exceed 1"));
  }

  // params; the unregularized system fixes beta = 0 and q = 1
  DynParams& P = cfg.params;
  if (cfg.system == System::Mavd) {
    P.beta = 0.0;
    P.q = 1.0;
  }
  number("params", "alpha", P.alpha);
  number("params", "beta", P.beta);
  number("params", "p", P.p);
  number("params", "q", P.q);
  number("params", "t0", P.t0);
  number("params", "h", P.h);
  number("params", "T", P.T);
  number("params", "eps_v", P.eps_v);
  number("params", "eps_tie", P.eps_tie);
  if (cfg.system == System::Mavd) {
    if (P.beta != 0.0) throw ConfigError(at_line(find("params", "beta")->line, "system mavd requires beta = 0"));
    if (P.q != 1.0) throw ConfigError(at_line(find("params", "q")->line, "system mavd requires q = 1"));
  } else if (!(P.beta > 0.0)) {
    const Entry* e = find("params", "beta");
    throw ConfigError(at_line(e ? e->line : 0, "system mtrigs requires beta > 0 (use system = mavd)"));
  }

  // initial data
  const Entry* x0 = find("initial", "x0");
  if (!x0) throw ConfigError("missing required key 'x0' in [initial]");
  auto vec = [&](const Entry& e, const std::string& key) {
    std::vector<double> v = parse_numbers(e, key);
    if (static_cast<int>(v.size()) != n)
      throw ConfigError(at_line(e.line, "'" + key + "' needs " + std::to_string(n) + " entries for problem " +
                                            cfg.problem + ", got " + std::to_string(v.size())));
    return Vec(Eigen::Map<Vec>(v.data(), n));
  };
  cfg.x0 = vec(*x0, "x0");
  cfg.v0 = Vec::Zero(n);
  if (const Entry* e = find("initial", "v0")) cfg.v0 = vec(*e, "v0");

  // outputs
  const Entry* ch = find("outputs", "channels");
  if (!ch) throw ConfigError("missing required key 'channels' in [outputs]");
  std::set<std::string> wanted;
  for (const std::string& c : split_list(ch->value)) {
    if (std::find(all_channels().begin(), all_channels().end(), c) == all_channels().end())
      throw ConfigError(at_line(ch->line, "unknown channel '" + c + "'"));
    wanted.insert(c);
  }
  if (wanted.empty()) throw ConfigError(at_line(ch->line, "'channels' must not be empty"));
  for (const std::string& c : all_channels())
    if (wanted.count(c)) cfg.channels.push_back(c);
  if (const Entry* e = find("outputs", "formats")) {
    std::set<std::string> f;
    for (const std::string& x : split_list(e->value)) {
      if (x != "csv" && x != "svg" && x != "json") throw ConfigError(at_line(e->line, "unknown format '" + x + "'"));
      f.insert(x);
    }
    if (f.empty()) throw ConfigError(at_line(e->line, "'formats' must not be empty"));
    cfg.formats.clear();
    for (const char* x : {"csv", "svg", "json"})
      if (f.count(x)) cfg.formats.push_back(x);
  }

  // sweep
  for (const char* key : {"p", "q"}) {
    const Entry* e = find("sweep", key);
    if (!e) continue;
    std::vector<double> v = parse_numbers(*e, key);
    if (v.empty()) throw ConfigError(at_line(e->line, std::string("sweep list '") + key + "' is empty"));
    std::set<double> seen;
    for (double x : v)
      if (!seen.insert(x).second)
        throw ConfigError(at_line(e->line, "duplicate value " + format_double(x) + " in sweep '" + key + "'"));
    if (cfg.system == System::Mavd && std::string(key) == "q")
      throw ConfigError(at_line(e->line, "system mavd fixes q = 1; remove the q sweep"));
    (std::string(key) == "p" ? cfg.sweep_p : cfg.sweep_q) = v;
  }
  if (cfg.trajectory_file && (!cfg.sweep_p.empty() || !cfg.sweep_q.empty()))
    throw ConfigError(at_line(find("experiment", "trajectory")->line, "a trajectory file cannot be swept"));
  if (sections.count("sweep") && cfg.sweep_p.empty() && cfg.sweep_q.empty())
    throw ConfigError(at_line(section_line["sweep"], "[sweep] lists neither p nor q"));

  for (const Cell& cell : expand_cells(cfg)) {
    try {
      validate_params(cell.params);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(cell.name.empty() ? std::string(e.what()) : "sweep cell " + cell.name + ": " + e.what());
    }
  }
  if (cfg.energy_r) {
    double q_max = 0.0;
    for (const Cell& cell : expand_cells(cfg)) q_max = std::max(q_max, cell.params.q);
    if (*cfg.energy_r < q_max || *cfg.energy_r > 1.0)
      throw ConfigError(at_line(find("experiment", "energy_r")->line, "'energy_r' must lie in [q, 1]"));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string base = std::filesystem::path(path).parent_path().string();
  try {
    return parse_config(ss.str(), base);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<Cell> expand_cells(const ExperimentConfig& config) {
  std::vector<double> ps = config.sweep_p.empty() ? std::vector<double>{config.params.p} : config.sweep_p;
  std::vector<double> qs = config.sweep_q.empty() ? std::vector<double>{config.params.q} : config.sweep_q;
  std::vector<Cell> cells;
  for (double p : ps)
    for (double q : qs) {
      Cell c;
      c.params = config.params;
      c.params.p = p;
      c.params.q = q;
      std::string name;
      if (!config.sweep_p.empty()) name = "p_" + format_double(p);
      if (!config.sweep_q.empty()) name += (name.empty() ? "q_" : "_q_") + format_double(q);
      c.name = name;
      cells.push_back(std::move(c));
    }
  return cells;
}

DynParams path_params(const ExperimentConfig& config, const DynParams& run) {
  DynParams out = run;
  if (!(run.beta > 0.0)) {
    out.beta = config.path_beta.value_or(0.5);
    out.p = config.path_p.value_or(1.75);
  }
  return out;
}

}  // namespace moodyn
