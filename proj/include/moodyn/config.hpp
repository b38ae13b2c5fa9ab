#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "moodyn/core.hpp"

namespace moodyn {

/// Bad configuration text or values. Messages carry "line N: " when the
/// problem can be attributed to a line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class System { Mtrigs, Mavd };

/// Output channels in their canonical order.
inline const std::vector<std::string>& all_channels() {
  static const std::vector<std::string> names = {"trajectory", "merit",  "path-distance",
                                                 "energies",   "rates",  "monitors"};
  return names;
}

struct ExperimentConfig {
  std::string problem;
  System system = System::Mtrigs;
  DynParams params;
  Vec x0;
  Vec v0;  // zeros unless given
  std::vector<std::string> channels;  // canonical order, no duplicates
  std::vector<std::string> formats = {"csv", "svg", "json"};
  std::vector<double> sweep_p;
  std::vector<double> sweep_q;
  std::string output_dir = "out";

  // [experiment] knobs
  std::optional<std::string> trajectory_file;  // verify/path read this instead of integrating
  std::size_t path_stride = 0;                 // 0: about 1000 samples
  std::optional<double> path_beta;             // regularization used for the path when beta = 0
  std::optional<double> path_p;
  std::optional<double> rate_lo;
  std::optional<double> rate_hi;
  std::optional<double> energy_r;  // defaults to q
  double energy_lambda = 0.5;
  double tail_fraction = 0.1;
  double slack_bound = 0.05;
  double energy_step_constant = 50.0;
  double solver_tol = 1e-10;
  double eta = 1.0 / 50.0;  // example25 only
  int samples = 20;         // example25 path command
  double t_end_factor = 10.0;

  bool wants(const std::string& channel) const;
  bool wants_format(const std::string& format) const;
};

/// One concrete run of a (possibly swept) configuration.
struct Cell {
  std::string name;  // "" without sweep, else "p_0.25", "q_0.3" or "p_0.25_q_0.3"
  DynParams params;
};

/// Parses and validates the line-oriented format:
///   [section]            one of experiment, params, initial, outputs, sweep
///   key = value          lists are comma separated
///   # or ; comments      also after a value
/// base_dir resolves a relative `trajectory` path.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = "");

/// Reads and parses a file; I/O failures are ConfigErrors too.
ExperimentConfig load_config(const std::string& path);

/// Sweep expansion, p outer and q inner.
std::vector<Cell> expand_cells(const ExperimentConfig& config);

/// Parameters used for the regularization path and merit of a run: the run's
/// own when beta > 0, otherwise path_beta / path_p.
DynParams path_params(const ExperimentConfig& config, const DynParams& run);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double value);

}  // namespace moodyn
