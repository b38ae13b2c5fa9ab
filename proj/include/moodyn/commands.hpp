#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "moodyn/config.hpp"
#include "moodyn/diagnostics.hpp"
#include "moodyn/dynamics.hpp"
#include "moodyn/scalarization.hpp"

namespace moodyn {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // I/O and other unexpected errors
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitVerify = 4,
};

struct CommandOptions {
  std::optional<std::string> out_dir;  // overrides output_dir
  bool timing = false;                 // add wall-clock seconds to the JSON reports
  std::ostream* log = nullptr;         // human-readable progress; nullptr = silent
};

/// The problem a config names; example25 picks up beta, p and eta from it.
Problem build_problem(const ExperimentConfig& config, const DynParams& params);

/// Sampling stride of the regularization path (path_stride, else ~1000 samples).
std::size_t path_stride_for(const ExperimentConfig& config, std::size_t steps);

/// Default rate window [max(t0, T/10), T] unless configured.
std::pair<double, double> rate_window(const ExperimentConfig& config, const DynParams& params);

/// Trajectory plus regularization path of one cell.
struct RunResult {
  Cell cell;
  Trajectory trajectory;
  DynParams path_params;
  std::vector<PathSample> path;
  double r_bound = 0.0;  // problem's own R, else estimated from the path
};

/// Integrates (or loads `trajectory_file`) and traces the path.
RunResult execute_run(const Problem& problem, const ExperimentConfig& config, const Cell& cell);

/// Rate-fit channels at the path samples: phi_bound = phi_t + beta R^2/(2 t^p)
/// + gap (an upper bound on the merit), the exact merit when available, the
/// speed |v| and the path distance.
struct RateChannels {
  Series phi_bound;
  Series phi_exact;  // empty without an analytic merit
  Series speed;
  Series distance;
};
RateChannels rate_channels(const Problem& problem, const RunResult& run);

MonitorOptions monitor_options(const ExperimentConfig& config, const RunResult& run);

/// Sweep parallelism: MOODYN_THREADS if set (>= 1), else the hardware count.
unsigned sweep_threads();

int cmd_simulate(const ExperimentConfig& config, const CommandOptions& options = {});
int cmd_verify(const ExperimentConfig& config, const CommandOptions& options = {});
int cmd_rates(const ExperimentConfig& config, const CommandOptions& options = {});
int cmd_path(const ExperimentConfig& config, const CommandOptions& options = {});

}  // namespace moodyn
