// moodyn: simulate inertial multiobjective dynamics and check their guarantees.
#include <CLI11.hpp>

#include <iostream>

#include "moodyn/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Inertial multiobjective gradient dynamics with Tikhonov regularization"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool timing = false;
  bool quiet = false;

  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "experiment configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_flag("--timing", timing, "record wall-clock seconds in the JSON reports");
    sub->add_flag("-q,--quiet", quiet, "no progress output");
    return sub;
  };
  CLI::App* simulate = add("simulate", "integrate and write the requested channels");
  CLI::App* verify = add("verify", "check the trajectory inequalities; exit 4 on violation");
  CLI::App* rates = add("rates", "fit convergence exponents per sweep cell");
  CLI::App* path = add("path", "trace the regularization path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : moodyn::kExitConfig;
  }

  moodyn::CommandOptions options;
  if (!out_dir.empty()) options.out_dir = out_dir;
  options.timing = timing;
  options.log = quiet ? nullptr : &std::cout;

  try {
    moodyn::ExperimentConfig config = moodyn::load_config(config_path);
    if (simulate->parsed()) return moodyn::cmd_simulate(config, options);
    if (verify->parsed()) return moodyn::cmd_verify(config, options);
    if (rates->parsed()) return moodyn::cmd_rates(config, options);
    if (path->parsed()) return moodyn::cmd_path(config, options);
  } catch (const moodyn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return moodyn::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return moodyn::kExitFailure;
  }
  return moodyn::kExitFailure;
}
