// SPDX-License-Identifier: Apache-2.0
//
// hybeam command-line front end.
//
//   hybeam run          --config cfg.json [--seed S] [--workers W] [--out DIR]
//   hybeam sweep        --config cfg.json ...
//   hybeam ofdm-run     --config cfg.json ...
//   hybeam beam-pattern --config cfg.json ...
//   hybeam validate
//
// Exit codes: 0 success, 1 config error, 2 runtime/solver-setup error,
// 3 validation failure.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hybeam/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cooperative mmWave hybrid beamforming power-minimization simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string preset = "table1";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 1;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* copt = cmd->add_option("--config", config_path, "JSON scenario config");
    if (needs_config) copt->required();
    cmd->add_option("--seed", seed, "override the master seed")->each([&](const std::string&) {
      seed_set = true;
    });
    cmd->add_option("--workers", workers, "parallel realization workers")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", out_dir, "output directory override");
    cmd->add_option("--preset", preset, "named constant preset (table1)");
  };

  CLI::App* run = app.add_subcommand("run", "Monte Carlo run of one scenario point");
  add_common(run, true);
  CLI::App* sweep = app.add_subcommand("sweep", "run a sweep over one scenario parameter");
  add_common(sweep, true);
  CLI::App* ofdm = app.add_subcommand("ofdm-run", "Monte Carlo run of the OFDM pipeline");
  add_common(ofdm, true);
  CLI::App* beam = app.add_subcommand("beam-pattern", "export beam patterns per architecture");
  add_common(beam, true);
  app.add_subcommand("validate", "run the oracle/property validation suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("validate")) return hybeam::cmd_validate();
    hybeam::CliOverrides ov;
    ov.workers = workers;
    ov.preset = preset;
    if (seed_set) ov.seed = seed;
    if (!out_dir.empty()) ov.out_dir = out_dir;
    const hybeam::RunConfig cfg = hybeam::load_config(config_path, ov);
    if (app.got_subcommand("run")) return hybeam::cmd_run(cfg, workers);
    if (app.got_subcommand("sweep")) return hybeam::cmd_sweep(cfg, workers);
    if (app.got_subcommand("ofdm-run")) return hybeam::cmd_ofdm_run(cfg, workers);
    if (app.got_subcommand("beam-pattern")) return hybeam::cmd_beam_pattern(cfg);
  } catch (const hybeam::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
