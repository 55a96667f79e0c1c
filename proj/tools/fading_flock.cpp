#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fading_flock/cli.hpp"

int main(int argc, char** argv) {
  namespace ff = fading_flock::cli;
  CLI::App app{"Simulate and analyse attraction/repulsion formation dynamics"};
  app.require_subcommand(1);

  ff::SimulateOptions sim;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "integrate a run configuration");
  simulate->add_option("config", sim.config, "run configuration (JSON)")->required();
  simulate->add_option("--out", sim.out_dir, "output directory")->capture_default_str();
  auto* seed_opt = simulate->add_option("--seed", seed, "override the configuration's seed");
  simulate->add_option("--ensemble", sim.ensemble, "number of independent seeded runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  ff::AnalyzeOptions an;
  std::string an_config, an_out;
  auto* analyze = app.add_subcommand("analyze", "partition and cluster diagnostics of a snapshot stream");
  analyze->add_option("snapshots", an.snapshots, "snapshot stream (JSON Lines)")->required();
  auto* config_opt = analyze->add_option("--config", an_config, "run configuration (default: config.json beside the snapshots)");
  auto* out_opt = analyze->add_option("--out", an_out, "report path (default: analysis.json beside the snapshots)");

  std::string val_config;
  auto* validate = app.add_subcommand("validate", "check interaction laws and print derived bounds");
  validate->add_option("config", val_config, "run configuration (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ff::kExitOk : ff::kExitError;
  }

  if (*simulate) {
    if (*seed_opt) sim.seed = seed;
    return ff::cmd_simulate(sim, std::cout, std::cerr);
  }
  if (*analyze) {
    if (*config_opt) an.config = an_config;
    if (*out_opt) an.out = an_out;
    return ff::cmd_analyze(an, std::cout, std::cerr);
  }
  return ff::cmd_validate(val_config, std::cout, std::cerr);
}
