#include "commands.hpp"

#include "modeclust/types.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_common(CLI::App* app, modeclust::cli::CommonOptions& opts) {
  app->add_option("--config", opts.config, "Configuration file (key = value)")->check(CLI::ExistingFile);
  app->add_option("--seed", opts.seed, "Master seed");
  app->add_option("--out", opts.out, "Output directory")->capture_default_str();
  app->add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
  app->add_flag("--emit-plots", opts.emit_plots, "Write SVG plots next to the CSV files");
  app->add_option("--set", opts.overrides, "Override a config key (key=value); repeatable");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-shift mode clustering: clustering, risk estimation and experiments"};
  app.require_subcommand(1);

  modeclust::cli::CommonOptions opts;
  std::string repro_name;

  auto* cluster = app.add_subcommand("cluster", "Cluster a dataset (or a mixture sample) with mean shift");
  auto* risk = app.add_subcommand("risk", "Clustering risk against a known mixture");
  auto* sweep = app.add_subcommand("sweep", "Loss over a grid of sample sizes, bandwidths and separations");
  auto* check = app.add_subcommand("check", "Numerical checks of the clustering bounds");
  auto* repro = app.add_subcommand("repro", "Run a named experiment: basins2d, highdim_sweep, separation_sweep");
  for (auto* sub : {cluster, risk, sweep, check, repro}) add_common(sub, opts);
  repro->add_option("name", repro_name, "Experiment name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*cluster) return modeclust::cli::run_cluster(opts);
    if (*risk) return modeclust::cli::run_risk(opts);
    if (*sweep) return modeclust::cli::run_sweep_command(opts);
    if (*check) return modeclust::cli::run_check(opts);
    if (*repro) return modeclust::cli::run_repro(opts, repro_name);
  } catch (const modeclust::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
