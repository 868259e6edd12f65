// evossl CLI: benchmark runner, staged tuning, report emission, and the
// OpenML fetch helper.
//
//   evossl run -c config.json
//   evossl tune --stage N -c config.json [--method ccssl|eassl] [--force]
//   evossl report -d out/
//   evossl fetch --openml-id N [--cache DIR]

#include <string>

#include "CLI11.hpp"

#include "evossl/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"two-view pseudo-labeling SSL with evolutionary search"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "execute the configured benchmark");
  run->add_option("-c,--config", config_path, "experiment config JSON")
      ->required();

  int stage = 1;
  std::string tune_config, tune_method = "ccssl";
  bool force = false;
  auto* tune = app.add_subcommand("tune", "staged parameter tuning");
  tune->add_option("--stage", stage, "tuning stage (1, 2, or 3)")->required();
  tune->add_option("-c,--config", tune_config, "experiment config JSON")
      ->required();
  tune->add_option("--method", tune_method, "ccssl or eassl");
  tune->add_flag("--force", force,
                 "allow datasets outside the development set");

  std::string runs_dir;
  auto* report = app.add_subcommand("report", "emit tables and plots");
  report->add_option("-d,--dir", runs_dir, "output directory of a run")
      ->required();

  int openml_id = -1;
  std::string cache_dir;
  auto* fetch = app.add_subcommand("fetch", "download an OpenML dataset");
  fetch->add_option("--openml-id", openml_id, "OpenML dataset id")->required();
  fetch->add_option("--cache", cache_dir, "cache directory (default: $EVOSSL_CACHE or ./cache)");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return evossl::cmd_run(config_path);
  if (tune->parsed()) return evossl::cmd_tune(stage, tune_config, tune_method, force);
  if (report->parsed()) return evossl::cmd_report(runs_dir);
  if (fetch->parsed()) return evossl::cmd_fetch(openml_id, cache_dir);
  return 2;
}
