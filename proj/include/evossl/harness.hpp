#pragma once

// Experiment orchestration: config schema, the benchmark cross-product
// runner with resume, the staged tuning protocol, and report emission
// (tables as CSV, trajectory/box plots as SVG + CSV).

#include <optional>
#include <string>
#include <vector>

#include "evossl/baselines.hpp"
#include "evossl/evolution.hpp"

namespace evossl {

struct DatasetSpec {
  std::string csv_path;   // one of csv_path / openml_id is set
  std::string label_column = "label";
  int openml_id = -1;

  bool is_openml() const { return openml_id >= 0; }
  std::string key() const;
};

struct ExperimentConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<double> lfs;
  std::vector<std::int64_t> seeds;
  std::vector<std::string> methods;
  SearchConfig search = frozen_ccssl_config();
  SearchConfig search_eassl = frozen_eassl_config();
  BaselineConfig baselines;
  std::string output_dir = "out";
  int workers = 1;
  std::string cache_dir;
  std::vector<int> tune_dev_openml_ids = {28, 44, 46};
  SplitShares split_shares;
};

// Thrown on schema violations; `path` names the offending field.
struct ConfigError : std::runtime_error {
  std::string path;
  ConfigError(std::string p, const std::string& msg)
      : std::runtime_error(p + ": " + msg), path(std::move(p)) {}
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json search_config_to_json(const SearchConfig& cfg);
std::string lf_label(double lf);

struct RunReport {
  int computed = 0;
  int skipped = 0;
  int failed = 0;
  int exit_code = 0;
};

// Cross product methods x datasets x lfs x seeds with paired splits.
// Appends one RunSummary JSON line per cell to <output_dir>/runs.jsonl
// (canonically reordered on completion) and one trajectory JSONL per search
// run. Completed cells (matched by content hash) are skipped on rerun.
RunReport run_experiment(const ExperimentConfig& config);

int cmd_run(const std::string& config_path);

// Staged tuning: stage 1 population sizing, stage 2 operator probabilities,
// stage 3 fitness weights. Restricted to the dev datasets unless forced.
int cmd_tune(int stage, const std::string& config_path,
             const std::string& method = "ccssl", bool force = false);

int cmd_report(const std::string& runs_dir);

int cmd_fetch(int openml_id, const std::string& cache_dir);

// Tuning grids (exposed for tests).
std::vector<SearchConfig> stage1_grid(const SearchConfig& base);
std::vector<SearchConfig> stage2_grid(const SearchConfig& base);
std::vector<SearchConfig> stage3_grid(const SearchConfig& base);

}  // namespace evossl
