#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "evossl/harness.hpp"
#include "evossl/synthetic.hpp"

using namespace evossl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "evossl_harness" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_blob_csv(const fs::path& dir, int n = 120,
                           std::uint64_t seed = 1) {
  BlobSpec spec;
  spec.n = n;
  spec.dims = 4;
  spec.informative = 2;
  spec.separation = 3.5;
  spec.seed = seed;
  spec.name = "blob";
  const Dataset ds = make_gaussian_blobs(spec);
  const fs::path p = dir / "blob.csv";
  write_dataset_csv(p.string(), ds);
  return p.string();
}

std::vector<nlohmann::json> read_jsonl(const fs::path& p) {
  std::vector<nlohmann::json> lines;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(nlohmann::json::parse(line));
  return lines;
}

// Wall-clock fields differ across executions; blank them before comparing.
std::string masked_file(const fs::path& p) {
  std::ostringstream out;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    for (const char* key : {"duration_s", "ttt", "wall_clock_cum"})
      if (j.contains(key)) j[key] = 0;
    out << j.dump() << "\n";
  }
  return out.str();
}

nlohmann::json tiny_config(const std::string& csv, const fs::path& out,
                           const std::vector<std::string>& methods,
                           int workers = 1) {
  return {{"datasets", {{{"csv", csv}, {"label", "label"}}}},
          {"lfs", {0.1}},
          {"seeds", {1, 2}},
          {"methods", methods},
          {"search",
           {{"N_A", 2}, {"N_B", 2}, {"N_mono", 3}, {"G", 2}, {"R", 1}, {"K", 2}}},
          {"output_dir", out.string()},
          {"workers", workers}};
}

}  // namespace

TEST_CASE("config schema violations name the field") {
  nlohmann::json base{{"datasets", {{{"csv", "x.csv"}}}},
                      {"lfs", {0.1}},
                      {"seeds", {1}},
                      {"methods", {"st"}}};
  CHECK_NOTHROW(parse_config(base));

  nlohmann::json no_lfs = base;
  no_lfs.erase("lfs");
  CHECK_THROWS_WITH_AS(parse_config(no_lfs), doctest::Contains("lfs"),
                       ConfigError);

  nlohmann::json bad_method = base;
  bad_method["methods"] = {"nope"};
  CHECK_THROWS_WITH_AS(parse_config(bad_method), doctest::Contains("methods"),
                       ConfigError);

  nlohmann::json dup_seeds = base;
  dup_seeds["seeds"] = {1, 1};
  CHECK_THROWS_WITH_AS(parse_config(dup_seeds), doctest::Contains("seeds"),
                       ConfigError);

  nlohmann::json bad_elites = base;
  bad_elites["search"] = {{"N_A", 2}, {"N_B", 2}, {"E", 2}};
  CHECK_THROWS_WITH_AS(parse_config(bad_elites), doctest::Contains("search.E"),
                       ConfigError);
}

TEST_CASE("eassl search defaults differ only in the view mutation rate") {
  nlohmann::json j{{"datasets", {{{"csv", "x.csv"}}}},
                   {"lfs", {0.1}},
                   {"seeds", {1}},
                   {"methods", {"ccssl"}}};
  const ExperimentConfig cfg = parse_config(j);
  CHECK(cfg.search.pa_mut == 0.45);
  CHECK(cfg.search_eassl.pa_mut == 0.35);

  // An explicit search block flows into the eassl defaults.
  j["search"] = {{"pA_mut", 0.6}};
  const ExperimentConfig cfg2 = parse_config(j);
  CHECK(cfg2.search_eassl.pa_mut == 0.6);
}

TEST_CASE("cross product produces one summary line per cell and resumes") {
  const fs::path dir = fresh_dir("cross");
  const std::string csv = write_blob_csv(dir);
  const ExperimentConfig cfg =
      parse_config(tiny_config(csv, dir / "out", {"st", "lr_ref"}));

  const RunReport r1 = run_experiment(cfg);
  CHECK(r1.computed == 4);  // 1 dataset x 1 lf x 2 seeds x 2 methods
  CHECK(r1.skipped == 0);
  CHECK(r1.exit_code == 0);
  const auto lines = read_jsonl(dir / "out" / "runs.jsonl");
  CHECK(lines.size() == 4);

  std::set<std::string> split_hashes;
  for (const auto& j : lines) split_hashes.insert(j.at("split_hash"));
  CHECK(split_hashes.size() == 2);  // one per seed, shared across methods

  const RunReport r2 = run_experiment(cfg);
  CHECK(r2.computed == 0);
  CHECK(r2.skipped == 4);
  CHECK(read_jsonl(dir / "out" / "runs.jsonl").size() == 4);
}

TEST_CASE("adding a method reuses previous cells") {
  const fs::path dir = fresh_dir("extend");
  const std::string csv = write_blob_csv(dir);
  run_experiment(parse_config(tiny_config(csv, dir / "out", {"st"})));
  const RunReport r =
      run_experiment(parse_config(tiny_config(csv, dir / "out", {"st", "ls"})));
  CHECK(r.skipped == 2);
  CHECK(r.computed == 2);
  CHECK(read_jsonl(dir / "out" / "runs.jsonl").size() == 4);
}

TEST_CASE("a missing dataset fails its cells and exits 1") {
  const fs::path dir = fresh_dir("fail");
  const ExperimentConfig cfg =
      parse_config(tiny_config("/does/not/exist.csv", dir / "out", {"st"}));
  const RunReport r = run_experiment(cfg);
  CHECK(r.failed == 2);
  CHECK(r.exit_code == 1);
}

TEST_CASE("worker count does not change the outputs") {
  const fs::path dir = fresh_dir("workers");
  const std::string csv = write_blob_csv(dir);
  const std::vector<std::string> methods{"ccssl", "st"};
  const ExperimentConfig c1 =
      parse_config(tiny_config(csv, dir / "out1", methods, 1));
  const ExperimentConfig c4 =
      parse_config(tiny_config(csv, dir / "out4", methods, 4));
  run_experiment(c1);
  run_experiment(c4);
  CHECK(masked_file(dir / "out1" / "runs.jsonl") ==
        masked_file(dir / "out4" / "runs.jsonl"));

  // Trajectory streams match generation by generation.
  for (const auto& entry :
       fs::directory_iterator(dir / "out1" / "trajectories")) {
    const fs::path other = dir / "out4" / "trajectories" / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(masked_file(entry.path()) == masked_file(other));
  }
}

TEST_CASE("tuning grids enumerate the documented configurations") {
  const SearchConfig base = frozen_ccssl_config();
  CHECK(stage1_grid(base).size() == 3);
  CHECK(stage2_grid(base).size() == 81);
  CHECK(stage3_grid(base).size() == 27);

  std::set<std::tuple<int, int, int>> stage1;
  for (const auto& c : stage1_grid(base))
    stage1.insert({c.n_a, c.n_b, c.generations});
  CHECK(stage1 == std::set<std::tuple<int, int, int>>{
                      {6, 6, 50}, {8, 8, 38}, {10, 10, 30}});

  std::set<std::tuple<double, double, double, double>> stage2;
  for (const auto& c : stage2_grid(base))
    stage2.insert({c.pa_cx, c.pa_mut, c.pb_cx, c.pb_mut});
  CHECK(stage2.size() == 81);

  std::set<std::tuple<double, double, double>> stage3;
  for (const auto& c : stage3_grid(base))
    stage3.insert({c.weights.lambda_std, c.weights.lambda_bias,
                   c.weights.lambda_add});
  CHECK(stage3.size() == 27);
  // Every grid entry inherits the remaining fields from the base.
  for (const auto& c : stage3_grid(base)) CHECK(c.pa_cx == base.pa_cx);
}

TEST_CASE("tune refuses non-development datasets without force") {
  const fs::path dir = fresh_dir("guard");
  const std::string csv = write_blob_csv(dir);
  const fs::path cfg_path = dir / "cfg.json";
  {
    std::ofstream out(cfg_path);
    out << tiny_config(csv, dir / "out", {"ccssl"}).dump();
  }
  CHECK(cmd_tune(3, cfg_path.string(), "ccssl", false) == 2);
  CHECK(cmd_tune(1, cfg_path.string(), "eassl", true) == 2);  // CC-only stage
  CHECK(cmd_tune(4, cfg_path.string(), "ccssl", true) == 2);
}

TEST_CASE("forced stage-3 tuning ranks all 27 configurations") {
  const fs::path dir = fresh_dir("tune3");
  const std::string csv = write_blob_csv(dir, 100);
  nlohmann::json j = tiny_config(csv, dir / "out", {"ccssl"});
  j["seeds"] = {1};
  j["search"] = {{"N_A", 2}, {"N_B", 2}, {"G", 1}, {"R", 0}, {"K", 1}};
  const fs::path cfg_path = dir / "cfg.json";
  {
    std::ofstream out(cfg_path);
    out << j.dump();
  }
  CHECK(cmd_tune(3, cfg_path.string(), "ccssl", true) == 0);

  std::ifstream csv_in(dir / "out" / "tune_stage3.csv");
  REQUIRE(csv_in.good());
  std::string line;
  int rows = 0;
  while (std::getline(csv_in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 28);  // header + 27 configurations

  std::ifstream sel(dir / "out" / "tune_stage3_selected.json");
  REQUIRE(sel.good());
  nlohmann::json selected;
  sel >> selected;
  CHECK(selected.at("stage") == 3);
  CHECK(selected.at("force_used") == true);
  CHECK(selected.at("config").contains("lambda_std"));
}

TEST_CASE("report emits tables, plots, and metadata") {
  const fs::path dir = fresh_dir("report");
  const std::string csv = write_blob_csv(dir);
  nlohmann::json j =
      tiny_config(csv, dir / "out", {"ccssl", "st", "ls", "hco"});
  j["seeds"] = {1, 2, 3, 4, 5, 6};
  run_experiment(parse_config(j));
  CHECK(cmd_report((dir / "out").string()) == 0);

  const fs::path rep = dir / "out" / "report";
  for (const char* f :
       {"descriptive_stats.csv", "per_dataset_macro_f1.csv",
        "per_dataset_accuracy.csv", "boxplot_data.csv", "trajectories.csv",
        "fitness_trajectory.svg", "report_meta.json"})
    CHECK(fs::exists(rep / f));

  // Layout: one row per (metric, class_split, lf, method) that has data.
  std::ifstream stats(rep / "descriptive_stats.csv");
  std::string line;
  std::getline(stats, line);
  CHECK(line ==
        "metric,class_split,lf,method,n_datasets,min,median,iqr,max,wins");
  int rows = 0;
  while (std::getline(stats, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2 * 4);  // 2 metrics x 1 split x 1 lf x 4 methods
}

TEST_CASE("report flags a dominating method as significant") {
  const fs::path dir = fresh_dir("shading");
  fs::create_directories(dir / "out");
  std::ofstream runs(dir / "out" / "runs.jsonl");
  // Hand-written summaries: ccssl dominates the three baselines. Twelve
  // seeds keep the exact test's smallest p (2/2^12) below alpha/3.
  for (int seed = 0; seed < 12; ++seed) {
    for (const auto& [method, score] :
         std::vector<std::pair<std::string, double>>{
             {"ccssl", 0.9}, {"st", 0.6}, {"ls", 0.4}, {"hco", 0.5}}) {
      const nlohmann::json j{{"method", method},
                             {"dataset", "toy"},
                             {"lf", 0.05},
                             {"seed", seed},
                             {"num_classes", 2},
                             {"test_macro_f1", score + 0.001 * seed},
                             {"test_accuracy", score + 0.001 * seed},
                             {"val_macro_f1", score},
                             {"probe_drop", 0.0},
                             {"pseudo_added", 10.0},
                             {"optimism", 0.0},
                             {"split_hash", "h"},
                             {"duration_s", 0.1},
                             {"degenerate", false}};
      runs << j.dump() << "\n";
    }
  }
  runs.close();
  CHECK(cmd_report((dir / "out").string()) == 0);

  std::ifstream per(dir / "out" / "report" / "per_dataset_macro_f1.csv");
  std::string line;
  bool ccssl_significant = false, st_significant = false;
  while (std::getline(per, line)) {
    if (line.find(",ccssl,") != std::string::npos)
      ccssl_significant = line.back() == '1';
    if (line.find(",st,") != std::string::npos)
      st_significant = line.back() == '1';
  }
  CHECK(ccssl_significant);
  CHECK_FALSE(st_significant);
}

TEST_CASE("report without runs exits 1") {
  const fs::path dir = fresh_dir("empty");
  CHECK(cmd_report(dir.string()) == 1);
}
