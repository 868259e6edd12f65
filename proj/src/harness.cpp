#include "evossl/harness.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <tuple>

#include "evossl/openml.hpp"
#include "evossl/parallel.hpp"
#include "evossl/ssl_engine.hpp"
#include "evossl/stats.hpp"

namespace fs = std::filesystem;

namespace evossl {

namespace {

std::uint64_t string_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                          c == '.' || c == '_'
                      ? c
                      : '_');
  return out;
}

}  // namespace

std::string lf_label(double lf) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", lf);
  return buf;
}

std::string DatasetSpec::key() const {
  return is_openml() ? "openml:" + std::to_string(openml_id) : "csv:" + csv_path;
}

namespace {

template <typename T>
T get_field(const nlohmann::json& j, const std::string& path,
            const std::string& key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + "." + key, "wrong type");
  }
}

SearchConfig parse_search(const nlohmann::json& j, const std::string& path,
                          SearchConfig base) {
  SearchConfig c = base;
  c.n_a = get_field(j, path, "N_A", c.n_a);
  c.n_b = get_field(j, path, "N_B", c.n_b);
  c.n_mono = get_field(j, path, "N_mono", c.n_mono);
  c.generations = get_field(j, path, "G", c.generations);
  c.random_collaborators = get_field(j, path, "R", c.random_collaborators);
  c.resamples = get_field(j, path, "K", c.resamples);
  c.elites = get_field(j, path, "E", c.elites);
  c.tournament_size = get_field(j, path, "tournament_size", c.tournament_size);
  c.pa_cx = get_field(j, path, "pA_cx", c.pa_cx);
  c.pa_mut = get_field(j, path, "pA_mut", c.pa_mut);
  c.pb_cx = get_field(j, path, "pB_cx", c.pb_cx);
  c.pb_mut = get_field(j, path, "pB_mut", c.pb_mut);
  c.weights.lambda_std = get_field(j, path, "lambda_std", c.weights.lambda_std);
  c.weights.lambda_bias = get_field(j, path, "lambda_bias", c.weights.lambda_bias);
  c.weights.lambda_add = get_field(j, path, "lambda_add", c.weights.lambda_add);
  c.calibrate_gene = get_field(j, path, "calibrate_gene", c.calibrate_gene);

  if (c.n_a < 1) throw ConfigError(path + ".N_A", "must be >= 1");
  if (c.n_b < 1) throw ConfigError(path + ".N_B", "must be >= 1");
  if (c.n_mono < 1) throw ConfigError(path + ".N_mono", "must be >= 1");
  if (c.generations < 1) throw ConfigError(path + ".G", "must be >= 1");
  if (c.random_collaborators < 0) throw ConfigError(path + ".R", "must be >= 0");
  if (c.resamples < 1) throw ConfigError(path + ".K", "must be >= 1");
  if (c.elites < 1) throw ConfigError(path + ".E", "must be >= 1");
  if (c.elites >= std::min({c.n_a, c.n_b, c.n_mono}))
    throw ConfigError(path + ".E", "must be below the population sizes");
  if (c.tournament_size < 1)
    throw ConfigError(path + ".tournament_size", "must be >= 1");
  for (auto [name, p] : {std::pair<const char*, double>{"pA_cx", c.pa_cx},
                         {"pA_mut", c.pa_mut},
                         {"pB_cx", c.pb_cx},
                         {"pB_mut", c.pb_mut}})
    if (p < 0.0 || p > 1.0)
      throw ConfigError(path + "." + name, "must be in [0,1]");
  for (auto [name, w] :
       {std::pair<const char*, double>{"lambda_std", c.weights.lambda_std},
        {"lambda_bias", c.weights.lambda_bias},
        {"lambda_add", c.weights.lambda_add}})
    if (w < 0.0) throw ConfigError(path + "." + name, "must be >= 0");
  return c;
}

const std::set<std::string> kKnownMethods = {"ccssl", "eassl",  "st",
                                             "hco",   "ls",     "lr_ref",
                                             "svm_ref"};

}  // namespace

nlohmann::json search_config_to_json(const SearchConfig& c) {
  return {{"N_A", c.n_a},
          {"N_B", c.n_b},
          {"N_mono", c.n_mono},
          {"G", c.generations},
          {"R", c.random_collaborators},
          {"K", c.resamples},
          {"E", c.elites},
          {"tournament_size", c.tournament_size},
          {"pA_cx", c.pa_cx},
          {"pA_mut", c.pa_mut},
          {"pB_cx", c.pb_cx},
          {"pB_mut", c.pb_mut},
          {"lambda_std", c.weights.lambda_std},
          {"lambda_bias", c.weights.lambda_bias},
          {"lambda_add", c.weights.lambda_add},
          {"calibrate_gene", c.calibrate_gene}};
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (!j.contains("datasets") || !j.at("datasets").is_array() ||
      j.at("datasets").empty())
    throw ConfigError("datasets", "required nonempty array");
  for (std::size_t i = 0; i < j.at("datasets").size(); ++i) {
    const auto& d = j.at("datasets")[i];
    const std::string path = "datasets[" + std::to_string(i) + "]";
    DatasetSpec spec;
    if (d.contains("csv")) {
      spec.csv_path = d.at("csv").get<std::string>();
      spec.label_column = get_field(d, path, "label", std::string("label"));
    } else if (d.contains("openml")) {
      if (!d.at("openml").is_number_integer())
        throw ConfigError(path + ".openml", "must be an integer id");
      spec.openml_id = d.at("openml").get<int>();
    } else {
      throw ConfigError(path, "needs either 'csv' or 'openml'");
    }
    cfg.datasets.push_back(std::move(spec));
  }

  cfg.lfs = get_field(j, "", "lfs", std::vector<double>{});
  if (cfg.lfs.empty()) throw ConfigError("lfs", "required nonempty array");
  for (double lf : cfg.lfs)
    if (!(lf > 0.0 && lf <= 1.0)) throw ConfigError("lfs", "values must be in (0,1]");

  cfg.seeds = get_field(j, "", "seeds", std::vector<std::int64_t>{});
  if (cfg.seeds.empty()) throw ConfigError("seeds", "required nonempty array");
  if (std::set<std::int64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() !=
      cfg.seeds.size())
    throw ConfigError("seeds", "must be distinct");

  cfg.methods = get_field(j, "", "methods", std::vector<std::string>{});
  if (cfg.methods.empty()) throw ConfigError("methods", "required nonempty array");
  for (const auto& m : cfg.methods)
    if (!kKnownMethods.count(m)) throw ConfigError("methods", "unknown method " + m);

  if (j.contains("search"))
    cfg.search = parse_search(j.at("search"), "search", frozen_ccssl_config());
  cfg.search_eassl = j.contains("search") ? cfg.search : frozen_eassl_config();
  if (j.contains("search_eassl"))
    cfg.search_eassl =
        parse_search(j.at("search_eassl"), "search_eassl", cfg.search_eassl);

  if (j.contains("baselines")) {
    const auto& b = j.at("baselines");
    cfg.baselines.tau_fixed = get_field(b, "baselines", "tau_fixed", 0.9);
    cfg.baselines.max_iters = get_field(b, "baselines", "max_iters", 10);
    cfg.baselines.ls_alpha = get_field(b, "baselines", "ls_alpha", 0.9);
    cfg.baselines.ls_neighbors = get_field(b, "baselines", "ls_neighbors", 7);
    cfg.baselines.ls_max_iter = get_field(b, "baselines", "ls_max_iter", 1000);
    cfg.baselines.ls_inductive = get_field(b, "baselines", "ls_inductive", false);
    cfg.baselines.svm_c_reg = get_field(b, "baselines", "svm_c_reg", 1.0);
    if (!(cfg.baselines.ls_alpha > 0.0 && cfg.baselines.ls_alpha < 1.0))
      throw ConfigError("baselines.ls_alpha", "must be in (0,1)");
    if (cfg.baselines.ls_neighbors < 1)
      throw ConfigError("baselines.ls_neighbors", "must be >= 1");
  }

  cfg.output_dir = get_field(j, "", "output_dir", std::string("out"));
  cfg.workers = get_field(j, "", "workers", 1);
  if (cfg.workers < 1) throw ConfigError("workers", "must be >= 1");
  cfg.cache_dir = get_field(j, "", "cache_dir", std::string());
  cfg.tune_dev_openml_ids =
      get_field(j, "", "tune_dev_openml_ids", cfg.tune_dev_openml_ids);

  if (j.contains("split")) {
    const auto& s = j.at("split");
    cfg.split_shares.test = get_field(s, "split", "test", 0.20);
    cfg.split_shares.val = get_field(s, "split", "val", 0.16);
    cfg.split_shares.probe = get_field(s, "split", "probe", 0.08);
    const double sum = cfg.split_shares.test + cfg.split_shares.val +
                       cfg.split_shares.probe;
    if (!(sum > 0.0 && sum < 1.0))
      throw ConfigError("split", "test+val+probe must be in (0,1)");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("(file)", "cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("(file)", std::string("JSON parse failure: ") + e.what());
  }
  return parse_config(j);
}

namespace {

struct Cell {
  std::size_t dataset_index;
  double lf;
  std::int64_t seed;
  std::string method;
};

bool is_search_method(const std::string& m) { return m == "ccssl" || m == "eassl"; }

std::string cell_fingerprint(const ExperimentConfig& cfg, const Cell& cell) {
  nlohmann::json relevant;
  relevant["shares"] = {cfg.split_shares.test, cfg.split_shares.val,
                        cfg.split_shares.probe};
  if (cell.method == "ccssl")
    relevant["search"] = search_config_to_json(cfg.search);
  else if (cell.method == "eassl")
    relevant["search"] = search_config_to_json(cfg.search_eassl);
  else
    relevant["baselines"] = {{"tau_fixed", cfg.baselines.tau_fixed},
                             {"max_iters", cfg.baselines.max_iters},
                             {"ls_alpha", cfg.baselines.ls_alpha},
                             {"ls_neighbors", cfg.baselines.ls_neighbors},
                             {"ls_max_iter", cfg.baselines.ls_max_iter},
                             {"ls_inductive", cfg.baselines.ls_inductive},
                             {"svm_c_reg", cfg.baselines.svm_c_reg}};
  return relevant.dump();
}

std::string cell_hash(const ExperimentConfig& cfg, const Cell& cell,
                      const std::string& dataset_key) {
  return hex64(hash_mix({string_hash(cell.method), string_hash(dataset_key),
                         std::bit_cast<std::uint64_t>(cell.lf),
                         static_cast<std::uint64_t>(cell.seed),
                         string_hash(cell_fingerprint(cfg, cell))}));
}

std::string trajectory_filename(const std::string& method,
                                const std::string& dataset, double lf,
                                std::int64_t seed) {
  return sanitize(method) + "-" + sanitize(dataset) + "-lf" +
         sanitize(lf_label(lf)) + "-s" + std::to_string(seed) + ".jsonl";
}

struct CellResult {
  RunSummary summary;
  std::vector<nlohmann::json> trajectory;       // empty for baselines
  std::vector<nlohmann::json> acceptance_log;   // final SSL run, search only
};

CellResult run_cell(const ExperimentConfig& cfg, const Dataset& ds,
                    const Cell& cell) {
  const SplitPlan plan =
      make_split(ds, cell.lf, cell.seed, cfg.split_shares);
  CellResult result;
  if (is_search_method(cell.method)) {
    SearchConfig sc = cell.method == "ccssl" ? cfg.search : cfg.search_eassl;
    sc.seed = static_cast<std::uint64_t>(cell.seed);
    const SearchResult sr = cell.method == "ccssl"
                                ? run_ccssl(ds, plan, sc)
                                : run_eassl(ds, plan, sc);
    result.summary = sr.summary;
    nlohmann::json header{{"type", "header"},
                          {"method", cell.method},
                          {"dataset", ds.name},
                          {"lf", cell.lf},
                          {"seed", cell.seed},
                          {"init_fitness_calls", sr.init_fitness_calls},
                          {"total_fitness_calls", sr.total_fitness_calls},
                          {"config", search_config_to_json(sc)}};
    result.trajectory.push_back(std::move(header));
    for (const auto& g : sr.logs) {
      nlohmann::json line = generation_log_to_json(g);
      line["type"] = "generation";
      result.trajectory.push_back(std::move(line));
    }
    for (const auto& log : sr.final_iteration_logs)
      result.acceptance_log.push_back(iteration_log_to_json(log));
    return result;
  }

  const LabeledResample rs0 = resample_labeled(plan, ds, 0);
  if (cell.method == "st") {
    result.summary = run_self_training(ds, plan, rs0, cfg.baselines);
  } else if (cell.method == "hco") {
    result.summary = run_cotraining(ds, plan, rs0, cfg.baselines);
  } else if (cell.method == "ls") {
    result.summary = run_label_spreading(ds, plan, rs0, cfg.baselines);
  } else {
    const auto refs = run_supervised_refs(ds, plan, rs0, cfg.baselines);
    for (const auto& r : refs)
      if (r.method == cell.method) result.summary = r;
  }
  return result;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  RunReport report;
  const fs::path out_dir = cfg.output_dir;
  fs::create_directories(out_dir / "trajectories");

  // Load datasets up front; a failed load fails all of its cells.
  std::vector<std::optional<Dataset>> datasets(cfg.datasets.size());
  std::vector<std::string> load_errors(cfg.datasets.size());
  for (std::size_t i = 0; i < cfg.datasets.size(); ++i) {
    const auto& spec = cfg.datasets[i];
    try {
      if (spec.is_openml()) {
        OpenmlOptions opts;
        opts.cache_dir = cfg.cache_dir;
        datasets[i] = fetch_openml(spec.openml_id, opts);
      } else {
        datasets[i] = load_csv(spec.csv_path, spec.label_column);
      }
    } catch (const std::exception& e) {
      load_errors[i] = e.what();
      std::cerr << "dataset " << spec.key() << " failed to load: " << e.what()
                << "\n";
    }
  }

  std::vector<Cell> cells;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d)
    for (double lf : cfg.lfs)
      for (std::int64_t seed : cfg.seeds)
        for (const auto& method : cfg.methods)
          cells.push_back({d, lf, seed, method});

  // Previously completed cells, keyed by content hash.
  const fs::path runs_path = out_dir / "runs.jsonl";
  std::map<std::string, nlohmann::json> existing;
  if (fs::exists(runs_path)) {
    std::ifstream in(runs_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        nlohmann::json j = nlohmann::json::parse(line);
        if (j.contains("cell_hash")) {
          const std::string key = j.at("cell_hash").get<std::string>();
          existing[key] = std::move(j);
        }
      } catch (const nlohmann::json::exception&) {
        // Unparseable line (e.g. truncated by a crash): recompute the cell.
      }
    }
  }

  struct Pending {
    std::size_t cell_index;
    std::string hash;
  };
  std::vector<Pending> pending;
  std::map<std::string, nlohmann::json> completed;  // hash -> summary line
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& cell = cells[i];
    if (!datasets[cell.dataset_index]) {
      ++report.failed;
      continue;
    }
    const std::string hash =
        cell_hash(cfg, cell, cfg.datasets[cell.dataset_index].key());
    const auto it = existing.find(hash);
    if (it != existing.end()) {
      completed[hash] = it->second;
      ++report.skipped;
    } else {
      pending.push_back({i, hash});
    }
  }

  std::mutex merge_mutex;
  std::ofstream append_stream(runs_path, std::ios::app);
  parallel_for(pending.size(), cfg.workers, [&](std::size_t p) {
    const Cell& cell = cells[pending[p].cell_index];
    const Dataset& ds = *datasets[cell.dataset_index];
    CellResult res = run_cell(cfg, ds, cell);
    nlohmann::json line = summary_to_json(res.summary);
    line["cell_hash"] = pending[p].hash;

    if (!res.trajectory.empty()) {
      const fs::path traj =
          out_dir / "trajectories" /
          trajectory_filename(cell.method, ds.name, cell.lf, cell.seed);
      std::ofstream tf(traj);
      for (const auto& l : res.trajectory) tf << l.dump() << "\n";
    }
    if (!res.acceptance_log.empty()) {
      fs::create_directories(out_dir / "acceptance_logs");
      const fs::path alog =
          out_dir / "acceptance_logs" /
          trajectory_filename(cell.method, ds.name, cell.lf, cell.seed);
      std::ofstream af(alog);
      for (const auto& l : res.acceptance_log) af << l.dump() << "\n";
    }
    std::lock_guard<std::mutex> lock(merge_mutex);
    completed[pending[p].hash] = line;
    append_stream << line.dump() << "\n";  // crash-safe progress
    append_stream.flush();
    ++report.computed;
  });
  append_stream.close();

  // Canonical rewrite: one line per (method, dataset, lf, seed), fresh
  // results preferred, ordered by (dataset, lf, seed, method).
  std::map<std::string, nlohmann::json> by_key;
  auto key_of = [](const nlohmann::json& j) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%018.9f|%020lld",
                  j.at("lf").get<double>(),
                  static_cast<long long>(j.at("seed").get<std::int64_t>()));
    return j.at("dataset").get<std::string>() + "|" + buf + "|" +
           j.at("method").get<std::string>();
  };
  for (const auto& [hash, j] : existing) by_key[key_of(j)] = j;
  for (const auto& [hash, j] : completed) by_key[key_of(j)] = j;
  std::ofstream out(runs_path, std::ios::trunc);
  for (const auto& [key, j] : by_key) out << j.dump() << "\n";

  if (report.failed > 0) report.exit_code = 1;
  return report;
}

int cmd_run(const std::string& config_path) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.path << ": " << e.what() << "\n";
    return 2;
  }
  try {
    const RunReport report = run_experiment(cfg);
    std::cout << "computed " << report.computed << ", skipped "
              << report.skipped << ", failed " << report.failed << "\n";
    return report.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 1;
  }
}

std::vector<SearchConfig> stage1_grid(const SearchConfig& base) {
  std::vector<SearchConfig> grid;
  for (const auto& [na, nb, g] :
       {std::tuple<int, int, int>{6, 6, 50}, {8, 8, 38}, {10, 10, 30}}) {
    SearchConfig c = base;
    c.n_a = na;
    c.n_b = nb;
    c.generations = g;
    grid.push_back(c);
  }
  return grid;
}

std::vector<SearchConfig> stage2_grid(const SearchConfig& base) {
  std::vector<SearchConfig> grid;
  for (double pa_cx : {0.70, 0.85, 0.95})
    for (double pa_mut : {0.25, 0.45, 0.65})
      for (double pb_cx : {0.70, 0.85, 0.95})
        for (double pb_mut : {0.35, 0.55, 0.75}) {
          SearchConfig c = base;
          c.pa_cx = pa_cx;
          c.pa_mut = pa_mut;
          c.pb_cx = pb_cx;
          c.pb_mut = pb_mut;
          grid.push_back(c);
        }
  return grid;
}

std::vector<SearchConfig> stage3_grid(const SearchConfig& base) {
  std::vector<SearchConfig> grid;
  for (double l_std : {0.0, 0.2, 0.4})
    for (double l_bias : {0.3, 0.7, 1.1})
      for (double l_add : {0.0, 0.0002, 0.0005}) {
        SearchConfig c = base;
        c.weights.lambda_std = l_std;
        c.weights.lambda_bias = l_bias;
        c.weights.lambda_add = l_add;
        grid.push_back(c);
      }
  return grid;
}

int cmd_tune(int stage, const std::string& config_path,
             const std::string& method, bool force) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.path << ": " << e.what() << "\n";
    return 2;
  }
  if (stage < 1 || stage > 3) {
    std::cerr << "tune: stage must be 1, 2, or 3\n";
    return 2;
  }
  if (method != "ccssl" && method != "eassl") {
    std::cerr << "tune: method must be ccssl or eassl\n";
    return 2;
  }
  if (stage == 1 && method == "eassl") {
    std::cerr << "tune: stage 1 sweeps the two-population sizes; it applies "
                 "to ccssl only\n";
    return 2;
  }

  // Protocol guard: tuning stays on the development datasets.
  const std::set<int> dev(cfg.tune_dev_openml_ids.begin(),
                          cfg.tune_dev_openml_ids.end());
  bool all_dev = true;
  for (const auto& spec : cfg.datasets)
    if (!spec.is_openml() || !dev.count(spec.openml_id)) all_dev = false;
  if (!all_dev && !force) {
    std::cerr << "tune: refusing non-development datasets without --force\n";
    return 2;
  }

  std::vector<std::optional<Dataset>> datasets(cfg.datasets.size());
  for (std::size_t i = 0; i < cfg.datasets.size(); ++i) {
    const auto& spec = cfg.datasets[i];
    try {
      if (spec.is_openml()) {
        OpenmlOptions opts;
        opts.cache_dir = cfg.cache_dir;
        datasets[i] = fetch_openml(spec.openml_id, opts);
      } else {
        datasets[i] = load_csv(spec.csv_path, spec.label_column);
      }
    } catch (const std::exception& e) {
      std::cerr << "tune: dataset " << spec.key() << " failed: " << e.what()
                << "\n";
      return 1;
    }
  }

  const SearchConfig base = method == "ccssl" ? cfg.search : cfg.search_eassl;
  const std::vector<SearchConfig> grid = stage == 1   ? stage1_grid(base)
                                         : stage == 2 ? stage2_grid(base)
                                                      : stage3_grid(base);

  struct Job {
    std::size_t grid_index;
    std::size_t dataset_index;
    double lf;
    std::int64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t g = 0; g < grid.size(); ++g)
    for (std::size_t d = 0; d < datasets.size(); ++d)
      for (double lf : cfg.lfs)
        for (std::int64_t seed : cfg.seeds) jobs.push_back({g, d, lf, seed});

  std::vector<double> scores(jobs.size(), 0.0);
  std::vector<double> ttts(jobs.size(), 0.0);
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    const Dataset& ds = *datasets[job.dataset_index];
    const SplitPlan plan = make_split(ds, job.lf, job.seed, cfg.split_shares);
    SearchConfig sc = grid[job.grid_index];
    sc.seed = static_cast<std::uint64_t>(job.seed);
    const SearchResult sr = method == "ccssl" ? run_ccssl(ds, plan, sc)
                                              : run_eassl(ds, plan, sc);
    scores[i] = sr.summary.test_macro_f1;
    ttts[i] = sr.summary.ttt;
  });

  struct Aggregate {
    std::size_t grid_index;
    double mean = 0.0;
    double stdev = 0.0;
    double mean_ttt = 0.0;
    long runs = 0;
  };
  std::vector<Aggregate> agg(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) agg[g].grid_index = g;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& a = agg[jobs[i].grid_index];
    a.mean += scores[i];
    a.mean_ttt += ttts[i];
    a.runs += 1;
  }
  for (auto& a : agg) {
    a.mean /= static_cast<double>(a.runs);
    a.mean_ttt /= static_cast<double>(a.runs);
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& a = agg[jobs[i].grid_index];
    a.stdev += (scores[i] - a.mean) * (scores[i] - a.mean);
  }
  for (auto& a : agg) a.stdev = std::sqrt(a.stdev / static_cast<double>(a.runs));

  // Rank: mean MacroF1 desc, then dispersion asc, then TTT asc.
  std::stable_sort(agg.begin(), agg.end(), [](const Aggregate& a, const Aggregate& b) {
    if (a.mean != b.mean) return a.mean > b.mean;
    if (a.stdev != b.stdev) return a.stdev < b.stdev;
    return a.mean_ttt < b.mean_ttt;
  });

  fs::create_directories(cfg.output_dir);
  const fs::path csv_path =
      fs::path(cfg.output_dir) / ("tune_stage" + std::to_string(stage) + ".csv");
  std::ofstream csv(csv_path);
  csv << "rank,config_id,N_A,N_B,N_mono,G,R,K,pA_cx,pA_mut,pB_cx,pB_mut,"
         "lambda_std,lambda_bias,lambda_add,mean_test_macro_f1,"
         "std_test_macro_f1,mean_ttt,runs\n";
  for (std::size_t r = 0; r < agg.size(); ++r) {
    const SearchConfig& c = grid[agg[r].grid_index];
    csv << r + 1 << "," << agg[r].grid_index << "," << c.n_a << "," << c.n_b
        << "," << c.n_mono << "," << c.generations << ","
        << c.random_collaborators << "," << c.resamples << "," << c.pa_cx
        << "," << c.pa_mut << "," << c.pb_cx << "," << c.pb_mut << ","
        << c.weights.lambda_std << "," << c.weights.lambda_bias << ","
        << c.weights.lambda_add << "," << agg[r].mean << "," << agg[r].stdev
        << "," << agg[r].mean_ttt << "," << agg[r].runs << "\n";
  }

  nlohmann::json selected{
      {"stage", stage},
      {"method", method},
      {"force_used", !all_dev},
      {"config", search_config_to_json(grid[agg.front().grid_index])},
      {"mean_test_macro_f1", agg.front().mean},
      {"std_test_macro_f1", agg.front().stdev},
      {"mean_ttt", agg.front().mean_ttt}};
  nlohmann::json ds_list = nlohmann::json::array();
  for (const auto& spec : cfg.datasets) ds_list.push_back(spec.key());
  selected["datasets"] = ds_list;
  const fs::path sel_path =
      fs::path(cfg.output_dir) /
      ("tune_stage" + std::to_string(stage) + "_selected.json");
  std::ofstream sel(sel_path);
  sel << selected.dump(2) << "\n";

  std::cout << "stage " << stage << ": evaluated " << grid.size()
            << " configurations over " << jobs.size() << " runs; best mean "
            << agg.front().mean << "\n";
  return 0;
}

int cmd_fetch(int openml_id, const std::string& cache_dir) {
  try {
    OpenmlOptions opts;
    opts.cache_dir = cache_dir;
    const Dataset ds = fetch_openml(openml_id, opts);
    std::cout << ds.name << ": " << ds.rows() << " rows, " << ds.cols()
              << " encoded features, " << ds.num_classes << " classes\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "fetch failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace evossl
