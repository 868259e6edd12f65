#pragma once

// The per-(method, dataset, lf, seed) result row consumed by the statistics
// and reporting layer. One JSON line per cell in runs.jsonl.

#include <cstdint>
#include <string>

#include "json.hpp"

namespace evossl {

struct RunSummary {
  std::string method;
  std::string dataset;
  double lf = 0.0;
  std::int64_t seed = 0;
  int num_classes = 0;
  double test_macro_f1 = 0.0;
  double test_accuracy = 0.0;
  double val_macro_f1 = 0.0;
  double probe_drop = 0.0;
  double pseudo_added = 0.0;
  double optimism = 0.0;  // val_macro_f1 - test_macro_f1
  std::string split_hash;
  double duration_s = 0.0;
  bool has_target_cost = false;  // search methods only
  int gtt = 0;
  double ttt = 0.0;
  bool degenerate = false;  // e.g. HCo on d=1, LS isolated components
};

nlohmann::json summary_to_json(const RunSummary& s);
RunSummary summary_from_json(const nlohmann::json& j);

}  // namespace evossl
