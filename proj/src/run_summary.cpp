#include "evossl/run_summary.hpp"

namespace evossl {

nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json j{{"method", s.method},
                   {"dataset", s.dataset},
                   {"lf", s.lf},
                   {"seed", s.seed},
                   {"num_classes", s.num_classes},
                   {"test_macro_f1", s.test_macro_f1},
                   {"test_accuracy", s.test_accuracy},
                   {"val_macro_f1", s.val_macro_f1},
                   {"probe_drop", s.probe_drop},
                   {"pseudo_added", s.pseudo_added},
                   {"optimism", s.optimism},
                   {"split_hash", s.split_hash},
                   {"duration_s", s.duration_s},
                   {"degenerate", s.degenerate}};
  if (s.has_target_cost) {
    j["gtt"] = s.gtt;
    j["ttt"] = s.ttt;
  }
  return j;
}

RunSummary summary_from_json(const nlohmann::json& j) {
  RunSummary s;
  s.method = j.at("method").get<std::string>();
  s.dataset = j.at("dataset").get<std::string>();
  s.lf = j.at("lf").get<double>();
  s.seed = j.at("seed").get<std::int64_t>();
  s.num_classes = j.value("num_classes", 0);
  s.test_macro_f1 = j.at("test_macro_f1").get<double>();
  s.test_accuracy = j.at("test_accuracy").get<double>();
  s.val_macro_f1 = j.at("val_macro_f1").get<double>();
  s.probe_drop = j.value("probe_drop", 0.0);
  s.pseudo_added = j.value("pseudo_added", 0.0);
  s.optimism = j.value("optimism", 0.0);
  s.split_hash = j.value("split_hash", std::string());
  s.duration_s = j.value("duration_s", 0.0);
  s.degenerate = j.value("degenerate", false);
  if (j.contains("gtt")) {
    s.has_target_cost = true;
    s.gtt = j.at("gtt").get<int>();
    s.ttt = j.at("ttt").get<double>();
  }
  return s;
}

}  // namespace evossl
