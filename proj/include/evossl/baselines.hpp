#pragma once

// Lightweight SSL baselines sharing the evolutionary methods' partitions:
// fixed-policy self-training, heuristic co-training over two random feature
// halves, graph-based label spreading, and the two supervised references.

#include <cstdint>
#include <vector>

#include "evossl/dataset.hpp"
#include "evossl/linear_model.hpp"
#include "evossl/run_summary.hpp"

namespace evossl {

struct BaselineConfig {
  double tau_fixed = 0.9;
  int max_iters = 10;
  double ls_alpha = 0.9;
  int ls_neighbors = 7;
  int ls_max_iter = 1000;
  bool ls_inductive = false;  // predict test by 1-NN instead of transduction
  ThetaClf theta;
  double svm_c_reg = 1.0;
};

RunSummary run_self_training(const Dataset& ds, const SplitPlan& plan,
                             const LabeledResample& rs,
                             const BaselineConfig& cfg);
RunSummary run_cotraining(const Dataset& ds, const SplitPlan& plan,
                          const LabeledResample& rs, const BaselineConfig& cfg);
RunSummary run_label_spreading(const Dataset& ds, const SplitPlan& plan,
                               const LabeledResample& rs,
                               const BaselineConfig& cfg);
// Returns {LR_ref, SVM_ref} summaries.
std::vector<RunSummary> run_supervised_refs(const Dataset& ds,
                                            const SplitPlan& plan,
                                            const LabeledResample& rs,
                                            const BaselineConfig& cfg);

}  // namespace evossl
