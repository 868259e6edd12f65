#pragma once

// Two-view pseudo-labeling loop. Per iteration: fit one model per view on
// the labeled set, filter unlabeled candidates by confidence / margin /
// agreement, accept up to a per-class cap ranked by confidence, and move
// them into the labeled set. Emits per-iteration acceptance diagnostics and
// probe scores before/after.

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "evossl/dataset.hpp"
#include "evossl/linear_model.hpp"
#include "evossl/policy.hpp"
#include "evossl/views.hpp"

namespace evossl {

enum class StopReason { max_iters, no_acceptance, pool_exhausted };
std::string to_string(StopReason r);

struct IterationLog {
  int t = 0;
  double tau_t = 0.0;
  long after_confidence = 0;
  long after_margin = 0;
  long after_veto = 0;
  std::map<int, long> accepted_per_class;
};

// One JSONL line of the per-iteration acceptance log.
nlohmann::json iteration_log_to_json(const IterationLog& log);

struct SslOutcome {
  LinearClassifier model1, model2;  // trained on the final labeled set
  ViewTransform view1, view2;
  long L_final_size = 0;
  long pseudo_added = 0;
  std::vector<long> per_iter_added;
  double probe_before = 0.0;
  double probe_after = 0.0;
  int iterations_run = 0;
  StopReason stop_reason = StopReason::max_iters;
  std::vector<IterationLog> iteration_logs;
};

// Phenotype-level loop; baselines call this directly (it accepts values
// outside the genotype domains, e.g. an unreachable threshold).
SslOutcome run_ssl_core(const Dataset& ds, const LabeledResample& rs,
                        const ViewTransform& v1, const ViewTransform& v2,
                        const SslPolicy& policy,
                        const std::vector<int>& probe_idx, std::uint64_t seed);

// Genotype-level entry: builds the views on the pool rows (L0 u U0).
SslOutcome run_ssl(const Dataset& ds, const LabeledResample& rs,
                   const ViewGenotype& a, const PolicyGenotype& b,
                   const std::vector<int>& probe_idx, std::uint64_t seed);

// Posterior-averaged fusion; ties go to the lower class index.
std::vector<int> predict_fused(const LinearClassifier& m1,
                               const LinearClassifier& m2,
                               const Eigen::MatrixXd& X1,
                               const Eigen::MatrixXd& X2);

// Fused prediction on raw feature rows using the outcome's stored views.
std::vector<int> predict_final(const SslOutcome& out, const Eigen::MatrixXd& X);

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X,
                            const std::vector<int>& rows);
std::vector<int> select_labels(const std::vector<int>& labels,
                               const std::vector<int>& rows);

}  // namespace evossl
