#pragma once

// Joint fitness evaluation and the two matched search drivers: two-population
// cooperative coevolution with elitist+random collaboration, and the
// monolithic single-population EA over concatenated genotypes. Both share
// tournament selection, elitist generational replacement, and the variation
// operators of the component modules.

#include <cstdint>
#include <functional>
#include <vector>

#include "evossl/dataset.hpp"
#include "evossl/metrics.hpp"
#include "evossl/policy.hpp"
#include "evossl/run_summary.hpp"
#include "evossl/ssl_engine.hpp"
#include "evossl/views.hpp"

namespace evossl {

struct FitnessWeights {
  double lambda_std = 0.4;
  double lambda_bias = 0.7;
  double lambda_add = 0.0;
};

struct SearchConfig {
  int n_a = 6;
  int n_b = 6;
  int n_mono = 36;
  int generations = 50;
  int random_collaborators = 2;  // R; teams per individual = R + 1
  int resamples = 3;             // K
  int elites = 1;
  int tournament_size = 2;
  double pa_cx = 0.85;
  double pa_mut = 0.45;
  double pb_cx = 0.85;
  double pb_mut = 0.35;
  FitnessWeights weights;
  bool calibrate_gene = false;
  std::uint64_t seed = 0;
};

// Operator probabilities selected for the monolithic driver differ only in
// the view-segment mutation rate.
SearchConfig frozen_ccssl_config();
SearchConfig frozen_eassl_config();

struct EvalRecord {
  ViewGenotype a;
  PolicyGenotype b;
  std::vector<double> scores;  // validation MacroF1 per resample
  double mu = 0.0;
  double sigma = 0.0;  // population std over the K scores
  double probe_drop_mean = 0.0;
  double n_add_mean = 0.0;
  double fitness = 0.0;
  long eval_cost_calls = 0;
};

struct GenerationLog {
  int gen = 0;
  double best_so_far_f = 0.0;
  long fitness_calls_cum = 0;  // post-initialization calls
  double wall_clock_cum = 0.0;
  DiversitySnapshot diversity;
  ViewGenotype best_a;
  PolicyGenotype best_b;
};

nlohmann::json generation_log_to_json(const GenerationLog& g);

struct SearchResult {
  ViewGenotype best_a;
  PolicyGenotype best_b;
  double best_f = 0.0;
  std::vector<GenerationLog> logs;
  long init_fitness_calls = 0;
  long total_fitness_calls = 0;  // post-initialization
  RunSummary summary;
  // Acceptance diagnostics of the final SSL run behind `summary`.
  std::vector<IterationLog> final_iteration_logs;
};

struct JointGenotype {
  ViewGenotype a;
  PolicyGenotype b;
  bool operator==(const JointGenotype&) const = default;
};

using EvalObserver = std::function<void(const EvalRecord&)>;
// Population snapshots right after each generation's evaluation, before the
// replacement step; used by the elitism checks.
using CcPopulationObserver = std::function<void(
    int gen, const std::vector<ViewGenotype>&, const std::vector<double>&,
    const std::vector<PolicyGenotype>&, const std::vector<double>&)>;
using EaPopulationObserver = std::function<void(
    int gen, const std::vector<JointGenotype>&, const std::vector<double>&)>;

// Runs the SSL loop over K fixed resamples, scores validation MacroF1, and
// folds the aggregates into the scalar fitness
//   F = mu - lambda_std*sigma - lambda_bias*probe_drop - lambda_add*n_add.
EvalRecord evaluate_joint(const ViewGenotype& a, const PolicyGenotype& b,
                          const Dataset& ds, const SplitPlan& plan,
                          const SearchConfig& cfg, long* call_counter);

SearchResult run_ccssl(const Dataset& ds, const SplitPlan& plan,
                       const SearchConfig& cfg,
                       const EvalObserver& observer = nullptr,
                       const CcPopulationObserver& pop_observer = nullptr);
SearchResult run_eassl(const Dataset& ds, const SplitPlan& plan,
                       const SearchConfig& cfg,
                       const EvalObserver& observer = nullptr,
                       const EaPopulationObserver& pop_observer = nullptr);

// Draws `size` distinct indices uniformly; returns the max-fitness one,
// ties resolved toward the earliest draw.
std::size_t tournament_select(const std::vector<double>& fitnesses,
                              std::size_t size, Rng& rng);

TargetCost cost_to_target(const std::vector<GenerationLog>& logs);

}  // namespace evossl
