#pragma once

// Scoring and diagnostic math: MacroF1/accuracy, probe-drop and optimism
// differences, population diversity summaries, and cost-to-target extraction
// from best-so-far trajectories.

#include <cstdint>
#include <span>
#include <vector>

namespace evossl {

struct ScoreReport {
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<double> per_class_f1;
};

// One-vs-rest per-class F1 with the 0/0 -> 0 convention; MacroF1 averages
// over all num_classes classes, including ones absent from y_true.
ScoreReport score_classification(std::span<const int> y_true,
                                 std::span<const int> y_pred, int num_classes);

inline double probe_drop(double score_before, double score_after) {
  return score_before - score_after;
}

inline double val_optimism(double score_val, double score_test) {
  return score_val - score_test;
}

struct DiversitySnapshot {
  double mask_jaccard = 0.0;
  double numeric_dispersion = 0.0;
  double boolean_disagreement = 0.0;
};

// Mean pairwise Jaccard distance over bit vectors. Pairs of all-zero masks
// are invalid (repair keeps masks nonempty) and trip an assertion.
double mean_pairwise_jaccard_distance(
    const std::vector<std::vector<std::uint8_t>>& masks);

// Mean Euclidean distance to the centroid; rows are already normalized gene
// vectors of equal length.
double mean_distance_to_centroid(const std::vector<std::vector<double>>& rows);

// Mean pairwise disagreement rate averaged across boolean flags.
double mean_pairwise_boolean_disagreement(
    const std::vector<std::vector<std::uint8_t>>& rows);

struct TargetCost {
  double f_star = 0.0;
  int gtt = 0;
  double ttt = 0.0;
};

// First generation whose best-so-far value reaches the 99% target of the
// final value. The target is sign-aware: f_star - 0.01*|f_star|, which equals
// 0.99*f_star for nonnegative trajectories and stays reachable for negative
// ones.
double target_fitness(double f_star);
TargetCost cost_to_target(std::span<const double> best_so_far,
                          std::span<const double> wall_clock_cum);

}  // namespace evossl
