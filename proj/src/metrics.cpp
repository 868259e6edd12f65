#include "evossl/metrics.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace evossl {

ScoreReport score_classification(std::span<const int> y_true,
                                 std::span<const int> y_pred, int num_classes) {
  if (y_true.size() != y_pred.size())
    throw std::invalid_argument("score_classification: length mismatch");
  if (num_classes < 1)
    throw std::invalid_argument("score_classification: num_classes < 1");

  std::vector<long> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  long correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
      throw std::invalid_argument("score_classification: label out of range");
    if (t == p) {
      ++tp[t];
      ++correct;
    } else {
      ++fp[p];
      ++fn[t];
    }
  }

  ScoreReport rep;
  rep.per_class_f1.resize(num_classes, 0.0);
  double f1_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    const double prec_den = static_cast<double>(tp[c] + fp[c]);
    const double rec_den = static_cast<double>(tp[c] + fn[c]);
    const double prec = prec_den > 0 ? tp[c] / prec_den : 0.0;
    const double rec = rec_den > 0 ? tp[c] / rec_den : 0.0;
    const double f1 = (prec + rec) > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    rep.per_class_f1[c] = f1;
    f1_sum += f1;
  }
  rep.macro_f1 = f1_sum / num_classes;
  rep.accuracy =
      y_true.empty() ? 0.0 : static_cast<double>(correct) / y_true.size();
  return rep;
}

double mean_pairwise_jaccard_distance(
    const std::vector<std::vector<std::uint8_t>>& masks) {
  const std::size_t n = masks.size();
  if (n < 2) return 0.0;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      assert(masks[i].size() == masks[j].size());
      long inter = 0, uni = 0;
      for (std::size_t k = 0; k < masks[i].size(); ++k) {
        const bool a = masks[i][k] != 0, b = masks[j][k] != 0;
        inter += (a && b);
        uni += (a || b);
      }
      assert(uni > 0 && "all-zero mask pair: repair invariant violated");
      sum += 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double mean_distance_to_centroid(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  if (n < 2) return 0.0;
  const std::size_t d = rows[0].size();
  std::vector<double> centroid(d, 0.0);
  for (const auto& r : rows) {
    assert(r.size() == d);
    for (std::size_t k = 0; k < d; ++k) centroid[k] += r[k];
  }
  for (auto& c : centroid) c /= static_cast<double>(n);
  double sum = 0.0;
  for (const auto& r : rows) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = r[k] - centroid[k];
      sq += diff * diff;
    }
    sum += std::sqrt(sq);
  }
  return sum / static_cast<double>(n);
}

double mean_pairwise_boolean_disagreement(
    const std::vector<std::vector<std::uint8_t>>& rows) {
  const std::size_t n = rows.size();
  if (n < 2) return 0.0;
  const std::size_t d = rows[0].size();
  if (d == 0) return 0.0;
  double flag_sum = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double disagree = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        disagree += (rows[i][k] != rows[j][k]) ? 1.0 : 0.0;
        ++pairs;
      }
    }
    flag_sum += disagree / static_cast<double>(pairs);
  }
  return flag_sum / static_cast<double>(d);
}

double target_fitness(double f_star) {
  return f_star - 0.01 * std::fabs(f_star);
}

TargetCost cost_to_target(std::span<const double> best_so_far,
                          std::span<const double> wall_clock_cum) {
  if (best_so_far.empty())
    throw std::invalid_argument("cost_to_target: empty trajectory");
  if (best_so_far.size() != wall_clock_cum.size())
    throw std::invalid_argument("cost_to_target: length mismatch");
  TargetCost tc;
  tc.f_star = best_so_far.back();
  const double target = target_fitness(tc.f_star);
  std::size_t g = 0;
  while (g + 1 < best_so_far.size() && best_so_far[g] < target) ++g;
  tc.gtt = static_cast<int>(g);
  tc.ttt = wall_clock_cum[g];
  return tc;
}

}  // namespace evossl
