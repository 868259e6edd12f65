#pragma once

// Paired nonparametric testing and the win-count protocol used by the
// reporting layer, plus the quantile helpers shared by tables.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace evossl {

struct WilcoxonResult {
  double statistic = 0.0;  // W+ (sum of ranks of positive differences)
  double p_value = 1.0;
  bool significant = false;
  int n_used = 0;  // pairs remaining after dropping zero differences
};

// Two-sided signed-rank test. Zero differences are dropped, tied absolute
// differences get average ranks. Exact p by counting over the 2^n sign
// assignments (rank-sum DP) for n <= 15, normal approximation with
// tie-corrected variance and continuity correction above that.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x,
                                    std::span<const double> y, double alpha);

// Linear-interpolation quantile (values need not be sorted).
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);
double iqr(std::vector<double> values);

using SeedScores = std::map<std::int64_t, double>;
using MethodScores = std::map<std::string, SeedScores>;
// Keyed by (dataset name, labeled-fraction label).
using CellMap = std::map<std::pair<std::string, std::string>, MethodScores>;

struct WinTable {
  // (dataset, lf) -> candidate methods that beat every baseline there.
  std::map<std::pair<std::string, std::string>, std::vector<std::string>>
      cell_winners;
  // (method, lf) -> number of datasets won.
  std::map<std::pair<std::string, std::string>, int> win_counts;
};

// A candidate wins a (dataset, lf) cell iff for every baseline the paired
// test rejects at alpha/n_comparisons and the candidate's median is greater.
// Seeds must pair exactly across methods; a gap raises std::runtime_error
// naming it.
WinTable count_wins(const CellMap& cells,
                    const std::vector<std::string>& candidates,
                    const std::vector<std::string>& baselines, double alpha,
                    int n_comparisons);

}  // namespace evossl
