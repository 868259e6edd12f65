#include "evossl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evossl {

namespace {

// Ranks of |d| doubled so average ranks stay integral under ties.
struct RankedDiffs {
  std::vector<long> doubled_ranks;  // aligned with diffs
  std::vector<double> diffs;
  std::vector<long> tie_sizes;
};

RankedDiffs rank_absolute(std::span<const double> x, std::span<const double> y) {
  RankedDiffs rd;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d != 0.0) rd.diffs.push_back(d);
  }
  const std::size_t n = rd.diffs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(rd.diffs[a]) < std::fabs(rd.diffs[b]);
  });
  rd.doubled_ranks.resize(n, 0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n &&
           std::fabs(rd.diffs[order[j + 1]]) == std::fabs(rd.diffs[order[i]]))
      ++j;
    // positions i..j (0-based) share rank; doubled average = (i+1) + (j+1)
    const long doubled = static_cast<long>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) rd.doubled_ranks[order[k]] = doubled;
    rd.tie_sizes.push_back(static_cast<long>(j - i + 1));
    i = j + 1;
  }
  return rd;
}

double exact_two_sided_p(const std::vector<long>& doubled_ranks,
                         long doubled_w_plus) {
  // Subset-sum DP over doubled ranks: dist[s] = #sign assignments with
  // doubled W+ == s.
  long total = 0;
  for (long r : doubled_ranks) total += r;
  std::vector<std::uint64_t> dist(static_cast<std::size_t>(total) + 1, 0);
  dist[0] = 1;
  long reach = 0;
  for (long r : doubled_ranks) {
    for (long s = reach; s >= 0; --s) {
      if (dist[s]) dist[s + r] += dist[s];
    }
    reach += r;
  }
  std::uint64_t le = 0, ge = 0, all = 0;
  for (long s = 0; s <= total; ++s) {
    all += dist[s];
    if (s <= doubled_w_plus) le += dist[s];
    if (s >= doubled_w_plus) ge += dist[s];
  }
  const double tail =
      static_cast<double>(std::min(le, ge)) / static_cast<double>(all);
  return std::min(1.0, 2.0 * tail);
}

double normal_two_sided_p(double w_plus, long n,
                          const std::vector<long>& tie_sizes) {
  const double mean = n * (n + 1) / 4.0;
  double var = n * (n + 1) * (2.0 * n + 1) / 24.0;
  for (long t : tie_sizes)
    var -= (static_cast<double>(t) * t * t - t) / 48.0;
  if (var <= 0.0) return 1.0;
  const double num = w_plus - mean;
  double z = 0.0;
  if (std::fabs(num) > 0.5)
    z = (num - (num > 0 ? 0.5 : -0.5)) / std::sqrt(var);
  const double p = std::erfc(std::fabs(z) / std::sqrt(2.0));
  return std::min(1.0, p);
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x,
                                    std::span<const double> y, double alpha) {
  if (x.size() != y.size())
    throw std::invalid_argument("wilcoxon_signed_rank: length mismatch");
  const RankedDiffs rd = rank_absolute(x, y);
  const long n = static_cast<long>(rd.diffs.size());

  WilcoxonResult res;
  res.n_used = static_cast<int>(n);
  if (n == 0) return res;  // all differences zero: p = 1

  long doubled_w_plus = 0;
  for (std::size_t i = 0; i < rd.diffs.size(); ++i)
    if (rd.diffs[i] > 0) doubled_w_plus += rd.doubled_ranks[i];
  res.statistic = doubled_w_plus / 2.0;

  if (n <= 15)
    res.p_value = exact_two_sided_p(rd.doubled_ranks, doubled_w_plus);
  else
    res.p_value = normal_two_sided_p(res.statistic, n, rd.tie_sizes);
  res.significant = res.p_value < alpha;
  return res;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values[0];
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double iqr(std::vector<double> values) {
  const double q3 = quantile(values, 0.75);
  const double q1 = quantile(std::move(values), 0.25);
  return q3 - q1;
}

WinTable count_wins(const CellMap& cells,
                    const std::vector<std::string>& candidates,
                    const std::vector<std::string>& baselines, double alpha,
                    int n_comparisons) {
  if (n_comparisons < 1)
    throw std::invalid_argument("count_wins: n_comparisons < 1");
  const double corrected = alpha / n_comparisons;
  WinTable table;

  for (const auto& [key, methods] : cells) {
    const auto& [dataset, lf] = key;
    for (const auto& cand : candidates) {
      const auto cand_it = methods.find(cand);
      if (cand_it == methods.end()) continue;
      const SeedScores& cs = cand_it->second;

      bool wins_all = true;
      for (const auto& base : baselines) {
        const auto base_it = methods.find(base);
        if (base_it == methods.end())
          throw std::runtime_error("count_wins: baseline '" + base +
                                   "' missing for dataset=" + dataset +
                                   " lf=" + lf);
        const SeedScores& bs = base_it->second;
        std::vector<double> xs, ys;
        for (const auto& [seed, score] : cs) {
          const auto b = bs.find(seed);
          if (b == bs.end())
            throw std::runtime_error(
                "count_wins: unpaired seed " + std::to_string(seed) +
                " (method=" + base + ", dataset=" + dataset + ", lf=" + lf +
                ")");
          xs.push_back(score);
          ys.push_back(b->second);
        }
        if (bs.size() != cs.size())
          throw std::runtime_error("count_wins: unpaired seeds (method=" +
                                   base + " has extras, dataset=" + dataset +
                                   ", lf=" + lf + ")");
        const WilcoxonResult w = wilcoxon_signed_rank(xs, ys, corrected);
        if (!w.significant || !(median(xs) > median(ys))) {
          wins_all = false;
          break;
        }
      }
      if (wins_all) {
        table.cell_winners[key].push_back(cand);
        table.win_counts[{cand, lf}] += 1;
      } else {
        table.win_counts.try_emplace({cand, lf}, 0);
      }
    }
  }
  return table;
}

}  // namespace evossl
