#pragma once

// Independent oracles used by the unit and acceptance suites. These stay
// deliberately naive (brute force, full enumeration) and share no code with
// the library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

// MacroF1 via an explicit confusion matrix.
inline double brute_macro_f1(const std::vector<int>& y_true,
                             const std::vector<int>& y_pred, int C) {
  std::vector<std::vector<long>> cm(C, std::vector<long>(C, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) cm[y_true[i]][y_pred[i]]++;
  double sum = 0.0;
  for (int c = 0; c < C; ++c) {
    long tp = cm[c][c], fp = 0, fn = 0;
    for (int o = 0; o < C; ++o) {
      if (o == c) continue;
      fp += cm[o][c];
      fn += cm[c][o];
    }
    const double prec = (tp + fp) > 0 ? double(tp) / double(tp + fp) : 0.0;
    const double rec = (tp + fn) > 0 ? double(tp) / double(tp + fn) : 0.0;
    sum += (prec + rec) > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
  }
  return sum / C;
}

inline double brute_accuracy(const std::vector<int>& y_true,
                             const std::vector<int>& y_pred) {
  long correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i)
    correct += y_true[i] == y_pred[i];
  return y_true.empty() ? 0.0 : double(correct) / double(y_true.size());
}

// Two-sided signed-rank p-value by enumerating all 2^n sign assignments.
// Zero differences dropped, average ranks for ties. n must stay small.
inline double wilcoxon_enum_p(const std::vector<double>& x,
                              const std::vector<double>& y) {
  std::vector<double> absd;
  std::vector<int> sign;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d == 0.0) continue;
    absd.push_back(std::fabs(d));
    sign.push_back(d > 0 ? 1 : -1);
  }
  const std::size_t n = absd.size();
  if (n == 0) return 1.0;

  // Average ranks.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return absd[a] < absd[b]; });
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && absd[order[j + 1]] == absd[order[i]]) ++j;
    const double avg = (double(i + 1) + double(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }

  double w_obs = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (sign[k] > 0) w_obs += rank[k];

  long le = 0, ge = 0;
  const std::uint64_t total = 1ULL << n;
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    double w = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (bits & (1ULL << k)) w += rank[k];
    if (w <= w_obs + 1e-12) ++le;
    if (w >= w_obs - 1e-12) ++ge;
  }
  const double tail = double(std::min(le, ge)) / double(total);
  return std::min(1.0, 2.0 * tail);
}

struct Splitmix {
  std::uint64_t state;
  explicit Splitmix(std::uint64_t s) : state(s) {}
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }
  int below(int n) { return int(next() % std::uint64_t(n)); }
};

}  // namespace oracle
