#include "evossl/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "evossl/rng.hpp"

namespace evossl {

namespace {

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "?" || cell == "NA" || cell == "nan";
}

bool parse_number(const std::string& s, double* out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, *out);
  return ec == std::errc() && ptr == end;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

// One CSV record, handling quoted fields and embedded commas.
std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
  std::vector<std::string> cells;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (in_quotes)
    throw std::runtime_error("CSV parse error at line " +
                             std::to_string(line_no) + ": unterminated quote");
  cells.push_back(trim(cur));
  return cells;
}

}  // namespace

void Standardizer::fit(const Eigen::MatrixXd& X, const std::vector<int>& rows) {
  if (rows.empty()) throw std::invalid_argument("Standardizer: no fit rows");
  const Eigen::Index d = X.cols();
  mean_ = Eigen::VectorXd::Zero(d);
  std_ = Eigen::VectorXd::Zero(d);
  for (int r : rows) mean_ += X.row(r).transpose();
  mean_ /= static_cast<double>(rows.size());
  for (int r : rows)
    std_ += (X.row(r).transpose() - mean_).array().square().matrix();
  std_ = (std_ / static_cast<double>(rows.size())).array().sqrt();
}

void Standardizer::fit_all(const Eigen::MatrixXd& X) {
  std::vector<int> rows(X.rows());
  std::iota(rows.begin(), rows.end(), 0);
  fit(X, rows);
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean_.size())
    throw std::invalid_argument("Standardizer: dimension mismatch");
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (std_[j] > 0.0)
      out.col(j) = (X.col(j).array() - mean_[j]) / std_[j];
    else
      out.col(j).setZero();  // zero-variance column convention
  }
  return out;
}

RawTable parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);
  RawTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line, line_no);
    if (table.columns.empty()) {
      table.columns = cells;
    } else {
      if (cells.size() != table.columns.size())
        throw std::runtime_error(
            "CSV parse error at line " + std::to_string(line_no) + ": got " +
            std::to_string(cells.size()) + " fields, expected " +
            std::to_string(table.columns.size()));
      table.rows.push_back(std::move(cells));
    }
  }
  if (table.columns.empty())
    throw std::runtime_error("CSV parse error: no header row in " + path);
  return table;
}

RawTable parse_arff(const std::string& path, std::string* relation_name) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ARFF file: " + path);
  RawTable table;
  std::string line;
  bool in_data = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t[0] == '%') continue;
    if (!in_data) {
      std::string lower = t;
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (lower.rfind("@relation", 0) == 0) {
        if (relation_name) *relation_name = strip_quotes(trim(t.substr(9)));
      } else if (lower.rfind("@attribute", 0) == 0) {
        std::string rest = trim(t.substr(10));
        std::string name;
        if (!rest.empty() && (rest[0] == '"' || rest[0] == '\'')) {
          const char q = rest[0];
          const auto close = rest.find(q, 1);
          if (close == std::string::npos)
            throw std::runtime_error("ARFF parse error at line " +
                                     std::to_string(line_no));
          name = rest.substr(1, close - 1);
          rest = trim(rest.substr(close + 1));
        } else {
          const auto sp = rest.find_first_of(" \t");
          if (sp == std::string::npos)
            throw std::runtime_error("ARFF parse error at line " +
                                     std::to_string(line_no));
          name = rest.substr(0, sp);
          rest = trim(rest.substr(sp));
        }
        std::string type_lower = rest;
        std::transform(type_lower.begin(), type_lower.end(), type_lower.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        const bool nominal = !rest.empty() && rest[0] == '{';
        const bool numeric = type_lower == "numeric" || type_lower == "real" ||
                             type_lower == "integer";
        if (!nominal && !numeric)
          throw std::runtime_error("unsupported ARFF attribute type '" + rest +
                                   "' at line " + std::to_string(line_no));
        table.columns.push_back(name);
      } else if (lower.rfind("@data", 0) == 0) {
        in_data = true;
      }
      continue;
    }
    if (t[0] == '{')
      throw std::runtime_error("unsupported ARFF sparse row at line " +
                               std::to_string(line_no));
    auto cells = split_csv_line(t, line_no);
    for (auto& c : cells) {
      c = strip_quotes(c);
      if (c == "?") c.clear();
    }
    if (cells.size() != table.columns.size())
      throw std::runtime_error("ARFF parse error at line " +
                               std::to_string(line_no) + ": field count");
    table.rows.push_back(std::move(cells));
  }
  if (table.columns.empty())
    throw std::runtime_error("ARFF parse error: no attributes in " + path);
  return table;
}

Dataset build_dataset(const std::string& name, const RawTable& table,
                      const std::string& label_column) {
  const auto label_it =
      std::find(table.columns.begin(), table.columns.end(), label_column);
  if (label_it == table.columns.end())
    throw std::runtime_error("label column '" + label_column + "' not found");
  const std::size_t label_col =
      static_cast<std::size_t>(label_it - table.columns.begin());

  // Keep only rows with a label.
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    if (!is_missing(table.rows[r][label_col])) kept.push_back(r);
  if (kept.empty()) throw std::runtime_error("dataset has no labeled rows");

  // Label mapping: numeric values sort numerically, otherwise lexically.
  std::vector<std::string> label_values;
  for (std::size_t r : kept) label_values.push_back(table.rows[r][label_col]);
  std::vector<std::string> distinct = label_values;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());
  bool all_numeric_labels = true;
  for (const auto& v : distinct) {
    double tmp;
    if (!parse_number(v, &tmp)) {
      all_numeric_labels = false;
      break;
    }
  }
  if (all_numeric_labels) {
    std::sort(distinct.begin(), distinct.end(),
              [](const std::string& a, const std::string& b) {
                double x, y;
                parse_number(a, &x);
                parse_number(b, &y);
                if (x != y) return x < y;
                return a < b;
              });
  }
  if (distinct.size() < 2)
    throw std::runtime_error("label column '" + label_column +
                             "' has a single class");
  std::map<std::string, int> label_map;
  for (std::size_t i = 0; i < distinct.size(); ++i)
    label_map[distinct[i]] = static_cast<int>(i);

  Dataset ds;
  ds.name = name;
  ds.num_classes = static_cast<int>(distinct.size());
  for (std::size_t r : kept)
    ds.labels.push_back(label_map.at(table.rows[r][label_col]));

  // Classify feature columns: numeric iff every non-missing cell parses.
  const std::size_t n = kept.size();
  struct ColPlan {
    std::size_t src;
    bool numeric;
    std::vector<std::string> levels;  // nominal only
  };
  std::vector<ColPlan> plans;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c == label_col) continue;
    ColPlan plan{c, true, {}};
    std::set<std::string> levels;
    for (std::size_t r : kept) {
      const std::string& cell = table.rows[r][c];
      if (is_missing(cell)) continue;
      double tmp;
      if (!parse_number(cell, &tmp)) plan.numeric = false;
      levels.insert(cell);
    }
    if (!plan.numeric) plan.levels.assign(levels.begin(), levels.end());
    plans.push_back(std::move(plan));
  }

  std::size_t out_dim = 0;
  for (const auto& p : plans) out_dim += p.numeric ? 1 : p.levels.size();
  Eigen::MatrixXd X(n, out_dim);
  std::size_t col_out = 0;
  for (const auto& p : plans) {
    if (p.numeric) {
      double sum = 0.0;
      long cnt = 0;
      std::vector<double> vals(n, std::numeric_limits<double>::quiet_NaN());
      for (std::size_t i = 0; i < n; ++i) {
        const std::string& cell = table.rows[kept[i]][p.src];
        if (is_missing(cell)) continue;
        parse_number(cell, &vals[i]);
        sum += vals[i];
        ++cnt;
      }
      const double mean = cnt > 0 ? sum / cnt : 0.0;
      for (std::size_t i = 0; i < n; ++i)
        X(i, col_out) = std::isnan(vals[i]) ? mean : vals[i];
      ds.feature_names.push_back(table.columns[p.src]);
      ++col_out;
    } else {
      // One-hot; missing rows get each level's frequency (mean imputation).
      std::vector<double> freq(p.levels.size(), 0.0);
      long cnt = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::string& cell = table.rows[kept[i]][p.src];
        if (is_missing(cell)) continue;
        ++cnt;
        const auto it = std::find(p.levels.begin(), p.levels.end(), cell);
        freq[static_cast<std::size_t>(it - p.levels.begin())] += 1.0;
      }
      for (auto& f : freq) f = cnt > 0 ? f / cnt : 0.0;
      for (std::size_t l = 0; l < p.levels.size(); ++l) {
        for (std::size_t i = 0; i < n; ++i) {
          const std::string& cell = table.rows[kept[i]][p.src];
          if (is_missing(cell))
            X(i, col_out) = freq[l];
          else
            X(i, col_out) = (cell == p.levels[l]) ? 1.0 : 0.0;
        }
        ds.feature_names.push_back(table.columns[p.src] + "=" + p.levels[l]);
        ++col_out;
      }
    }
  }

  Standardizer scaler;
  scaler.fit_all(X);
  ds.features = scaler.transform(X);
  return ds;
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  const RawTable table = parse_csv(path);
  std::string name = path;
  const auto slash = name.find_last_of("/\\");
  if (slash != std::string::npos) name = name.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return build_dataset(name, table, label_column);
}

namespace {

std::uint64_t string_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

// Apportion n over shares exactly (largest remainder).
std::vector<long> apportion(long n, const std::vector<double>& shares) {
  std::vector<long> out(shares.size(), 0);
  std::vector<double> rem(shares.size(), 0.0);
  long assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const double ideal = shares[i] * static_cast<double>(n);
    out[i] = static_cast<long>(std::floor(ideal));
    rem[i] = ideal - static_cast<double>(out[i]);
    assigned += out[i];
  }
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (long k = 0; k < n - assigned; ++k) out[order[k % order.size()]] += 1;
  return out;
}

}  // namespace

SplitPlan make_split(const Dataset& ds, double lf, std::int64_t seed,
                     const SplitShares& shares) {
  if (!(lf > 0.0 && lf <= 1.0))
    throw std::invalid_argument("make_split: lf must be in (0,1]");
  const long n = static_cast<long>(ds.rows());
  const int C = ds.num_classes;

  std::vector<std::vector<int>> by_class(C);
  for (long i = 0; i < n; ++i) by_class[ds.labels[i]].push_back(static_cast<int>(i));
  for (int c = 0; c < C; ++c)
    if (by_class[c].size() < 4)
      throw std::runtime_error("make_split: stratification infeasible, class " +
                               std::to_string(c) + " has only " +
                               std::to_string(by_class[c].size()) +
                               " samples (need >= 4)");

  const std::vector<long> totals =
      apportion(n, {shares.test, shares.val, shares.probe,
                    1.0 - shares.test - shares.val - shares.probe});
  const std::array<long, 3> part_target = {totals[0], totals[1], totals[2]};
  const std::array<double, 3> part_share = {shares.test, shares.val,
                                            shares.probe};
  for (int p = 0; p < 3; ++p)
    if (part_target[p] < C)
      throw std::runtime_error(
          "make_split: stratification infeasible, split part smaller than "
          "class count");

  Rng rng(hash_mix({static_cast<std::uint64_t>(seed), string_hash(ds.name),
                    std::bit_cast<std::uint64_t>(lf), 0x5117ULL}));
  for (auto& cls : by_class) rng.shuffle(cls);

  // Per part: one sample per class first, then greedy toward the exact
  // global target following each class's ideal share.
  std::vector<long> used(C, 0);
  std::array<std::vector<long>, 3> alloc;
  for (int p = 0; p < 3; ++p) {
    alloc[p].assign(C, 1);
    long total = C;
    const int parts_after = 2 - p;  // reserve one slot per remaining part
    std::vector<double> ideal(C);
    for (int c = 0; c < C; ++c)
      ideal[c] = part_share[p] * static_cast<double>(by_class[c].size());
    while (total < part_target[p]) {
      int best = -1;
      double best_gap = -1e300;
      for (int c = 0; c < C; ++c) {
        const long cap = static_cast<long>(by_class[c].size()) - used[c] -
                         alloc[p][c] - parts_after;
        if (cap <= 0) continue;
        const double gap = ideal[c] - static_cast<double>(alloc[p][c]);
        if (gap > best_gap) {
          best_gap = gap;
          best = c;
        }
      }
      if (best < 0)
        throw std::runtime_error("make_split: stratification infeasible");
      alloc[p][best] += 1;
      ++total;
    }
    for (int c = 0; c < C; ++c) used[c] += alloc[p][c];
  }

  SplitPlan plan;
  plan.lf = lf;
  plan.seed = seed;
  for (int c = 0; c < C; ++c) {
    std::size_t cursor = 0;
    for (long k = 0; k < alloc[0][c]; ++k) plan.test_idx.push_back(by_class[c][cursor++]);
    for (long k = 0; k < alloc[1][c]; ++k) plan.val_idx.push_back(by_class[c][cursor++]);
    for (long k = 0; k < alloc[2][c]; ++k) plan.probe_idx.push_back(by_class[c][cursor++]);
    for (; cursor < by_class[c].size(); ++cursor)
      plan.pool_idx.push_back(by_class[c][cursor]);
  }
  std::sort(plan.test_idx.begin(), plan.test_idx.end());
  std::sort(plan.val_idx.begin(), plan.val_idx.end());
  std::sort(plan.probe_idx.begin(), plan.probe_idx.end());
  std::sort(plan.pool_idx.begin(), plan.pool_idx.end());
  return plan;
}

LabeledResample resample_labeled(const SplitPlan& plan, const Dataset& ds,
                                 int k) {
  if (k < 0) throw std::invalid_argument("resample_labeled: k < 0");
  const long pool_n = static_cast<long>(plan.pool_idx.size());
  if (pool_n == 0) throw std::runtime_error("resample_labeled: empty pool");
  const int C = ds.num_classes;

  std::vector<std::vector<int>> by_class(C);
  for (int idx : plan.pool_idx) by_class[ds.labels[idx]].push_back(idx);
  std::vector<int> present;
  for (int c = 0; c < C; ++c)
    if (!by_class[c].empty()) present.push_back(c);

  long target = std::max<long>(
      C, std::lround(plan.lf * static_cast<double>(pool_n)));
  target = std::min(target, pool_n);
  target = std::max<long>(target, static_cast<long>(present.size()));

  Rng rng(hash_mix({static_cast<std::uint64_t>(plan.seed),
                    static_cast<std::uint64_t>(k), 0x4c30ULL}));
  for (int c : present) rng.shuffle(by_class[c]);

  // One per present class, remainder proportional with capacity caps.
  std::vector<long> take(C, 0);
  for (int c : present) take[c] = 1;
  long total = static_cast<long>(present.size());
  std::vector<double> ideal(C, 0.0);
  for (int c : present)
    ideal[c] = static_cast<double>(by_class[c].size()) /
               static_cast<double>(pool_n) * static_cast<double>(target);
  while (total < target) {
    int best = -1;
    double best_gap = -1e300;
    for (int c : present) {
      if (take[c] >= static_cast<long>(by_class[c].size())) continue;
      const double gap = ideal[c] - static_cast<double>(take[c]);
      if (gap > best_gap) {
        best_gap = gap;
        best = c;
      }
    }
    if (best < 0) break;  // pool exhausted
    take[best] += 1;
    ++total;
  }

  LabeledResample rs;
  rs.k = k;
  for (int c : present) {
    for (long i = 0; i < take[c]; ++i) rs.L0_idx.push_back(by_class[c][i]);
    for (std::size_t i = take[c]; i < by_class[c].size(); ++i)
      rs.U0_idx.push_back(by_class[c][i]);
  }
  std::sort(rs.L0_idx.begin(), rs.L0_idx.end());
  std::sort(rs.U0_idx.begin(), rs.U0_idx.end());
  return rs;
}

std::string split_hash(const Dataset& ds, const SplitPlan& plan) {
  std::uint64_t h = hash_mix({string_hash(ds.name),
                              std::bit_cast<std::uint64_t>(plan.lf),
                              static_cast<std::uint64_t>(plan.seed)});
  auto fold = [&h](const std::vector<int>& v) {
    for (int x : v) h = splitmix64(h ^ static_cast<std::uint64_t>(x));
  };
  fold(plan.test_idx);
  fold(plan.val_idx);
  fold(plan.probe_idx);
  fold(plan.pool_idx);
  std::ostringstream oss;
  oss << std::hex << h;
  return oss.str();
}

}  // namespace evossl
