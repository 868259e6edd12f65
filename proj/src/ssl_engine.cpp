#include "evossl/ssl_engine.hpp"

#include <algorithm>
#include <stdexcept>

#include "evossl/metrics.hpp"
#include "evossl/rng.hpp"

namespace evossl {

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::max_iters: return "max_iters";
    case StopReason::no_acceptance: return "no_acceptance";
    case StopReason::pool_exhausted: return "pool_exhausted";
  }
  return "unknown";
}

nlohmann::json iteration_log_to_json(const IterationLog& log) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cls, count] : log.accepted_per_class)
    per_class[std::to_string(cls)] = count;
  return {{"t", log.t},
          {"tau_t", log.tau_t},
          {"candidates_after_each_filter",
           {{"confidence", log.after_confidence},
            {"margin", log.after_margin},
            {"veto", log.after_veto}}},
          {"accepted_per_class", per_class}};
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X,
                            const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return out;
}

std::vector<int> select_labels(const std::vector<int>& labels,
                               const std::vector<int>& rows) {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = labels[rows[i]];
  return out;
}

std::vector<int> predict_fused(const LinearClassifier& m1,
                               const LinearClassifier& m2,
                               const Eigen::MatrixXd& X1,
                               const Eigen::MatrixXd& X2) {
  const Eigen::MatrixXd P = 0.5 * (m1.predict_proba(X1) + m2.predict_proba(X2));
  std::vector<int> out(P.rows());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < P.cols(); ++c)
      if (P(i, c) > P(i, best)) best = static_cast<int>(c);
    out[i] = best;
  }
  return out;
}

std::vector<int> predict_final(const SslOutcome& out, const Eigen::MatrixXd& X) {
  return predict_fused(out.model1, out.model2, out.view1.apply(X),
                       out.view2.apply(X));
}

namespace {

struct Candidate {
  int row = 0;        // dataset row index
  int label = 0;      // assigned pseudo-label
  double confidence = 0.0;
};

double fused_probe_score(const Dataset& ds, const LinearClassifier& m1,
                         const LinearClassifier& m2,
                         const Eigen::MatrixXd& probe1,
                         const Eigen::MatrixXd& probe2,
                         const std::vector<int>& probe_labels) {
  if (probe_labels.empty()) return 0.0;
  const std::vector<int> pred = predict_fused(m1, m2, probe1, probe2);
  return score_classification(probe_labels, pred, ds.num_classes).macro_f1;
}

}  // namespace

SslOutcome run_ssl_core(const Dataset& ds, const LabeledResample& rs,
                        const ViewTransform& v1, const ViewTransform& v2,
                        const SslPolicy& policy,
                        const std::vector<int>& probe_idx, std::uint64_t seed) {
  // Probe isolation: probe rows must never be trainable.
  for (int p : probe_idx) {
    if (std::binary_search(rs.L0_idx.begin(), rs.L0_idx.end(), p) ||
        std::binary_search(rs.U0_idx.begin(), rs.U0_idx.end(), p))
      throw std::logic_error("run_ssl: probe index " + std::to_string(p) +
                             " present in the SSL pool");
  }

  const Eigen::MatrixXd X1 = v1.apply(ds.features);
  const Eigen::MatrixXd X2 = v2.apply(ds.features);
  const Eigen::MatrixXd probe1 = select_rows(X1, probe_idx);
  const Eigen::MatrixXd probe2 = select_rows(X2, probe_idx);
  const std::vector<int> probe_labels = select_labels(ds.labels, probe_idx);

  std::vector<int> L_rows = rs.L0_idx;
  std::vector<int> L_labels = select_labels(ds.labels, rs.L0_idx);
  std::vector<int> U_rows = rs.U0_idx;  // kept sorted ascending

  SslOutcome out;
  out.view1 = v1;
  out.view2 = v2;

  const long cap = policy.per_class_cap;
  bool stopped = false;
  for (int t = 0; t < policy.max_iters && !stopped; ++t) {
    const Eigen::MatrixXd L1 = select_rows(X1, L_rows);
    const Eigen::MatrixXd L2 = select_rows(X2, L_rows);
    const LinearClassifier h1 = fit_logistic(
        L1, L_labels, ds.num_classes, policy.theta, hash_mix({seed, 1ULL, static_cast<std::uint64_t>(t)}));
    const LinearClassifier h2 = fit_logistic(
        L2, L_labels, ds.num_classes, policy.theta, hash_mix({seed, 2ULL, static_cast<std::uint64_t>(t)}));
    if (t == 0)
      out.probe_before =
          fused_probe_score(ds, h1, h2, probe1, probe2, probe_labels);

    const double tau_t = policy.threshold_at(t);
    IterationLog log;
    log.t = t;
    log.tau_t = tau_t;

    std::vector<Candidate> candidates;
    if (!U_rows.empty()) {
      const Eigen::MatrixXd P1 = h1.predict_proba(select_rows(X1, U_rows));
      const Eigen::MatrixXd P2 = h2.predict_proba(select_rows(X2, U_rows));
      for (std::size_t i = 0; i < U_rows.size(); ++i) {
        auto top2 = [&](const Eigen::MatrixXd& P, int* arg, double* top,
                        double* second) {
          *arg = 0;
          for (Eigen::Index c = 1; c < P.cols(); ++c)
            if (P(static_cast<Eigen::Index>(i), c) >
                P(static_cast<Eigen::Index>(i), *arg))
              *arg = static_cast<int>(c);
          *top = P(static_cast<Eigen::Index>(i), *arg);
          *second = 0.0;
          for (Eigen::Index c = 0; c < P.cols(); ++c) {
            if (static_cast<int>(c) == *arg) continue;
            *second = std::max(*second, P(static_cast<Eigen::Index>(i), c));
          }
        };
        int arg1, arg2;
        double top1, sec1, top2v, sec2;
        top2(P1, &arg1, &top1, &sec1);
        top2(P2, &arg2, &top2v, &sec2);

        const double conf = std::max(top1, top2v);
        if (conf < tau_t) continue;
        log.after_confidence++;
        if (policy.margin > 0.0) {
          if (std::max(top1 - sec1, top2v - sec2) < policy.margin) continue;
        }
        log.after_margin++;
        if (policy.veto && arg1 != arg2) continue;
        log.after_veto++;

        Candidate c;
        c.row = U_rows[i];
        // Agreed label under veto; otherwise the more confident view's label
        // (view 1 wins exact ties).
        c.label = policy.veto ? arg1 : (top1 >= top2v ? arg1 : arg2);
        c.confidence = conf;
        candidates.push_back(c);
      }
    }

    // Per-class ranking by descending confidence, ties to the lower row.
    std::map<int, std::vector<Candidate>> by_class;
    for (const auto& c : candidates) by_class[c.label].push_back(c);
    std::vector<int> accepted_rows;
    std::vector<int> accepted_labels;
    for (auto& [label, group] : by_class) {
      std::stable_sort(group.begin(), group.end(),
                       [](const Candidate& a, const Candidate& b) {
                         if (a.confidence != b.confidence)
                           return a.confidence > b.confidence;
                         return a.row < b.row;
                       });
      const std::size_t take =
          cap < 0 ? group.size()
                  : std::min<std::size_t>(group.size(),
                                          static_cast<std::size_t>(cap));
      for (std::size_t i = 0; i < take; ++i) {
        accepted_rows.push_back(group[i].row);
        accepted_labels.push_back(group[i].label);
        log.accepted_per_class[label]++;
      }
    }

    out.iterations_run = t + 1;
    out.per_iter_added.push_back(static_cast<long>(accepted_rows.size()));
    out.iteration_logs.push_back(std::move(log));

    if (accepted_rows.empty()) {
      out.stop_reason = StopReason::no_acceptance;
      stopped = true;
    } else {
      for (std::size_t i = 0; i < accepted_rows.size(); ++i) {
        L_rows.push_back(accepted_rows[i]);
        L_labels.push_back(accepted_labels[i]);
      }
      std::vector<int> remaining;
      remaining.reserve(U_rows.size() - accepted_rows.size());
      std::sort(accepted_rows.begin(), accepted_rows.end());
      for (int u : U_rows)
        if (!std::binary_search(accepted_rows.begin(), accepted_rows.end(), u))
          remaining.push_back(u);
      U_rows = std::move(remaining);
      if (U_rows.empty()) {
        out.stop_reason = StopReason::pool_exhausted;
        stopped = true;
      }
    }
  }
  if (!stopped) out.stop_reason = StopReason::max_iters;

  out.L_final_size = static_cast<long>(L_rows.size());
  out.pseudo_added = out.L_final_size - static_cast<long>(rs.L0_idx.size());

  // Final models are trained on the completed labeled set.
  out.model1 = fit_logistic(select_rows(X1, L_rows), L_labels, ds.num_classes,
                            policy.theta, hash_mix({seed, 1ULL, 0xf17a1ULL}));
  out.model2 = fit_logistic(select_rows(X2, L_rows), L_labels, ds.num_classes,
                            policy.theta, hash_mix({seed, 2ULL, 0xf17a1ULL}));
  out.probe_after = fused_probe_score(ds, out.model1, out.model2, probe1,
                                      probe2, probe_labels);
  return out;
}

SslOutcome run_ssl(const Dataset& ds, const LabeledResample& rs,
                   const ViewGenotype& a, const PolicyGenotype& b,
                   const std::vector<int>& probe_idx, std::uint64_t seed) {
  std::vector<int> pool_rows = rs.L0_idx;
  pool_rows.insert(pool_rows.end(), rs.U0_idx.begin(), rs.U0_idx.end());
  std::sort(pool_rows.begin(), pool_rows.end());
  const Eigen::MatrixXd X_fit = select_rows(ds.features, pool_rows);
  auto [v1, v2] = build_views(a, X_fit);
  return run_ssl_core(ds, rs, v1, v2, policy_phenotype(b), probe_idx, seed);
}

}  // namespace evossl
