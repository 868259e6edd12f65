#include "evossl/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "evossl/metrics.hpp"
#include "evossl/policy.hpp"
#include "evossl/rng.hpp"
#include "evossl/ssl_engine.hpp"

namespace evossl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ViewGenotype mask_genotype(int d, const std::vector<int>& cols) {
  ViewGenotype g;
  g.m1.assign(d, 0);
  g.m2.assign(d, 0);
  for (int c : cols) {
    g.m1[c] = 1;
    g.m2[c] = 1;
  }
  return g;
}

ViewTransform identity_view(const Dataset& ds) {
  std::vector<int> all(ds.cols());
  std::iota(all.begin(), all.end(), 0);
  return ViewTransform::fit(mask_genotype(static_cast<int>(ds.cols()), all), 1,
                            ds.features);
}

RunSummary base_summary(const std::string& method, const Dataset& ds,
                        const SplitPlan& plan) {
  RunSummary s;
  s.method = method;
  s.dataset = ds.name;
  s.lf = plan.lf;
  s.seed = plan.seed;
  s.num_classes = ds.num_classes;
  s.split_hash = split_hash(ds, plan);
  return s;
}

void score_outcome(const Dataset& ds, const SplitPlan& plan,
                   const SslOutcome& out, RunSummary* s) {
  const std::vector<int> test_pred =
      predict_final(out, select_rows(ds.features, plan.test_idx));
  const ScoreReport test_rep = score_classification(
      select_labels(ds.labels, plan.test_idx), test_pred, ds.num_classes);
  s->test_macro_f1 = test_rep.macro_f1;
  s->test_accuracy = test_rep.accuracy;
  const std::vector<int> val_pred =
      predict_final(out, select_rows(ds.features, plan.val_idx));
  s->val_macro_f1 =
      score_classification(select_labels(ds.labels, plan.val_idx), val_pred,
                           ds.num_classes)
          .macro_f1;
  s->probe_drop = probe_drop(out.probe_before, out.probe_after);
  s->pseudo_added = static_cast<double>(out.pseudo_added);
  s->optimism = val_optimism(s->val_macro_f1, s->test_macro_f1);
}

}  // namespace

RunSummary run_self_training(const Dataset& ds, const SplitPlan& plan,
                             const LabeledResample& rs,
                             const BaselineConfig& cfg) {
  const auto start = Clock::now();
  const ViewTransform id = identity_view(ds);
  SslPolicy policy;
  policy.theta = cfg.theta;
  policy.tau0 = cfg.tau_fixed;
  policy.tau_min = cfg.tau_fixed;
  policy.dtau = 0.0;
  policy.per_class_cap = -1;
  policy.margin = 0.0;
  policy.veto = false;
  policy.max_iters = cfg.max_iters;

  const SslOutcome out =
      run_ssl_core(ds, rs, id, id, policy, plan.probe_idx,
                   hash_mix({static_cast<std::uint64_t>(plan.seed), 0x57ULL}));
  RunSummary s = base_summary("st", ds, plan);
  score_outcome(ds, plan, out, &s);
  s.duration_s = seconds_since(start);
  return s;
}

RunSummary run_cotraining(const Dataset& ds, const SplitPlan& plan,
                          const LabeledResample& rs,
                          const BaselineConfig& cfg) {
  const int d = static_cast<int>(ds.cols());
  if (d < 2) {
    RunSummary s = run_self_training(ds, plan, rs, cfg);
    s.method = "hco";
    s.degenerate = true;
    return s;
  }
  const auto start = Clock::now();

  // Seeded random split into two feature halves.
  std::vector<int> cols(d);
  std::iota(cols.begin(), cols.end(), 0);
  Rng rng(hash_mix({static_cast<std::uint64_t>(plan.seed), 0xc07ULL}));
  rng.shuffle(cols);
  const int half = (d + 1) / 2;
  const std::vector<int> cols1(cols.begin(), cols.begin() + half);
  const std::vector<int> cols2(cols.begin() + half, cols.end());
  const ViewTransform v1 =
      ViewTransform::fit(mask_genotype(d, cols1), 1, ds.features);
  const ViewTransform v2 =
      ViewTransform::fit(mask_genotype(d, cols2), 1, ds.features);

  const Eigen::MatrixXd X1 = v1.apply(ds.features);
  const Eigen::MatrixXd X2 = v2.apply(ds.features);

  std::vector<int> L1 = rs.L0_idx, L2 = rs.L0_idx;
  std::vector<int> y1 = select_labels(ds.labels, rs.L0_idx);
  std::vector<int> y2 = y1;
  std::vector<int> U = rs.U0_idx;

  LinearClassifier h1, h2;
  double probe_before = 0.0;
  const Eigen::MatrixXd probe1 = select_rows(X1, plan.probe_idx);
  const Eigen::MatrixXd probe2 = select_rows(X2, plan.probe_idx);
  const std::vector<int> probe_labels = select_labels(ds.labels, plan.probe_idx);

  const std::size_t u0_size = U.size();
  for (int t = 0; t < cfg.max_iters; ++t) {
    h1 = fit_logistic(select_rows(X1, L1), y1, ds.num_classes, cfg.theta,
                      hash_mix({static_cast<std::uint64_t>(plan.seed), 1ULL,
                                static_cast<std::uint64_t>(t)}));
    h2 = fit_logistic(select_rows(X2, L2), y2, ds.num_classes, cfg.theta,
                      hash_mix({static_cast<std::uint64_t>(plan.seed), 2ULL,
                                static_cast<std::uint64_t>(t)}));
    if (t == 0 && !probe_labels.empty()) {
      const std::vector<int> pred = predict_fused(h1, h2, probe1, probe2);
      probe_before =
          score_classification(probe_labels, pred, ds.num_classes).macro_f1;
    }
    if (U.empty()) break;

    // Each view teaches the other: confident predictions of h1 extend L2
    // and vice versa; picked samples leave the shared pool.
    const Eigen::MatrixXd P1 = h1.predict_proba(select_rows(X1, U));
    const Eigen::MatrixXd P2 = h2.predict_proba(select_rows(X2, U));
    std::set<int> picked;
    std::vector<std::pair<int, int>> teach2, teach1;  // (row, label)
    for (std::size_t i = 0; i < U.size(); ++i) {
      int arg1 = 0, arg2 = 0;
      for (int c = 1; c < ds.num_classes; ++c) {
        if (P1(i, c) > P1(i, arg1)) arg1 = c;
        if (P2(i, c) > P2(i, arg2)) arg2 = c;
      }
      if (P1(i, arg1) >= cfg.tau_fixed) {
        teach2.push_back({U[i], arg1});
        picked.insert(U[i]);
      }
      if (P2(i, arg2) >= cfg.tau_fixed) {
        teach1.push_back({U[i], arg2});
        picked.insert(U[i]);
      }
    }
    if (picked.empty()) break;
    for (const auto& [row, label] : teach1) {
      L1.push_back(row);
      y1.push_back(label);
    }
    for (const auto& [row, label] : teach2) {
      L2.push_back(row);
      y2.push_back(label);
    }
    std::vector<int> remaining;
    for (int u : U)
      if (!picked.count(u)) remaining.push_back(u);
    U = std::move(remaining);
  }

  h1 = fit_logistic(select_rows(X1, L1), y1, ds.num_classes, cfg.theta,
                    hash_mix({static_cast<std::uint64_t>(plan.seed), 1ULL,
                              0xf17a1ULL}));
  h2 = fit_logistic(select_rows(X2, L2), y2, ds.num_classes, cfg.theta,
                    hash_mix({static_cast<std::uint64_t>(plan.seed), 2ULL,
                              0xf17a1ULL}));

  RunSummary s = base_summary("hco", ds, plan);
  const std::vector<int> test_pred = predict_fused(
      h1, h2, select_rows(X1, plan.test_idx), select_rows(X2, plan.test_idx));
  const ScoreReport test_rep = score_classification(
      select_labels(ds.labels, plan.test_idx), test_pred, ds.num_classes);
  s.test_macro_f1 = test_rep.macro_f1;
  s.test_accuracy = test_rep.accuracy;
  const std::vector<int> val_pred = predict_fused(
      h1, h2, select_rows(X1, plan.val_idx), select_rows(X2, plan.val_idx));
  s.val_macro_f1 =
      score_classification(select_labels(ds.labels, plan.val_idx), val_pred,
                           ds.num_classes)
          .macro_f1;
  double probe_after = 0.0;
  if (!probe_labels.empty()) {
    const std::vector<int> pred = predict_fused(h1, h2, probe1, probe2);
    probe_after =
        score_classification(probe_labels, pred, ds.num_classes).macro_f1;
  }
  s.probe_drop = probe_drop(probe_before, probe_after);
  s.pseudo_added = static_cast<double>(u0_size - U.size());
  s.optimism = val_optimism(s.val_macro_f1, s.test_macro_f1);
  s.duration_s = seconds_since(start);
  return s;
}

RunSummary run_label_spreading(const Dataset& ds, const SplitPlan& plan,
                               const LabeledResample& rs,
                               const BaselineConfig& cfg) {
  const auto start = Clock::now();

  // Transduction set: L0 u U0 u test.
  std::vector<int> nodes = rs.L0_idx;
  nodes.insert(nodes.end(), rs.U0_idx.begin(), rs.U0_idx.end());
  nodes.insert(nodes.end(), plan.test_idx.begin(), plan.test_idx.end());
  std::sort(nodes.begin(), nodes.end());
  const std::size_t m = nodes.size();
  const int C = ds.num_classes;

  std::vector<int> node_label(m, -1);  // clamp labels for L0 members
  {
    std::set<int> l0(rs.L0_idx.begin(), rs.L0_idx.end());
    for (std::size_t i = 0; i < m; ++i)
      if (l0.count(nodes[i])) node_label[i] = ds.labels[nodes[i]];
  }

  const Eigen::MatrixXd X = select_rows(ds.features, nodes);
  const int k = std::min<int>(cfg.ls_neighbors, static_cast<int>(m) - 1);

  // Directed kNN edges, then symmetrized by union.
  std::vector<std::vector<std::pair<int, double>>> knn(m);  // (j, d2)
  std::vector<double> knn_dists;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::pair<double, int>> dist;
    dist.reserve(m - 1);
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const double d2 = (X.row(i) - X.row(j)).squaredNorm();
      dist.push_back({d2, static_cast<int>(j)});
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int e = 0; e < k; ++e) {
      knn[i].push_back({dist[e].second, dist[e].first});
      knn_dists.push_back(std::sqrt(dist[e].first));
    }
  }
  std::sort(knn_dists.begin(), knn_dists.end());
  double sigma = knn_dists.empty() ? 1.0 : knn_dists[knn_dists.size() / 2];
  if (sigma <= 0.0) sigma = 1.0;
  const double denom = 2.0 * sigma * sigma;

  std::vector<std::map<int, double>> W(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& [j, d2] : knn[i]) {
      const double w = std::exp(-d2 / denom);
      W[i][j] = w;
      W[j][static_cast<int>(i)] = w;
    }
  }
  std::vector<double> degree(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (const auto& [j, w] : W[i]) degree[i] += w;

  // F <- alpha * S * F + (1-alpha) * Y with S = D^-1/2 W D^-1/2.
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(m, C);
  for (std::size_t i = 0; i < m; ++i)
    if (node_label[i] >= 0) Y(i, node_label[i]) = 1.0;
  Eigen::MatrixXd F = Y;
  std::vector<double> dinv_sqrt(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    dinv_sqrt[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;

  for (int it = 0; it < cfg.ls_max_iter; ++it) {
    Eigen::MatrixXd SF = Eigen::MatrixXd::Zero(m, C);
    for (std::size_t i = 0; i < m; ++i) {
      for (const auto& [j, w] : W[i]) {
        const double s = dinv_sqrt[i] * w * dinv_sqrt[j];
        SF.row(i) += s * F.row(j);
      }
    }
    const Eigen::MatrixXd next = cfg.ls_alpha * SF + (1.0 - cfg.ls_alpha) * Y;
    const double change = (next - F).cwiseAbs().maxCoeff();
    F = next;
    if (change < 1e-6) break;
  }

  // Transduced labels; rows that received no mass fall back to class 0.
  bool any_unreached = false;
  std::vector<int> transduced(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const double row_sum = F.row(i).sum();
    if (row_sum <= 0.0) {
      any_unreached = true;
      transduced[i] = 0;
      continue;
    }
    int best = 0;
    for (int c = 1; c < C; ++c)
      if (F(i, c) > F(i, best)) best = c;
    transduced[i] = best;
  }

  std::map<int, std::size_t> node_pos;
  for (std::size_t i = 0; i < m; ++i) node_pos[nodes[i]] = i;

  auto predict_1nn = [&](const Eigen::MatrixXd& Q) {
    std::vector<int> out(Q.rows());
    for (Eigen::Index r = 0; r < Q.rows(); ++r) {
      double best_d = std::numeric_limits<double>::infinity();
      std::size_t best_i = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d2 = (Q.row(r) - X.row(i)).squaredNorm();
        if (d2 < best_d) {
          best_d = d2;
          best_i = i;
        }
      }
      out[r] = transduced[best_i];
    }
    return out;
  };

  RunSummary s = base_summary("ls", ds, plan);
  std::vector<int> test_pred;
  if (cfg.ls_inductive) {
    test_pred = predict_1nn(select_rows(ds.features, plan.test_idx));
  } else {
    for (int idx : plan.test_idx) test_pred.push_back(transduced[node_pos.at(idx)]);
  }
  const ScoreReport test_rep = score_classification(
      select_labels(ds.labels, plan.test_idx), test_pred, ds.num_classes);
  s.test_macro_f1 = test_rep.macro_f1;
  s.test_accuracy = test_rep.accuracy;
  // Validation rows are outside the graph; nearest-node fallback.
  const std::vector<int> val_pred =
      predict_1nn(select_rows(ds.features, plan.val_idx));
  s.val_macro_f1 =
      score_classification(select_labels(ds.labels, plan.val_idx), val_pred,
                           ds.num_classes)
          .macro_f1;
  s.optimism = val_optimism(s.val_macro_f1, s.test_macro_f1);
  s.degenerate = any_unreached;
  s.duration_s = seconds_since(start);
  return s;
}

std::vector<RunSummary> run_supervised_refs(const Dataset& ds,
                                            const SplitPlan& plan,
                                            const LabeledResample& rs,
                                            const BaselineConfig& cfg) {
  const Eigen::MatrixXd XL = select_rows(ds.features, rs.L0_idx);
  const std::vector<int> yL = select_labels(ds.labels, rs.L0_idx);
  const Eigen::MatrixXd Xtest = select_rows(ds.features, plan.test_idx);
  const Eigen::MatrixXd Xval = select_rows(ds.features, plan.val_idx);
  const std::vector<int> ytest = select_labels(ds.labels, plan.test_idx);
  const std::vector<int> yval = select_labels(ds.labels, plan.val_idx);

  std::vector<RunSummary> out;
  for (const bool svm : {false, true}) {
    const auto start = Clock::now();
    LinearClassifier model =
        svm ? fit_linear_svm_reference(
                  XL, yL, ds.num_classes, cfg.svm_c_reg,
                  hash_mix({static_cast<std::uint64_t>(plan.seed), 0x57aULL}))
            : fit_logistic(XL, yL, ds.num_classes, cfg.theta,
                           hash_mix({static_cast<std::uint64_t>(plan.seed),
                                     0x17aULL}));
    RunSummary s = base_summary(svm ? "svm_ref" : "lr_ref", ds, plan);
    const ScoreReport test_rep =
        score_classification(ytest, model.predict(Xtest), ds.num_classes);
    s.test_macro_f1 = test_rep.macro_f1;
    s.test_accuracy = test_rep.accuracy;
    s.val_macro_f1 =
        score_classification(yval, model.predict(Xval), ds.num_classes)
            .macro_f1;
    s.optimism = val_optimism(s.val_macro_f1, s.test_macro_f1);
    s.duration_s = seconds_since(start);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace evossl
