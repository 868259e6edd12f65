#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "evossl/metrics.hpp"
#include "evossl/ssl_engine.hpp"
#include "evossl/synthetic.hpp"

using namespace evossl;

namespace {

struct Fixture {
  Dataset ds;
  SplitPlan plan;
  LabeledResample rs;
};

Fixture make_fixture(int n = 200, double sep = 4.0, double lf = 0.05,
                     std::uint64_t seed = 1) {
  BlobSpec spec;
  spec.n = n;
  spec.dims = 4;
  spec.informative = 2;
  spec.separation = sep;
  spec.seed = seed;
  Fixture f;
  f.ds = make_gaussian_blobs(spec);
  f.plan = make_split(f.ds, lf, static_cast<std::int64_t>(seed));
  f.rs = resample_labeled(f.plan, f.ds, 0);
  return f;
}

ViewGenotype identity_genotype(int d) {
  ViewGenotype g;
  g.m1.assign(d, 1);
  g.m2.assign(d, 1);
  g.k1 = g.k2 = 2;
  g.B1 = g.B2 = 0;
  return g;
}

PolicyGenotype default_policy() {
  PolicyGenotype b;
  b.tau0 = 0.9;
  b.dtau = 0.0;
  b.tau_min = 0.9;
  b.q = 20;
  b.gamma = 0.0;
  b.nu = false;
  b.T = 5;
  return b;
}

}  // namespace

TEST_CASE("empty unlabeled pool stops immediately with supervised models") {
  Fixture f = make_fixture();
  LabeledResample all_labeled;
  all_labeled.L0_idx = f.plan.pool_idx;
  all_labeled.U0_idx = {};

  const SslOutcome out =
      run_ssl(f.ds, all_labeled, identity_genotype(4), default_policy(),
              f.plan.probe_idx, 7);
  CHECK(out.pseudo_added == 0);
  CHECK(out.stop_reason == StopReason::no_acceptance);
  CHECK(out.iterations_run == 1);
  CHECK(out.per_iter_added == std::vector<long>{0});
  CHECK(out.L_final_size == static_cast<long>(f.plan.pool_idx.size()));

  // Final models equal a plain supervised fit on L0.
  const Eigen::MatrixXd XL = select_rows(f.ds.features, all_labeled.L0_idx);
  const std::vector<int> yL = select_labels(f.ds.labels, all_labeled.L0_idx);
  const LinearClassifier direct =
      fit_logistic(XL, yL, f.ds.num_classes, default_policy().theta, 0);
  const Eigen::MatrixXd Xtest = select_rows(f.ds.features, f.plan.test_idx);
  CHECK(direct.predict(Xtest) == predict_final(out, Xtest));
}

TEST_CASE("identical views always pass the agreement veto") {
  Fixture f = make_fixture();
  PolicyGenotype with_veto = default_policy();
  with_veto.nu = true;
  PolicyGenotype without = default_policy();
  const SslOutcome a = run_ssl(f.ds, f.rs, identity_genotype(4), with_veto,
                               f.plan.probe_idx, 7);
  const SslOutcome b = run_ssl(f.ds, f.rs, identity_genotype(4), without,
                               f.plan.probe_idx, 7);
  CHECK(a.pseudo_added == b.pseudo_added);
  CHECK(a.per_iter_added == b.per_iter_added);
  for (const auto& log : a.iteration_logs)
    CHECK(log.after_veto == log.after_margin);
}

TEST_CASE("an unreachable threshold accepts nothing") {
  Fixture f = make_fixture();
  // Heavy regularization parks the posteriors near uniform; verify the
  // premise, then check that a 0.999 threshold filters everything.
  SslPolicy policy = policy_phenotype(default_policy());
  policy.theta.l2 = 10.0;
  policy.tau0 = policy.tau_min = 0.999;
  policy.max_iters = 4;

  const Eigen::MatrixXd XL = select_rows(f.ds.features, f.rs.L0_idx);
  const std::vector<int> yL = select_labels(f.ds.labels, f.rs.L0_idx);
  const LinearClassifier probe_model =
      fit_logistic(XL, yL, f.ds.num_classes, policy.theta, 0);
  const Eigen::MatrixXd P =
      probe_model.predict_proba(select_rows(f.ds.features, f.rs.U0_idx));
  CHECK(P.rowwise().maxCoeff().maxCoeff() < 0.999);

  std::vector<int> all(f.ds.cols());
  std::iota(all.begin(), all.end(), 0);
  auto [v1, v2] = build_views(identity_genotype(4),
                              select_rows(f.ds.features, f.plan.pool_idx));
  const SslOutcome out =
      run_ssl_core(f.ds, f.rs, v1, v2, policy, f.plan.probe_idx, 7);
  CHECK(out.pseudo_added == 0);
  CHECK(out.stop_reason == StopReason::no_acceptance);
}

TEST_CASE("bookkeeping invariants along the loop") {
  Fixture f = make_fixture(300, 2.0, 0.05);
  PolicyGenotype b = default_policy();
  b.tau0 = 0.7;
  b.tau_min = 0.6;
  b.dtau = 0.02;
  b.q = 7;
  b.T = 10;
  const SslOutcome out =
      run_ssl(f.ds, f.rs, identity_genotype(4), b, f.plan.probe_idx, 7);

  CHECK(out.pseudo_added ==
        std::accumulate(out.per_iter_added.begin(), out.per_iter_added.end(), 0L));
  CHECK(out.pseudo_added == out.L_final_size - static_cast<long>(f.rs.L0_idx.size()));
  CHECK(out.pseudo_added <= static_cast<long>(f.rs.U0_idx.size()));
  CHECK(out.iterations_run <= b.T);
  CHECK(out.iterations_run == static_cast<int>(out.per_iter_added.size()));

  for (const auto& log : out.iteration_logs) {
    long accepted = 0;
    for (const auto& [cls, count] : log.accepted_per_class) {
      CHECK(count <= b.q);  // per-class cap
      accepted += count;
    }
    CHECK(accepted <= log.after_veto);       // accepted passed all filters
    CHECK(log.after_veto <= log.after_margin);
    CHECK(log.after_margin <= log.after_confidence);
    CHECK(log.tau_t == doctest::Approx(threshold_at(b, log.t)));
  }
}

TEST_CASE("probe rows inside the pool are rejected") {
  Fixture f = make_fixture();
  LabeledResample bad = f.rs;
  bad.U0_idx.push_back(f.plan.probe_idx.front());
  std::sort(bad.U0_idx.begin(), bad.U0_idx.end());
  CHECK_THROWS_AS(run_ssl(f.ds, bad, identity_genotype(4), default_policy(),
                          f.plan.probe_idx, 7),
                  std::logic_error);
}

TEST_CASE("run_ssl is deterministic") {
  Fixture f = make_fixture(250, 2.5, 0.05);
  PolicyGenotype b = default_policy();
  b.gamma = 0.1;
  b.nu = true;
  const SslOutcome a = run_ssl(f.ds, f.rs, identity_genotype(4), b,
                               f.plan.probe_idx, 99);
  const SslOutcome c = run_ssl(f.ds, f.rs, identity_genotype(4), b,
                               f.plan.probe_idx, 99);
  CHECK(a.pseudo_added == c.pseudo_added);
  CHECK(a.per_iter_added == c.per_iter_added);
  CHECK(a.probe_before == c.probe_before);
  CHECK(a.probe_after == c.probe_after);
  CHECK((a.model1.W - c.model1.W).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("margin filter tightens acceptance") {
  Fixture f = make_fixture(300, 1.5, 0.05);
  PolicyGenotype loose = default_policy();
  loose.tau0 = loose.tau_min = 0.6;
  loose.T = 3;
  PolicyGenotype tight = loose;
  tight.gamma = 0.45;
  const SslOutcome a = run_ssl(f.ds, f.rs, identity_genotype(4), loose,
                               f.plan.probe_idx, 7);
  const SslOutcome b = run_ssl(f.ds, f.rs, identity_genotype(4), tight,
                               f.plan.probe_idx, 7);
  CHECK(b.pseudo_added <= a.pseudo_added);
  for (const auto& log : b.iteration_logs)
    CHECK(log.after_margin <= log.after_confidence);
}

TEST_CASE("fused prediction ties break toward the lower class") {
  LinearClassifier m1, m2;
  m1.num_classes = m2.num_classes = 2;
  m1.W = Eigen::MatrixXd::Zero(2, 1);
  m2.W = Eigen::MatrixXd::Zero(2, 1);
  m1.b = Eigen::VectorXd::Zero(2);
  m2.b = Eigen::VectorXd::Zero(2);
  // Posteriors (0.6, 0.4) and (0.4, 0.6): the mean ties at (0.5, 0.5).
  m1.b << std::log(0.6), std::log(0.4);
  m2.b << std::log(0.4), std::log(0.6);
  const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 1);
  CHECK(predict_fused(m1, m2, X, X) == std::vector<int>{0});
}

TEST_CASE("fusion with identical views equals the single-model argmax") {
  Fixture f = make_fixture();
  const Eigen::MatrixXd XL = select_rows(f.ds.features, f.rs.L0_idx);
  const std::vector<int> yL = select_labels(f.ds.labels, f.rs.L0_idx);
  const LinearClassifier m = fit_logistic(XL, yL, f.ds.num_classes, ThetaClf{}, 0);
  const Eigen::MatrixXd Xq = select_rows(f.ds.features, f.plan.test_idx);
  CHECK(predict_fused(m, m, Xq, Xq) == m.predict(Xq));
}

TEST_CASE("iteration log serializes with the documented fields") {
  IterationLog log;
  log.t = 2;
  log.tau_t = 0.85;
  log.after_confidence = 30;
  log.after_margin = 20;
  log.after_veto = 15;
  log.accepted_per_class = {{0, 5}, {1, 7}};
  const nlohmann::json j = iteration_log_to_json(log);
  CHECK(j.at("t") == 2);
  CHECK(j.at("tau_t") == 0.85);
  CHECK(j.at("candidates_after_each_filter").at("confidence") == 30);
  CHECK(j.at("candidates_after_each_filter").at("margin") == 20);
  CHECK(j.at("candidates_after_each_filter").at("veto") == 15);
  CHECK(j.at("accepted_per_class").at("0") == 5);
  CHECK(j.at("accepted_per_class").at("1") == 7);
}

TEST_CASE("fusion does not fall far below the weaker view") {
  Fixture f = make_fixture(400, 3.0, 0.10);
  ViewGenotype g = identity_genotype(4);
  g.m1 = {1, 1, 0, 0};  // informative dims
  g.m2 = {0, 0, 1, 1};  // noise dims
  const SslOutcome out =
      run_ssl(f.ds, f.rs, g, default_policy(), f.plan.probe_idx, 7);

  const Eigen::MatrixXd Xt = select_rows(f.ds.features, f.plan.test_idx);
  const std::vector<int> yt = select_labels(f.ds.labels, f.plan.test_idx);
  auto acc = [&](const std::vector<int>& pred) {
    return score_classification(yt, pred, f.ds.num_classes).accuracy;
  };
  const double fused = acc(predict_final(out, Xt));
  const double v1 = acc(out.model1.predict(out.view1.apply(Xt)));
  const double v2 = acc(out.model2.predict(out.view2.apply(Xt)));
  CHECK(fused >= std::min(v1, v2) - 0.05);
}
