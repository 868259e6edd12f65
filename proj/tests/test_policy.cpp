#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "evossl/policy.hpp"

using namespace evossl;

namespace {

bool feasible(const PolicyGenotype& b, const PolicyDomains& dom) {
  const double log_l2 = std::log10(b.theta.l2);
  return log_l2 >= dom.l2_log_lo - 1e-12 && log_l2 <= dom.l2_log_hi + 1e-12 &&
         b.theta.max_epochs >= dom.epochs_lo &&
         b.theta.max_epochs <= dom.epochs_hi && b.tau0 >= dom.tau0_lo &&
         b.tau0 <= dom.tau0_hi && b.dtau >= 0.0 && b.dtau <= dom.dtau_max &&
         b.tau_min <= b.tau0 && b.q >= 1 && b.q <= dom.q_max &&
         b.gamma >= 0.0 && b.gamma <= dom.gamma_max && b.T >= 1 &&
         b.T <= dom.t_max;
}

}  // namespace

TEST_CASE("threshold schedule: zero decay holds the initial value") {
  PolicyGenotype b;
  b.tau0 = 0.9;
  b.dtau = 0.0;
  b.tau_min = 0.5;
  for (int t : {0, 1, 5, 100}) CHECK(threshold_at(b, t) == doctest::Approx(0.9));
}

TEST_CASE("threshold schedule: linear decay clamps at the floor") {
  PolicyGenotype b;
  b.tau0 = 0.9;
  b.dtau = 0.1;
  b.tau_min = 0.6;
  CHECK(threshold_at(b, 0) == doctest::Approx(0.9));
  CHECK(threshold_at(b, 1) == doctest::Approx(0.8));
  CHECK(threshold_at(b, 5) == doctest::Approx(0.6));  // max(0.6, 0.4)
  CHECK(threshold_at(b, 50) == doctest::Approx(0.6));
}

TEST_CASE("threshold schedule is non-increasing and floored") {
  PolicyDomains dom;
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const PolicyGenotype b = random_policy(dom, rng);
    double prev = threshold_at(b, 0);
    CHECK(prev == doctest::Approx(b.tau0));
    for (int t = 1; t <= 50; ++t) {
      const double cur = threshold_at(b, t);
      CHECK(cur <= prev + 1e-15);
      CHECK(cur >= b.tau_min - 1e-15);
      prev = cur;
    }
  }
}

TEST_CASE("mutation at zero rates is the identity") {
  PolicyDomains dom;
  Rng rng(2);
  const PolicyGenotype b = random_policy(dom, rng);
  CHECK(mutate_policy(b, dom, 0.0, 0.0, rng) == b);
}

TEST_CASE("mutation clamps at the domain boundary") {
  PolicyDomains dom;
  Rng rng(3);
  PolicyGenotype b = random_policy(dom, rng);
  b.tau0 = dom.tau0_hi;
  b.tau_min = 0.5;
  for (int trial = 0; trial < 200; ++trial) {
    const PolicyGenotype m = mutate_policy(b, dom, 1.0, 0.0, rng);
    CHECK(m.tau0 <= dom.tau0_hi);
    CHECK(m.tau0 >= dom.tau0_lo);
  }
}

TEST_CASE("symmetric noise has near-zero mean shift away from bounds") {
  PolicyDomains dom;
  Rng rng(4);
  PolicyGenotype b;
  b.tau0 = 0.5 * (dom.tau0_lo + dom.tau0_hi);  // no clamping in one step
  b.tau_min = dom.tau0_lo;
  double shift = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t)
    shift += mutate_policy(b, dom, 1.0, 0.0, rng).tau0 - b.tau0;
  CHECK(std::fabs(shift / trials) < 0.005);
}

TEST_CASE("crossover of identical parents returns the parents") {
  PolicyDomains dom;
  Rng rng(5);
  const PolicyGenotype b = random_policy(dom, rng);
  auto [c1, c2] = crossover_policy(b, b, dom, rng);
  CHECK(c1 == b);
  CHECK(c2 == b);
}

TEST_CASE("continuous crossover children stay on the parent segment") {
  PolicyDomains dom;
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const PolicyGenotype a = random_policy(dom, rng);
    const PolicyGenotype b = random_policy(dom, rng);
    auto [c1, c2] = crossover_policy(a, b, dom, rng);
    for (const PolicyGenotype* c : {&c1, &c2}) {
      CHECK(c->tau0 >= std::min(a.tau0, b.tau0) - 1e-12);
      CHECK(c->tau0 <= std::max(a.tau0, b.tau0) + 1e-12);
      CHECK(c->gamma >= std::min(a.gamma, b.gamma) - 1e-12);
      CHECK(c->gamma <= std::max(a.gamma, b.gamma) + 1e-12);
      // Discrete genes swap.
      CHECK((c->q == a.q || c->q == b.q));
      CHECK((c->T == a.T || c->T == b.T));
    }
    // A single alpha preserves the pairwise sum of unclamped genes.
    CHECK(c1.tau0 + c2.tau0 == doctest::Approx(a.tau0 + b.tau0).epsilon(1e-12));
    CHECK(c1.gamma + c2.gamma ==
          doctest::Approx(a.gamma + b.gamma).epsilon(1e-12));
  }
}

TEST_CASE("per-gene alpha still keeps children on the parent segment") {
  PolicyDomains dom;
  dom.per_gene_alpha = true;
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const PolicyGenotype a = random_policy(dom, rng);
    const PolicyGenotype b = random_policy(dom, rng);
    auto [c1, c2] = crossover_policy(a, b, dom, rng);
    for (const PolicyGenotype* c : {&c1, &c2}) {
      CHECK(c->tau0 >= std::min(a.tau0, b.tau0) - 1e-12);
      CHECK(c->tau0 <= std::max(a.tau0, b.tau0) + 1e-12);
    }
  }
}

TEST_CASE("repair fixes the threshold ordering and negative decay") {
  PolicyDomains dom;
  PolicyGenotype b;
  b.tau0 = 0.6;
  b.tau_min = 0.8;
  b.dtau = -0.05;
  const PolicyGenotype r = repair_policy(b, dom);
  CHECK(r.tau_min == doctest::Approx(0.6));
  CHECK(r.dtau == 0.0);

  const PolicyGenotype again = repair_policy(r, dom);
  CHECK(again == r);  // idempotent
}

TEST_CASE("repair is idempotent on random corrupted genotypes") {
  PolicyDomains dom;
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    PolicyGenotype b = random_policy(dom, rng);
    b.tau0 += rng.uniform(-0.5, 0.5);
    b.tau_min += rng.uniform(-0.5, 0.5);
    b.dtau += rng.uniform(-0.2, 0.2);
    b.q += rng.uniform_int(-100, 100);
    const PolicyGenotype once = repair_policy(b, dom);
    CHECK(repair_policy(once, dom) == once);
    CHECK(feasible(once, dom));
  }
}

TEST_CASE("operators keep genotypes inside their domains") {
  PolicyDomains dom;
  Rng rng(8);
  PolicyGenotype g = random_policy(dom, rng);
  for (int step = 0; step < 300; ++step) {
    const PolicyGenotype h = random_policy(dom, rng);
    auto [c1, c2] = crossover_policy(g, h, dom, rng);
    g = mutate_policy(step % 2 ? c1 : c2, dom, 0.5, 0.5, rng);
    CHECK(feasible(g, dom));
  }
}

TEST_CASE("calibrate gene stays off unless enabled") {
  PolicyDomains dom;
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial)
    CHECK_FALSE(random_policy(dom, rng).theta.calibrate);
  dom.calibrate_gene = true;
  bool seen = false;
  for (int trial = 0; trial < 50; ++trial)
    seen = seen || random_policy(dom, rng).theta.calibrate;
  CHECK(seen);
}

TEST_CASE("phenotype carries the acceptance rules") {
  PolicyDomains dom;
  Rng rng(10);
  const PolicyGenotype b = random_policy(dom, rng);
  const SslPolicy p = policy_phenotype(b);
  CHECK(p.per_class_cap == b.q);
  CHECK(p.margin == b.gamma);
  CHECK(p.veto == b.nu);
  CHECK(p.max_iters == b.T);
  for (int t : {0, 3, 9})
    CHECK(p.threshold_at(t) == doctest::Approx(threshold_at(b, t)));
}

TEST_CASE("normalized numeric genes stay in the unit box") {
  PolicyDomains dom;
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto genes = normalized_numeric_genes(random_policy(dom, rng), dom);
    CHECK(genes.size() == 8);
    for (double v : genes) {
      CHECK(v >= -1e-12);
      CHECK(v <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("JSON round trip preserves the genotype") {
  PolicyDomains dom;
  Rng rng(12);
  const PolicyGenotype b = random_policy(dom, rng);
  const nlohmann::json j = policy_to_json(b);
  CHECK(j.contains("theta_clf"));
  CHECK(j.contains("tau0"));
  CHECK(policy_from_json(j) == b);
}
