#pragma once

// Pseudo-labeling policy genotype: base-learner hyperparameters, linear
// threshold schedule with floor, margin, veto, per-class cap, and iteration
// budget. The SslPolicy phenotype is what the SSL loop actually consumes;
// baselines build it directly with out-of-domain values (e.g. tau > 1).

#include <cstdint>
#include <utility>
#include <vector>

#include "json.hpp"

#include "evossl/linear_model.hpp"
#include "evossl/rng.hpp"

namespace evossl {

struct PolicyDomains {
  double l2_log_lo = -4.0, l2_log_hi = 1.0;  // l2 in [1e-4, 10], log scale
  int epochs_lo = 50, epochs_hi = 500;
  double tau0_lo = 0.5, tau0_hi = 0.99;
  double dtau_max = 0.1;
  double tau_min_lo = 0.5, tau_min_hi = 0.99;
  int q_max = 50;
  double gamma_max = 0.5;
  int t_max = 20;
  bool calibrate_gene = false;   // optional gene, off in the frozen config
  bool per_gene_alpha = false;   // arithmetic crossover: one alpha per gene
                                 // instead of one per crossover
};

struct PolicyGenotype {
  ThetaClf theta;
  double tau0 = 0.9;
  double dtau = 0.0;
  double tau_min = 0.9;
  int q = 10;
  double gamma = 0.0;
  bool nu = false;
  int T = 10;

  bool operator==(const PolicyGenotype&) const = default;
};

// Acceptance rules as consumed by the SSL loop.
struct SslPolicy {
  ThetaClf theta;
  double tau0 = 0.9;
  double dtau = 0.0;
  double tau_min = 0.9;
  long per_class_cap = -1;  // -1 = unlimited
  double margin = 0.0;      // 0 disables the margin filter
  bool veto = false;
  int max_iters = 10;

  double threshold_at(int t) const;
};

double threshold_at(const PolicyGenotype& b, int t);
SslPolicy policy_phenotype(const PolicyGenotype& b);

PolicyGenotype random_policy(const PolicyDomains& dom, Rng& rng);
PolicyGenotype mutate_policy(const PolicyGenotype& b, const PolicyDomains& dom,
                             double p_mut, double p_flip, Rng& rng);
std::pair<PolicyGenotype, PolicyGenotype> crossover_policy(
    const PolicyGenotype& b1, const PolicyGenotype& b2,
    const PolicyDomains& dom, Rng& rng);
PolicyGenotype repair_policy(PolicyGenotype b, const PolicyDomains& dom);

// Diversity helpers: numeric genes min-max normalized by domain bounds
// (l2 on its log scale), boolean flags as 0/1.
std::vector<double> normalized_numeric_genes(const PolicyGenotype& b,
                                             const PolicyDomains& dom);
std::vector<std::uint8_t> boolean_genes(const PolicyGenotype& b);

nlohmann::json policy_to_json(const PolicyGenotype& b);
PolicyGenotype policy_from_json(const nlohmann::json& j);

}  // namespace evossl
