#include "evossl/policy.hpp"

#include <algorithm>
#include <cmath>

namespace evossl {

namespace {

double decayed_threshold(double tau0, double dtau, double tau_min, int t) {
  return std::max(tau_min, tau0 - static_cast<double>(t) * dtau);
}

}  // namespace

double SslPolicy::threshold_at(int t) const {
  return decayed_threshold(tau0, dtau, tau_min, t);
}

double threshold_at(const PolicyGenotype& b, int t) {
  return decayed_threshold(b.tau0, b.dtau, b.tau_min, t);
}

SslPolicy policy_phenotype(const PolicyGenotype& b) {
  SslPolicy p;
  p.theta = b.theta;
  p.tau0 = b.tau0;
  p.dtau = b.dtau;
  p.tau_min = b.tau_min;
  p.per_class_cap = b.q;
  p.margin = b.gamma;
  p.veto = b.nu;
  p.max_iters = b.T;
  return p;
}

PolicyGenotype random_policy(const PolicyDomains& dom, Rng& rng) {
  PolicyGenotype b;
  b.theta.l2 = std::pow(10.0, rng.uniform(dom.l2_log_lo, dom.l2_log_hi));
  b.theta.max_epochs = rng.uniform_int(dom.epochs_lo, dom.epochs_hi);
  b.theta.calibrate = dom.calibrate_gene ? rng.coin() : false;
  b.tau0 = rng.uniform(dom.tau0_lo, dom.tau0_hi);
  b.dtau = rng.uniform(0.0, dom.dtau_max);
  b.tau_min = rng.uniform(dom.tau_min_lo, dom.tau_min_hi);
  b.q = rng.uniform_int(1, dom.q_max);
  b.gamma = rng.uniform(0.0, dom.gamma_max);
  b.nu = rng.coin();
  b.T = rng.uniform_int(1, dom.t_max);
  return repair_policy(std::move(b), dom);
}

namespace {

double noise_clamped(double value, double lo, double hi, Rng& rng) {
  const double halfwidth = 0.1 * (hi - lo);
  return std::clamp(value + rng.uniform(-halfwidth, halfwidth), lo, hi);
}

int step_clamped(int value, int lo, int hi, Rng& rng) {
  return std::clamp(value + (rng.coin() ? 1 : -1), lo, hi);
}

}  // namespace

PolicyGenotype mutate_policy(const PolicyGenotype& b, const PolicyDomains& dom,
                             double p_mut, double p_flip, Rng& rng) {
  PolicyGenotype out = b;
  if (rng.bernoulli(p_mut)) {
    const double log_l2 = noise_clamped(std::log10(out.theta.l2),
                                        dom.l2_log_lo, dom.l2_log_hi, rng);
    out.theta.l2 = std::pow(10.0, log_l2);
  }
  if (rng.bernoulli(p_mut)) {
    // Wide-range integer: treated as a continuous gene and rounded.
    const double e =
        noise_clamped(static_cast<double>(out.theta.max_epochs),
                      static_cast<double>(dom.epochs_lo),
                      static_cast<double>(dom.epochs_hi), rng);
    out.theta.max_epochs = static_cast<int>(std::lround(e));
  }
  if (rng.bernoulli(p_mut))
    out.tau0 = noise_clamped(out.tau0, dom.tau0_lo, dom.tau0_hi, rng);
  if (rng.bernoulli(p_mut))
    out.dtau = noise_clamped(out.dtau, 0.0, dom.dtau_max, rng);
  if (rng.bernoulli(p_mut))
    out.tau_min = noise_clamped(out.tau_min, dom.tau_min_lo, dom.tau_min_hi, rng);
  if (rng.bernoulli(p_mut)) out.q = step_clamped(out.q, 1, dom.q_max, rng);
  if (rng.bernoulli(p_mut))
    out.gamma = noise_clamped(out.gamma, 0.0, dom.gamma_max, rng);
  if (rng.bernoulli(p_mut)) out.T = step_clamped(out.T, 1, dom.t_max, rng);
  if (rng.bernoulli(p_flip)) out.nu = !out.nu;
  if (dom.calibrate_gene && rng.bernoulli(p_flip))
    out.theta.calibrate = !out.theta.calibrate;
  return repair_policy(std::move(out), dom);
}

std::pair<PolicyGenotype, PolicyGenotype> crossover_policy(
    const PolicyGenotype& b1, const PolicyGenotype& b2,
    const PolicyDomains& dom, Rng& rng) {
  PolicyGenotype c1 = b1, c2 = b2;
  const double shared_alpha = rng.uniform();

  auto blend = [&](double x1, double x2, double* o1, double* o2) {
    const double alpha = dom.per_gene_alpha ? rng.uniform() : shared_alpha;
    *o1 = alpha * x1 + (1.0 - alpha) * x2;
    *o2 = alpha * x2 + (1.0 - alpha) * x1;
  };
  double l1 = std::log10(b1.theta.l2), l2 = std::log10(b2.theta.l2);
  double o1, o2;
  blend(l1, l2, &o1, &o2);
  c1.theta.l2 = std::pow(10.0, o1);
  c2.theta.l2 = std::pow(10.0, o2);
  blend(b1.theta.max_epochs, b2.theta.max_epochs, &o1, &o2);
  c1.theta.max_epochs = static_cast<int>(std::lround(o1));
  c2.theta.max_epochs = static_cast<int>(std::lround(o2));
  blend(b1.tau0, b2.tau0, &c1.tau0, &c2.tau0);
  blend(b1.dtau, b2.dtau, &c1.dtau, &c2.dtau);
  blend(b1.tau_min, b2.tau_min, &c1.tau_min, &c2.tau_min);
  blend(b1.gamma, b2.gamma, &c1.gamma, &c2.gamma);

  if (rng.coin()) std::swap(c1.q, c2.q);
  if (rng.coin()) std::swap(c1.T, c2.T);
  if (rng.coin()) std::swap(c1.nu, c2.nu);
  if (rng.coin()) std::swap(c1.theta.calibrate, c2.theta.calibrate);

  return {repair_policy(std::move(c1), dom), repair_policy(std::move(c2), dom)};
}

PolicyGenotype repair_policy(PolicyGenotype b, const PolicyDomains& dom) {
  b.theta.l2 = std::pow(
      10.0, std::clamp(std::log10(b.theta.l2), dom.l2_log_lo, dom.l2_log_hi));
  b.theta.max_epochs = std::clamp(b.theta.max_epochs, dom.epochs_lo, dom.epochs_hi);
  if (!dom.calibrate_gene) b.theta.calibrate = false;
  b.tau0 = std::clamp(b.tau0, dom.tau0_lo, dom.tau0_hi);
  b.dtau = std::clamp(b.dtau, 0.0, dom.dtau_max);
  b.tau_min = std::clamp(b.tau_min, dom.tau_min_lo, dom.tau_min_hi);
  b.tau_min = std::min(b.tau_min, b.tau0);
  b.q = std::clamp(b.q, 1, dom.q_max);
  b.gamma = std::clamp(b.gamma, 0.0, dom.gamma_max);
  b.T = std::clamp(b.T, 1, dom.t_max);
  return b;
}

std::vector<double> normalized_numeric_genes(const PolicyGenotype& b,
                                             const PolicyDomains& dom) {
  auto norm = [](double v, double lo, double hi) {
    return hi > lo ? (v - lo) / (hi - lo) : 0.0;
  };
  return {
      norm(std::log10(b.theta.l2), dom.l2_log_lo, dom.l2_log_hi),
      norm(b.theta.max_epochs, dom.epochs_lo, dom.epochs_hi),
      norm(b.tau0, dom.tau0_lo, dom.tau0_hi),
      norm(b.dtau, 0.0, dom.dtau_max),
      norm(b.tau_min, dom.tau_min_lo, dom.tau_min_hi),
      norm(b.q, 1.0, dom.q_max),
      norm(b.gamma, 0.0, dom.gamma_max),
      norm(b.T, 1.0, dom.t_max),
  };
}

std::vector<std::uint8_t> boolean_genes(const PolicyGenotype& b) {
  return {static_cast<std::uint8_t>(b.nu ? 1 : 0),
          static_cast<std::uint8_t>(b.theta.calibrate ? 1 : 0)};
}

nlohmann::json policy_to_json(const PolicyGenotype& b) {
  return {{"theta_clf",
           {{"l2", b.theta.l2},
            {"max_epochs", b.theta.max_epochs},
            {"calibrate", b.theta.calibrate}}},
          {"tau0", b.tau0},
          {"dtau", b.dtau},
          {"tau_min", b.tau_min},
          {"q", b.q},
          {"gamma", b.gamma},
          {"nu", b.nu},
          {"T", b.T}};
}

PolicyGenotype policy_from_json(const nlohmann::json& j) {
  PolicyGenotype b;
  const auto& theta = j.at("theta_clf");
  b.theta.l2 = theta.at("l2").get<double>();
  b.theta.max_epochs = theta.at("max_epochs").get<int>();
  b.theta.calibrate = theta.at("calibrate").get<bool>();
  b.tau0 = j.at("tau0").get<double>();
  b.dtau = j.at("dtau").get<double>();
  b.tau_min = j.at("tau_min").get<double>();
  b.q = j.at("q").get<int>();
  b.gamma = j.at("gamma").get<double>();
  b.nu = j.at("nu").get<bool>();
  b.T = j.at("T").get<int>();
  return b;
}

}  // namespace evossl
