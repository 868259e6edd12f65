#include "evossl/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <tuple>

#include "evossl/ssl_engine.hpp"

namespace evossl {

SearchConfig frozen_ccssl_config() { return SearchConfig{}; }

SearchConfig frozen_eassl_config() {
  SearchConfig cfg;
  cfg.pa_mut = 0.35;
  return cfg;
}

nlohmann::json generation_log_to_json(const GenerationLog& g) {
  return {{"gen", g.gen},
          {"best_so_far_F", g.best_so_far_f},
          {"fitness_calls_cum", g.fitness_calls_cum},
          {"wall_clock_cum", g.wall_clock_cum},
          {"diversity",
           {{"maskJaccard", g.diversity.mask_jaccard},
            {"policyNumeric", g.diversity.numeric_dispersion},
            {"policyBoolean", g.diversity.boolean_disagreement}}},
          {"best_pair",
           {{"a", view_to_json(g.best_a)}, {"b", policy_to_json(g.best_b)}}}};
}

EvalRecord evaluate_joint(const ViewGenotype& a, const PolicyGenotype& b,
                          const Dataset& ds, const SplitPlan& plan,
                          const SearchConfig& cfg, long* call_counter) {
  EvalRecord rec;
  rec.a = a;
  rec.b = b;
  const std::vector<int> val_labels = select_labels(ds.labels, plan.val_idx);
  const Eigen::MatrixXd val_X = select_rows(ds.features, plan.val_idx);

  double drop_sum = 0.0, add_sum = 0.0;
  for (int k = 0; k < cfg.resamples; ++k) {
    const LabeledResample rs = resample_labeled(plan, ds, k);
    const SslOutcome out =
        run_ssl(ds, rs, a, b, plan.probe_idx,
                hash_mix({static_cast<std::uint64_t>(plan.seed),
                          static_cast<std::uint64_t>(k), 0x551ULL}));
    const std::vector<int> pred = predict_final(out, val_X);
    rec.scores.push_back(
        score_classification(val_labels, pred, ds.num_classes).macro_f1);
    drop_sum += out.probe_before - out.probe_after;
    add_sum += static_cast<double>(out.pseudo_added);
  }
  const double k_count = static_cast<double>(cfg.resamples);
  rec.mu = std::accumulate(rec.scores.begin(), rec.scores.end(), 0.0) / k_count;
  double var = 0.0;
  for (double s : rec.scores) var += (s - rec.mu) * (s - rec.mu);
  rec.sigma = std::sqrt(var / k_count);
  rec.probe_drop_mean = drop_sum / k_count;
  rec.n_add_mean = add_sum / k_count;
  rec.fitness = rec.mu - cfg.weights.lambda_std * rec.sigma -
                cfg.weights.lambda_bias * rec.probe_drop_mean -
                cfg.weights.lambda_add * rec.n_add_mean;
  rec.eval_cost_calls = cfg.resamples;
  if (call_counter) *call_counter += cfg.resamples;
  return rec;
}

std::size_t tournament_select(const std::vector<double>& fitnesses,
                              std::size_t size, Rng& rng) {
  if (size == 0 || size > fitnesses.size())
    throw std::invalid_argument("tournament_select: bad size");
  // Partial Fisher-Yates over an index vector gives `size` distinct draws.
  std::vector<std::size_t> idx(fitnesses.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::size_t best = idx.size();
  for (std::size_t k = 0; k < size; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(idx.size() - k));
    std::swap(idx[k], idx[j]);
    if (best == idx.size() || fitnesses[idx[k]] > fitnesses[best]) best = idx[k];
  }
  return best;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t argmax_index(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// Elitist generational replacement: top-E individuals survive verbatim;
// remaining slots are offspring ordered by provisional fitness (max of the
// parents'), ties broken by seeded RNG.
template <typename G, typename MakeChildren>
std::vector<G> evolve_population(const std::vector<G>& pop,
                                 const std::vector<double>& fit, int elites,
                                 int tournament_size, Rng& rng,
                                 MakeChildren&& make_children,
                                 std::vector<double>* next_fit) {
  const std::size_t n = pop.size();
  const std::size_t e = std::min<std::size_t>(static_cast<std::size_t>(elites), n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> tiebreak(n);
  for (auto& t : tiebreak) t = rng.next_u64();
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (fit[x] != fit[y]) return fit[x] > fit[y];
    return tiebreak[x] < tiebreak[y];
  });

  std::vector<G> next;
  std::vector<double> carried;
  next.reserve(n);
  for (std::size_t i = 0; i < e; ++i) {
    next.push_back(pop[order[i]]);
    carried.push_back(fit[order[i]]);
  }

  struct Offspring {
    G g;
    double provisional;
    std::uint64_t tiebreak;
  };
  std::vector<Offspring> brood;
  while (brood.size() < n - e) {
    const std::size_t i1 = tournament_select(fit, tournament_size, rng);
    const std::size_t i2 = tournament_select(fit, tournament_size, rng);
    auto [c1, c2] = make_children(pop[i1], pop[i2], rng);
    const double prov = std::max(fit[i1], fit[i2]);
    brood.push_back({std::move(c1), prov, rng.next_u64()});
    if (brood.size() < n - e) brood.push_back({std::move(c2), prov, rng.next_u64()});
  }
  std::sort(brood.begin(), brood.end(), [](const Offspring& x, const Offspring& y) {
    if (x.provisional != y.provisional) return x.provisional > y.provisional;
    return x.tiebreak < y.tiebreak;
  });
  for (auto& o : brood) {
    next.push_back(std::move(o.g));
    carried.push_back(o.provisional);
  }
  if (next_fit) *next_fit = std::move(carried);
  return next;
}

// Elitist partner plus R random collaborators; random picks avoid the elitist
// partner when the population is large enough and never repeat otherwise.
std::vector<std::size_t> pick_partners(std::size_t best, std::size_t n,
                                       int r, Rng& rng) {
  std::vector<std::size_t> partners{best};
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < n; ++i)
    if (i != best) pool.push_back(i);
  if (pool.size() < static_cast<std::size_t>(r)) {
    pool.clear();
    for (std::size_t i = 0; i < n; ++i) pool.push_back(i);
  }
  rng.shuffle(pool);
  for (int k = 0; k < r; ++k)
    partners.push_back(pool.empty() ? best : pool[k % pool.size()]);
  return partners;
}

DiversitySnapshot snapshot_diversity(const std::vector<ViewGenotype>& views,
                                     const std::vector<PolicyGenotype>& policies,
                                     const PolicyDomains& pdom) {
  DiversitySnapshot snap;
  std::vector<std::vector<std::uint8_t>> masks;
  for (const auto& v : views) {
    masks.push_back(v.m1);
    masks.push_back(v.m2);
  }
  snap.mask_jaccard = mean_pairwise_jaccard_distance(masks);
  std::vector<std::vector<double>> numeric;
  std::vector<std::vector<std::uint8_t>> booleans;
  for (const auto& p : policies) {
    numeric.push_back(normalized_numeric_genes(p, pdom));
    booleans.push_back(boolean_genes(p));
  }
  snap.numeric_dispersion = mean_distance_to_centroid(numeric);
  snap.boolean_disagreement = mean_pairwise_boolean_disagreement(booleans);
  return snap;
}

void finalize_summary(const std::string& method, const Dataset& ds,
                      const SplitPlan& plan, const SearchConfig& cfg,
                      SearchResult* result) {
  const LabeledResample rs0 = resample_labeled(plan, ds, 0);
  const SslOutcome out =
      run_ssl(ds, rs0, result->best_a, result->best_b, plan.probe_idx,
              hash_mix({static_cast<std::uint64_t>(plan.seed), 0ULL, 0x551ULL}));
  result->final_iteration_logs = out.iteration_logs;

  RunSummary s;
  s.method = method;
  s.dataset = ds.name;
  s.lf = plan.lf;
  s.seed = plan.seed;
  s.num_classes = ds.num_classes;
  const std::vector<int> test_pred =
      predict_final(out, select_rows(ds.features, plan.test_idx));
  const ScoreReport test_rep = score_classification(
      select_labels(ds.labels, plan.test_idx), test_pred, ds.num_classes);
  s.test_macro_f1 = test_rep.macro_f1;
  s.test_accuracy = test_rep.accuracy;
  const std::vector<int> val_pred =
      predict_final(out, select_rows(ds.features, plan.val_idx));
  s.val_macro_f1 =
      score_classification(select_labels(ds.labels, plan.val_idx), val_pred,
                           ds.num_classes)
          .macro_f1;
  s.probe_drop = probe_drop(out.probe_before, out.probe_after);
  s.pseudo_added = static_cast<double>(out.pseudo_added);
  s.optimism = val_optimism(s.val_macro_f1, s.test_macro_f1);
  s.split_hash = split_hash(ds, plan);
  const TargetCost tc = cost_to_target(result->logs);
  s.has_target_cost = true;
  s.gtt = tc.gtt;
  s.ttt = tc.ttt;
  (void)cfg;
  result->summary = std::move(s);
}

}  // namespace

TargetCost cost_to_target(const std::vector<GenerationLog>& logs) {
  std::vector<double> best, wall;
  for (const auto& g : logs) {
    best.push_back(g.best_so_far_f);
    wall.push_back(g.wall_clock_cum);
  }
  return cost_to_target(std::span<const double>(best),
                        std::span<const double>(wall));
}

SearchResult run_ccssl(const Dataset& ds, const SplitPlan& plan,
                       const SearchConfig& cfg, const EvalObserver& observer,
                       const CcPopulationObserver& pop_observer) {
  const auto start = Clock::now();
  const ViewDomains vdom = ViewDomains::for_dim(static_cast<int>(ds.cols()));
  PolicyDomains pdom;
  pdom.calibrate_gene = cfg.calibrate_gene;
  const double p_bit = cfg.pa_mut / static_cast<double>(vdom.d);

  Rng rng(hash_mix({cfg.seed, 0xccULL}));
  std::vector<ViewGenotype> pop_a;
  std::vector<PolicyGenotype> pop_b;
  for (int i = 0; i < cfg.n_a; ++i) pop_a.push_back(random_view(vdom, rng));
  for (int j = 0; j < cfg.n_b; ++j) pop_b.push_back(random_policy(pdom, rng));

  SearchResult result;
  result.best_f = -std::numeric_limits<double>::infinity();
  auto consider = [&](const EvalRecord& rec) {
    if (observer) observer(rec);
    if (rec.fitness > result.best_f) {
      result.best_f = rec.fitness;
      result.best_a = rec.a;
      result.best_b = rec.b;
    }
  };

  // Initialization round: one random collaboration per individual, logged
  // separately from the generational budget.
  std::vector<double> fit_a(cfg.n_a), fit_b(cfg.n_b);
  for (int i = 0; i < cfg.n_a; ++i) {
    const std::size_t j = rng.below(pop_b.size());
    const EvalRecord rec = evaluate_joint(pop_a[i], pop_b[j], ds, plan, cfg,
                                          &result.init_fitness_calls);
    consider(rec);
    fit_a[i] = rec.fitness;
  }
  for (int j = 0; j < cfg.n_b; ++j) {
    const std::size_t i = rng.below(pop_a.size());
    const EvalRecord rec = evaluate_joint(pop_a[i], pop_b[j], ds, plan, cfg,
                                          &result.init_fitness_calls);
    consider(rec);
    fit_b[j] = rec.fitness;
  }

  auto make_view_children = [&](const ViewGenotype& x, const ViewGenotype& y,
                                Rng& r) {
    auto kids = r.bernoulli(cfg.pa_cx) ? crossover_view(x, y, vdom, r)
                                       : std::make_pair(x, y);
    kids.first = mutate_view(kids.first, vdom, p_bit, cfg.pa_mut, r);
    kids.second = mutate_view(kids.second, vdom, p_bit, cfg.pa_mut, r);
    return kids;
  };
  auto make_policy_children = [&](const PolicyGenotype& x,
                                  const PolicyGenotype& y, Rng& r) {
    auto kids = r.bernoulli(cfg.pb_cx) ? crossover_policy(x, y, pdom, r)
                                       : std::make_pair(x, y);
    kids.first = mutate_policy(kids.first, pdom, cfg.pb_mut, cfg.pb_mut, r);
    kids.second = mutate_policy(kids.second, pdom, cfg.pb_mut, cfg.pb_mut, r);
    return kids;
  };

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    const std::size_t a_best = argmax_index(fit_a);
    const std::size_t b_best = argmax_index(fit_b);

    std::vector<double> next_fit_a(cfg.n_a), next_fit_b(cfg.n_b);
    for (int i = 0; i < cfg.n_a; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t p :
           pick_partners(b_best, pop_b.size(), cfg.random_collaborators, rng)) {
        const EvalRecord rec = evaluate_joint(pop_a[i], pop_b[p], ds, plan,
                                              cfg, &result.total_fitness_calls);
        consider(rec);
        best = std::max(best, rec.fitness);
      }
      next_fit_a[i] = best;
    }
    for (int j = 0; j < cfg.n_b; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t p :
           pick_partners(a_best, pop_a.size(), cfg.random_collaborators, rng)) {
        const EvalRecord rec = evaluate_joint(pop_a[p], pop_b[j], ds, plan,
                                              cfg, &result.total_fitness_calls);
        consider(rec);
        best = std::max(best, rec.fitness);
      }
      next_fit_b[j] = best;
    }
    fit_a = std::move(next_fit_a);
    fit_b = std::move(next_fit_b);

    if (pop_observer) pop_observer(gen, pop_a, fit_a, pop_b, fit_b);

    GenerationLog log;
    log.gen = gen;
    log.best_so_far_f = result.best_f;
    log.fitness_calls_cum = result.total_fitness_calls;
    log.wall_clock_cum = seconds_since(start);
    log.diversity = snapshot_diversity(pop_a, pop_b, pdom);
    log.best_a = result.best_a;
    log.best_b = result.best_b;
    result.logs.push_back(log);

    pop_a = evolve_population(pop_a, fit_a, cfg.elites, cfg.tournament_size,
                              rng, make_view_children, &fit_a);
    pop_b = evolve_population(pop_b, fit_b, cfg.elites, cfg.tournament_size,
                              rng, make_policy_children, &fit_b);
  }

  finalize_summary("ccssl", ds, plan, cfg, &result);
  result.summary.duration_s = seconds_since(start);
  return result;
}

SearchResult run_eassl(const Dataset& ds, const SplitPlan& plan,
                       const SearchConfig& cfg, const EvalObserver& observer,
                       const EaPopulationObserver& pop_observer) {
  const auto start = Clock::now();
  const ViewDomains vdom = ViewDomains::for_dim(static_cast<int>(ds.cols()));
  PolicyDomains pdom;
  pdom.calibrate_gene = cfg.calibrate_gene;
  const double p_bit = cfg.pa_mut / static_cast<double>(vdom.d);

  Rng rng(hash_mix({cfg.seed, 0xeaULL}));
  std::vector<JointGenotype> pop;
  for (int i = 0; i < cfg.n_mono; ++i)
    pop.push_back({random_view(vdom, rng), random_policy(pdom, rng)});

  SearchResult result;
  result.best_f = -std::numeric_limits<double>::infinity();

  auto make_children = [&](const JointGenotype& x, const JointGenotype& y,
                           Rng& r) {
    JointGenotype c1 = x, c2 = y;
    if (r.bernoulli(cfg.pa_cx))
      std::tie(c1.a, c2.a) = crossover_view(x.a, y.a, vdom, r);
    if (r.bernoulli(cfg.pb_cx))
      std::tie(c1.b, c2.b) = crossover_policy(x.b, y.b, pdom, r);
    c1.a = mutate_view(c1.a, vdom, p_bit, cfg.pa_mut, r);
    c2.a = mutate_view(c2.a, vdom, p_bit, cfg.pa_mut, r);
    c1.b = mutate_policy(c1.b, pdom, cfg.pb_mut, cfg.pb_mut, r);
    c2.b = mutate_policy(c2.b, pdom, cfg.pb_mut, cfg.pb_mut, r);
    return std::make_pair(c1, c2);
  };

  std::vector<double> fit(cfg.n_mono);
  for (int gen = 1; gen <= cfg.generations; ++gen) {
    for (int i = 0; i < cfg.n_mono; ++i) {
      const EvalRecord rec = evaluate_joint(pop[i].a, pop[i].b, ds, plan, cfg,
                                            &result.total_fitness_calls);
      if (observer) observer(rec);
      fit[i] = rec.fitness;
      if (rec.fitness > result.best_f) {
        result.best_f = rec.fitness;
        result.best_a = rec.a;
        result.best_b = rec.b;
      }
    }

    if (pop_observer) pop_observer(gen, pop, fit);

    GenerationLog log;
    log.gen = gen;
    log.best_so_far_f = result.best_f;
    log.fitness_calls_cum = result.total_fitness_calls;
    log.wall_clock_cum = seconds_since(start);
    std::vector<ViewGenotype> views;
    std::vector<PolicyGenotype> policies;
    for (const auto& ind : pop) {
      views.push_back(ind.a);
      policies.push_back(ind.b);
    }
    log.diversity = snapshot_diversity(views, policies, pdom);
    log.best_a = result.best_a;
    log.best_b = result.best_b;
    result.logs.push_back(log);

    pop = evolve_population(pop, fit, cfg.elites, cfg.tournament_size, rng,
                            make_children, &fit);
  }

  finalize_summary("eassl", ds, plan, cfg, &result);
  result.summary.duration_s = seconds_since(start);
  return result;
}

}  // namespace evossl
