#pragma once

// View-builder genotype and phenotype: feature mask -> optional seeded
// Gaussian projection -> optional equal-width discretization to bin
// midpoints. Variation operators keep genotypes inside their domains.

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "json.hpp"

#include "evossl/rng.hpp"

namespace evossl {

struct ViewDomains {
  int d = 0;
  int k_min = 2;
  int k_max = 2;   // min(16, d)
  int b_max = 10;

  static ViewDomains for_dim(int d);
};

struct ViewGenotype {
  std::vector<std::uint8_t> m1, m2;  // feature masks, length d
  bool p1 = false, p2 = false;       // projection flags
  int k1 = 2, k2 = 2;                // projection dims
  int B1 = 0, B2 = 0;                // discretization bins (0/1 = off)
  std::uint64_t proj_seed = 0;

  bool operator==(const ViewGenotype&) const = default;
};

int popcount(const std::vector<std::uint8_t>& mask);

class ViewTransform {
 public:
  // Fit on X_fit: projection matrix from the genotype seed, bin edges from
  // the transformed fit-data min/max.
  static ViewTransform fit(const ViewGenotype& g, int view, const Eigen::MatrixXd& X_fit);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  Eigen::Index output_dim() const;

 private:
  std::vector<int> cols_;
  bool projected_ = false;
  Eigen::MatrixXd proj_;  // k x |cols_|
  int bins_ = 0;
  Eigen::VectorXd bin_lo_, bin_hi_;
};

ViewGenotype random_view(const ViewDomains& dom, Rng& rng);
std::pair<ViewTransform, ViewTransform> build_views(const ViewGenotype& g,
                                                    const Eigen::MatrixXd& X_fit);
ViewGenotype mutate_view(const ViewGenotype& g, const ViewDomains& dom,
                         double p_bit, double p_flip, Rng& rng);
std::pair<ViewGenotype, ViewGenotype> crossover_view(const ViewGenotype& g1,
                                                     const ViewGenotype& g2,
                                                     const ViewDomains& dom,
                                                     Rng& rng);
ViewGenotype repair_view(ViewGenotype g, const ViewDomains& dom, Rng& rng);

nlohmann::json view_to_json(const ViewGenotype& g);
ViewGenotype view_from_json(const nlohmann::json& j);

}  // namespace evossl
