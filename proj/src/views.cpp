#include "evossl/views.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evossl {

ViewDomains ViewDomains::for_dim(int d) {
  if (d < 1) throw std::invalid_argument("ViewDomains: d < 1");
  ViewDomains dom;
  dom.d = d;
  dom.k_min = std::min(2, d);
  dom.k_max = std::max(2, std::min(16, d));
  dom.b_max = 10;
  if (dom.k_min > d) throw std::invalid_argument("ViewDomains: k_min > d");
  return dom;
}

int popcount(const std::vector<std::uint8_t>& mask) {
  int n = 0;
  for (auto b : mask) n += b != 0;
  return n;
}

ViewTransform ViewTransform::fit(const ViewGenotype& g, int view,
                                 const Eigen::MatrixXd& X_fit) {
  const auto& mask = view == 1 ? g.m1 : g.m2;
  const bool project = view == 1 ? g.p1 : g.p2;
  const int k = view == 1 ? g.k1 : g.k2;
  const int bins = view == 1 ? g.B1 : g.B2;
  if (static_cast<Eigen::Index>(mask.size()) != X_fit.cols())
    throw std::invalid_argument("ViewTransform: mask/data dimension mismatch");

  ViewTransform vt;
  for (std::size_t j = 0; j < mask.size(); ++j)
    if (mask[j]) vt.cols_.push_back(static_cast<int>(j));
  if (vt.cols_.empty())
    throw std::invalid_argument("ViewTransform: empty mask (repair missing)");

  if (project) {
    vt.projected_ = true;
    Rng rng(hash_mix({g.proj_seed, static_cast<std::uint64_t>(view), 0x9a0ULL}));
    vt.proj_.resize(k, static_cast<Eigen::Index>(vt.cols_.size()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    for (Eigen::Index r = 0; r < vt.proj_.rows(); ++r)
      for (Eigen::Index c = 0; c < vt.proj_.cols(); ++c)
        vt.proj_(r, c) = rng.normal() * scale;
  }

  if (bins >= 2) {
    vt.bins_ = bins;
    // Edges from the fit data after mask+projection.
    Eigen::MatrixXd base(X_fit.rows(), static_cast<Eigen::Index>(vt.cols_.size()));
    for (std::size_t j = 0; j < vt.cols_.size(); ++j)
      base.col(static_cast<Eigen::Index>(j)) = X_fit.col(vt.cols_[j]);
    const Eigen::MatrixXd fitted =
        vt.projected_ ? Eigen::MatrixXd(base * vt.proj_.transpose()) : base;
    vt.bin_lo_ = fitted.colwise().minCoeff().transpose();
    vt.bin_hi_ = fitted.colwise().maxCoeff().transpose();
  }
  return vt;
}

Eigen::Index ViewTransform::output_dim() const {
  return projected_ ? proj_.rows() : static_cast<Eigen::Index>(cols_.size());
}

Eigen::MatrixXd ViewTransform::apply(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd sel(X.rows(), static_cast<Eigen::Index>(cols_.size()));
  for (std::size_t j = 0; j < cols_.size(); ++j) {
    if (cols_[j] >= X.cols())
      throw std::invalid_argument("ViewTransform: column out of range");
    sel.col(static_cast<Eigen::Index>(j)) = X.col(cols_[j]);
  }
  Eigen::MatrixXd out = projected_ ? Eigen::MatrixXd(sel * proj_.transpose())
                                   : std::move(sel);
  if (bins_ >= 2) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      const double lo = bin_lo_[c];
      const double width = (bin_hi_[c] - lo) / static_cast<double>(bins_);
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        if (width <= 0.0) {
          out(r, c) = lo;
          continue;
        }
        long idx = static_cast<long>(std::floor((out(r, c) - lo) / width));
        idx = std::clamp<long>(idx, 0, bins_ - 1);
        out(r, c) = lo + (static_cast<double>(idx) + 0.5) * width;
      }
    }
  }
  return out;
}

ViewGenotype random_view(const ViewDomains& dom, Rng& rng) {
  ViewGenotype g;
  g.m1.resize(dom.d);
  g.m2.resize(dom.d);
  for (int j = 0; j < dom.d; ++j) g.m1[j] = rng.coin() ? 1 : 0;
  for (int j = 0; j < dom.d; ++j) g.m2[j] = rng.coin() ? 1 : 0;
  g.p1 = rng.coin();
  g.p2 = rng.coin();
  g.k1 = rng.uniform_int(2, dom.k_max);
  g.k2 = rng.uniform_int(2, dom.k_max);
  g.B1 = rng.uniform_int(0, dom.b_max);
  g.B2 = rng.uniform_int(0, dom.b_max);
  g.proj_seed = rng.next_u64();
  return repair_view(std::move(g), dom, rng);
}

std::pair<ViewTransform, ViewTransform> build_views(const ViewGenotype& g,
                                                    const Eigen::MatrixXd& X_fit) {
  if (X_fit.rows() == 0) throw std::invalid_argument("build_views: empty fit data");
  return {ViewTransform::fit(g, 1, X_fit), ViewTransform::fit(g, 2, X_fit)};
}

namespace {

int step_clamped(int value, int lo, int hi, Rng& rng) {
  const int next = value + (rng.coin() ? 1 : -1);
  return std::clamp(next, lo, hi);
}

}  // namespace

ViewGenotype mutate_view(const ViewGenotype& g, const ViewDomains& dom,
                         double p_bit, double p_flip, Rng& rng) {
  ViewGenotype out = g;
  for (auto& bit : out.m1)
    if (rng.bernoulli(p_bit)) bit ^= 1;
  for (auto& bit : out.m2)
    if (rng.bernoulli(p_bit)) bit ^= 1;
  if (rng.bernoulli(p_flip)) out.k1 = step_clamped(out.k1, 2, dom.k_max, rng);
  if (rng.bernoulli(p_flip)) out.k2 = step_clamped(out.k2, 2, dom.k_max, rng);
  if (rng.bernoulli(p_flip)) out.B1 = step_clamped(out.B1, 0, dom.b_max, rng);
  if (rng.bernoulli(p_flip)) out.B2 = step_clamped(out.B2, 0, dom.b_max, rng);
  if (rng.bernoulli(p_flip)) out.p1 = !out.p1;
  if (rng.bernoulli(p_flip)) out.p2 = !out.p2;
  return repair_view(std::move(out), dom, rng);
}

std::pair<ViewGenotype, ViewGenotype> crossover_view(const ViewGenotype& g1,
                                                     const ViewGenotype& g2,
                                                     const ViewDomains& dom,
                                                     Rng& rng) {
  ViewGenotype c1 = g1, c2 = g2;
  for (std::size_t j = 0; j < c1.m1.size(); ++j)
    if (rng.coin()) std::swap(c1.m1[j], c2.m1[j]);
  for (std::size_t j = 0; j < c1.m2.size(); ++j)
    if (rng.coin()) std::swap(c1.m2[j], c2.m2[j]);
  if (rng.coin()) std::swap(c1.p1, c2.p1);
  if (rng.coin()) std::swap(c1.p2, c2.p2);
  if (rng.coin()) std::swap(c1.k1, c2.k1);
  if (rng.coin()) std::swap(c1.k2, c2.k2);
  if (rng.coin()) std::swap(c1.B1, c2.B1);
  if (rng.coin()) std::swap(c1.B2, c2.B2);
  if (rng.coin()) std::swap(c1.proj_seed, c2.proj_seed);
  return {repair_view(std::move(c1), dom, rng),
          repair_view(std::move(c2), dom, rng)};
}

ViewGenotype repair_view(ViewGenotype g, const ViewDomains& dom, Rng& rng) {
  if (dom.k_min > dom.d)
    throw std::invalid_argument("repair_view: k_min exceeds dimension");
  g.m1.resize(dom.d, 0);
  g.m2.resize(dom.d, 0);
  for (auto* mask : {&g.m1, &g.m2}) {
    while (popcount(*mask) < dom.k_min) {
      std::vector<int> zeros;
      for (int j = 0; j < dom.d; ++j)
        if (!(*mask)[j]) zeros.push_back(j);
      (*mask)[zeros[rng.below(zeros.size())]] = 1;
    }
  }
  g.k1 = std::clamp(g.k1, 2, dom.k_max);
  g.k2 = std::clamp(g.k2, 2, dom.k_max);
  g.B1 = std::clamp(g.B1, 0, dom.b_max);
  g.B2 = std::clamp(g.B2, 0, dom.b_max);
  return g;
}

namespace {

std::string mask_to_string(const std::vector<std::uint8_t>& mask) {
  std::string s(mask.size(), '0');
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) s[i] = '1';
  return s;
}

std::vector<std::uint8_t> mask_from_string(const std::string& s) {
  std::vector<std::uint8_t> mask(s.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) mask[i] = s[i] == '1' ? 1 : 0;
  return mask;
}

}  // namespace

nlohmann::json view_to_json(const ViewGenotype& g) {
  return {{"m1", mask_to_string(g.m1)}, {"m2", mask_to_string(g.m2)},
          {"p1", g.p1},                 {"p2", g.p2},
          {"k1", g.k1},                 {"k2", g.k2},
          {"B1", g.B1},                 {"B2", g.B2},
          {"proj_seed", g.proj_seed}};
}

ViewGenotype view_from_json(const nlohmann::json& j) {
  ViewGenotype g;
  g.m1 = mask_from_string(j.at("m1").get<std::string>());
  g.m2 = mask_from_string(j.at("m2").get<std::string>());
  g.p1 = j.at("p1").get<bool>();
  g.p2 = j.at("p2").get<bool>();
  g.k1 = j.at("k1").get<int>();
  g.k2 = j.at("k2").get<int>();
  g.B1 = j.at("B1").get<int>();
  g.B2 = j.at("B2").get<int>();
  g.proj_seed = j.at("proj_seed").get<std::uint64_t>();
  return g;
}

}  // namespace evossl
