#pragma once

// Dataset ingestion, preprocessing, and deterministic partitioning.
//
// Pipeline: raw table (CSV or ARFF subset) -> mean imputation -> one-hot
// encoding of categorical columns -> z-score standardization -> Dataset.
// Splits and labeled resamples are pure functions of (seed, name, lf, k).

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace evossl {

struct Dataset {
  std::string name;
  Eigen::MatrixXd features;  // n x d, standardized
  std::vector<int> labels;   // values in [0, num_classes)
  int num_classes = 0;
  std::vector<std::string> feature_names;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }
};

struct SplitPlan {
  std::vector<int> test_idx;
  std::vector<int> val_idx;
  std::vector<int> probe_idx;
  std::vector<int> pool_idx;
  double lf = 0.0;
  std::int64_t seed = 0;
};

struct LabeledResample {
  std::vector<int> L0_idx;
  std::vector<int> U0_idx;
  int k = 0;
};

// Column-wise z-scoring with stored statistics. Zero-variance columns map to
// all zeros. Transforming already-standardized data with its own stored
// statistics is the identity.
class Standardizer {
 public:
  void fit(const Eigen::MatrixXd& X, const std::vector<int>& rows);
  void fit_all(const Eigen::MatrixXd& X);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;

  const Eigen::VectorXd& means() const { return mean_; }
  const Eigen::VectorXd& stds() const { return std_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd std_;
};

// In-memory raw table; empty cell string means missing.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

RawTable parse_csv(const std::string& path);
// ARFF subset: numeric/real/integer and nominal attributes, dense data rows.
// Returns the table plus the relation name via out-parameter.
RawTable parse_arff(const std::string& path, std::string* relation_name);

// Shared preprocessing: impute, encode, standardize, map labels.
Dataset build_dataset(const std::string& name, const RawTable& table,
                      const std::string& label_column);

Dataset load_csv(const std::string& path, const std::string& label_column);

// Stratified 20/16/8/56 (test/val/probe/pool) partition, deterministic in
// (seed, ds.name, lf). Every class needs >= 4 samples and each of the three
// labeled parts must be able to hold one sample per class.
struct SplitShares {
  double test = 0.20;
  double val = 0.16;
  double probe = 0.08;
};
SplitPlan make_split(const Dataset& ds, double lf, std::int64_t seed,
                     const SplitShares& shares = {});

// Stratified draw of the initially labeled pool subset, seeded by
// (plan.seed, k). |L0| = max(C, round(lf * |pool|)), topped up so every
// pool-present class keeps at least one labeled sample.
LabeledResample resample_labeled(const SplitPlan& plan, const Dataset& ds,
                                 int k);

// Content hash tying RunSummary rows of different methods to one partition.
std::string split_hash(const Dataset& ds, const SplitPlan& plan);

}  // namespace evossl
