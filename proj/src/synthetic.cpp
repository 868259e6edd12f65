#include "evossl/synthetic.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "evossl/rng.hpp"

namespace evossl {

Dataset make_gaussian_blobs(const BlobSpec& spec) {
  if (spec.informative > spec.dims)
    throw std::invalid_argument("blobs: informative > dims");
  if (spec.num_classes < 2) throw std::invalid_argument("blobs: need >= 2 classes");

  Rng rng(hash_mix({spec.seed, 0xb70b5ULL}));
  Dataset ds;
  ds.name = spec.name;
  ds.num_classes = spec.num_classes;
  ds.features.resize(spec.n, spec.dims);
  ds.labels.resize(spec.n);

  // Class means spread along a diagonal line in the informative subspace.
  for (int i = 0; i < spec.n; ++i) {
    const int c = i % spec.num_classes;  // balanced classes
    ds.labels[i] = c;
    const double center =
        (static_cast<double>(c) - (spec.num_classes - 1) / 2.0) *
        spec.separation;
    for (int j = 0; j < spec.dims; ++j) {
      const double mean = j < spec.informative ? center : 0.0;
      ds.features(i, j) = mean + rng.normal();
    }
  }
  for (int j = 0; j < spec.dims; ++j)
    ds.feature_names.push_back("f" + std::to_string(j));

  Standardizer scaler;
  scaler.fit_all(ds.features);
  ds.features = scaler.transform(ds.features);
  return ds;
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write CSV: " + path);
  out << std::setprecision(17);
  for (const auto& name : ds.feature_names) out << name << ",";
  out << "label\n";
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.cols(); ++j) out << ds.features(i, j) << ",";
    out << ds.labels[i] << "\n";
  }
}

}  // namespace evossl
