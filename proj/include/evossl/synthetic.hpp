#pragma once

// Synthetic Gaussian-blob classification fixtures for tests and demos.

#include <string>

#include "evossl/dataset.hpp"

namespace evossl {

struct BlobSpec {
  int n = 1000;
  int dims = 10;
  int informative = 4;     // leading dims carry class signal
  int num_classes = 2;
  double separation = 3.0; // distance between class means per informative dim
  std::uint64_t seed = 1;
  std::string name = "blobs";
};

// Standardized dataset (same convention as load_csv output).
Dataset make_gaussian_blobs(const BlobSpec& spec);

// Writes features + label column to CSV for harness-level tests.
void write_dataset_csv(const std::string& path, const Dataset& ds);

}  // namespace evossl
