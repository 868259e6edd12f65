#pragma once

// OpenML dataset-by-id download with an on-disk cache. Layout:
//   <cache>/<id>.arff       raw ARFF payload
//   <cache>/<id>.meta.json  {name, label_column, url}
// Offline mode (or any network failure with a warm cache) serves the cache.

#include <string>

#include "evossl/dataset.hpp"

namespace evossl {

struct OpenmlOptions {
  std::string cache_dir;  // empty: $EVOSSL_CACHE or "cache"
  std::string base_url = "https://www.openml.org";
  bool offline = false;
};

std::string openml_cache_dir(const OpenmlOptions& opts);

// Downloads (or loads from cache) and runs the standard preprocessing
// pipeline. Throws on network failure without a cached copy and on
// unsupported ARFF constructs.
Dataset fetch_openml(int dataset_id, const OpenmlOptions& opts = {});

// True when a cached copy exists or the OpenML endpoint is reachable;
// used to decide whether network-dependent checks can run.
bool openml_available(int dataset_id, const OpenmlOptions& opts = {});

}  // namespace evossl
