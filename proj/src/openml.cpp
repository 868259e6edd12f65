#include "evossl/openml.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "httplib.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace evossl {

namespace {

struct UrlParts {
  std::string scheme_host;  // e.g. https://api.openml.org
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw std::runtime_error("openml: malformed URL " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

// GET with redirect following; returns false on any transport error.
bool http_get(const std::string& url, std::string* body, std::string* err) {
  const UrlParts parts = split_url(url);
  httplib::Client client(parts.scheme_host);
  client.set_connection_timeout(10);
  client.set_read_timeout(60);
  client.set_follow_location(true);
  auto res = client.Get(parts.path);
  if (!res) {
    if (err) *err = "no response from " + parts.scheme_host;
    return false;
  }
  if (res->status != 200) {
    if (err) *err = "HTTP " + std::to_string(res->status) + " from " + url;
    return false;
  }
  *body = res->body;
  return true;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

}  // namespace

std::string openml_cache_dir(const OpenmlOptions& opts) {
  if (!opts.cache_dir.empty()) return opts.cache_dir;
  if (const char* env = std::getenv("EVOSSL_CACHE"); env && *env) return env;
  return "cache";
}

bool openml_available(int dataset_id, const OpenmlOptions& opts) {
  const fs::path dir = openml_cache_dir(opts);
  if (fs::exists(dir / (std::to_string(dataset_id) + ".arff"))) return true;
  if (opts.offline) return false;
  std::string body, err;
  return http_get(opts.base_url + "/api/v1/json/data/" +
                      std::to_string(dataset_id),
                  &body, &err);
}

Dataset fetch_openml(int dataset_id, const OpenmlOptions& opts) {
  const fs::path dir = openml_cache_dir(opts);
  const fs::path arff_path = dir / (std::to_string(dataset_id) + ".arff");
  const fs::path meta_path = dir / (std::to_string(dataset_id) + ".meta.json");

  std::string arff, name, label_column;
  if (fs::exists(arff_path)) {
    arff = read_file(arff_path);
    name = "openml-" + std::to_string(dataset_id);
    label_column = "class";
    if (fs::exists(meta_path)) {
      const nlohmann::json meta = nlohmann::json::parse(read_file(meta_path));
      name = meta.value("name", name);
      label_column = meta.value("label_column", label_column);
    }
  } else {
    if (opts.offline)
      throw std::runtime_error("openml: dataset " + std::to_string(dataset_id) +
                               " not cached and offline mode is set");
    std::string meta_body, err;
    const std::string meta_url =
        opts.base_url + "/api/v1/json/data/" + std::to_string(dataset_id);
    if (!http_get(meta_url, &meta_body, &err))
      throw std::runtime_error("openml: metadata fetch failed (" + err +
                               ") and no cache at " + arff_path.string());
    const nlohmann::json meta = nlohmann::json::parse(meta_body);
    const auto& desc = meta.at("data_set_description");
    name = desc.value("name", "openml-" + std::to_string(dataset_id));
    label_column = desc.value("default_target_attribute", "class");
    // Multi-target descriptions list columns comma-separated; use the first.
    if (const auto comma = label_column.find(','); comma != std::string::npos)
      label_column = label_column.substr(0, comma);
    const std::string data_url = desc.value("url", "");
    if (data_url.empty())
      throw std::runtime_error("openml: no data URL for dataset " +
                               std::to_string(dataset_id));
    if (!http_get(data_url, &arff, &err))
      throw std::runtime_error("openml: data fetch failed: " + err);

    fs::create_directories(dir);
    write_file(arff_path, arff);
    const nlohmann::json cache_meta{{"name", name},
                                    {"label_column", label_column},
                                    {"url", data_url}};
    write_file(meta_path, cache_meta.dump(2) + "\n");
  }

  std::string relation;
  RawTable table = parse_arff(arff_path.string(), &relation);
  if (!fs::exists(meta_path) && !relation.empty()) name = relation;

  // Label column names occasionally differ in case.
  auto matches = [&](const std::string& col) {
    if (col == label_column) return true;
    if (col.size() != label_column.size()) return false;
    for (std::size_t i = 0; i < col.size(); ++i)
      if (std::tolower(static_cast<unsigned char>(col[i])) !=
          std::tolower(static_cast<unsigned char>(label_column[i])))
        return false;
    return true;
  };
  std::string resolved = label_column;
  for (const auto& col : table.columns)
    if (matches(col)) {
      resolved = col;
      break;
    }
  return build_dataset(name, table, resolved);
}

}  // namespace evossl
