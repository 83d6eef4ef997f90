#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabprobe/dataset.hpp"
#include "tabprobe/oracle.hpp"
#include "tabprobe/probes.hpp"

namespace tabprobe {

struct DatasetSpec {
  std::string id;
  std::filesystem::path csv_path;
  KindHints kind_hints;
  bool semantic = true;
};

struct OracleSpec {
  std::string name;  // report column
  std::string type;  // remote | uniform_random | memorizing | always_first
  EndpointConfig endpoint;  // remote only
  std::uint64_t seed = 0;
  int parallelism = 4;
};

/// Declarative audit configuration (a single JSON document). Relative paths
/// resolve against the config file's directory.
struct RunConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<Variant> variants{Variant::Real, Variant::Like, Variant::Obf};
  std::vector<Task> tasks{Task::Completion, Task::Existence};
  std::size_t n_records = 100;
  std::uint64_t seed = 0;
  std::vector<OracleSpec> oracles;
  double alpha = 0.001;
  std::filesystem::path cache_dir = "cache";
  std::filesystem::path out_dir = "runs";
  bool reveal_dataset_name = true;
  std::string template_version{kTemplateVersion};

  /// Throws ConfigError describing the first problem found.
  static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  void validate() const;
  nlohmann::ordered_json to_json() const;
  /// SHA-256 of the canonical JSON snapshot.
  std::string digest() const;
  bool wants(Variant v) const;
  bool wants(Task t) const;
  const OracleSpec* find_oracle(const std::string& name) const;
};

}  // namespace tabprobe
