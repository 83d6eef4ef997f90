#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabprobe/config.hpp"

namespace tabprobe {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfigError = 2,
  kExitPartialFailure = 3,
  kExitEndpointFailure = 4,
};

/// Per-run state persisted as <run_dir>/manifest.json, rewritten atomically
/// after every completed stage or probe file.
struct RunManifest {
  std::string run_id;
  std::string config_digest;
  nlohmann::ordered_json stages = nlohmann::ordered_json::object();
  nlohmann::ordered_json probe_counts = nlohmann::ordered_json::object();
  nlohmann::ordered_json trial_counts = nlohmann::ordered_json::object();
  nlohmann::ordered_json skipped = nlohmann::ordered_json::array();

  bool stage_complete(const std::string& stage) const;
  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

struct StageOutcome {
  int exit_code = kExitOk;
  bool skipped = false;  // stage was already complete
  std::string summary;
};

/// Orchestrates runs/<run_id>/{config.json, manifest.json, data/, probes/, trials/, report.*}.
/// Stages are idempotent: re-invoking a completed stage is a no-op.
class Pipeline {
 public:
  Pipeline(RunConfig config, std::string run_id);

  /// "<first 12 hex of config digest>-<UTC timestamp>".
  static std::string new_run_id(const RunConfig& config);
  /// Most recent run directory created from an identical config.
  static std::optional<std::string> latest_run_id(const RunConfig& config);

  StageOutcome prepare();
  StageOutcome probe();
  /// `oracle` restricts the stage to one configured oracle.
  StageOutcome run(const std::optional<std::string>& oracle = std::nullopt);
  StageOutcome report();
  StageOutcome all(const std::optional<std::string>& oracle = std::nullopt);

  const std::filesystem::path& run_dir() const noexcept { return run_dir_; }
  std::filesystem::path data_dir() const { return run_dir_ / "data"; }
  std::filesystem::path probes_dir() const { return run_dir_ / "probes"; }
  std::filesystem::path trials_dir() const { return run_dir_ / "trials"; }
  const RunManifest& manifest() const noexcept { return manifest_; }
  const RunConfig& config() const noexcept { return config_; }

  /// "<dataset>.<variant>.<task>"
  static std::string stem(const std::string& dataset, Variant variant, Task task);

 private:
  void save_manifest();
  void require_stage(const std::string& stage) const;
  Dataset load_variant(const std::string& dataset, Variant variant) const;
  std::vector<std::string> probe_stems() const;

  RunConfig config_;
  std::string run_id_;
  std::filesystem::path run_dir_;
  RunManifest manifest_;
};

}  // namespace tabprobe
