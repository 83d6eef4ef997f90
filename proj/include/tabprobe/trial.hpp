#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabprobe/dataset.hpp"
#include "tabprobe/probes.hpp"

namespace tabprobe {

enum class TrialStatus { Answered, Unparseable, Failed };

std::string_view to_string(TrialStatus status);
TrialStatus parse_trial_status(std::string_view text);

/// One model answer to one probe. correct == (answer_index == truth_index);
/// Unparseable and Failed trials are never correct.
struct TrialRecord {
  std::string probe_id;
  std::string dataset_id;
  Variant variant = Variant::Real;
  Task task = Task::Completion;
  std::string model_name;
  std::size_t truth_index = 0;
  std::optional<std::size_t> answer_index;
  TrialStatus status = TrialStatus::Answered;
  bool correct = false;
  std::int64_t latency_ms = 0;
  int attempt_count = 0;
  std::size_t option_count = kOptionCount;
  std::string response;
  std::string error;

  bool operator==(const TrialRecord&) const = default;
};

nlohmann::ordered_json trial_to_json(const TrialRecord& trial);
TrialRecord trial_from_json(const nlohmann::json& j);

/// Reads a JSONL trial log. A truncated trailing line (interrupted write) is skipped.
std::vector<TrialRecord> read_trials(const std::filesystem::path& path);
std::string trials_to_jsonl(const std::vector<TrialRecord>& trials);

}  // namespace tabprobe
