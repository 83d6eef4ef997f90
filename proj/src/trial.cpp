#include "tabprobe/trial.hpp"

#include <fstream>

#include "tabprobe/error.hpp"
#include "tabprobe/log.hpp"

namespace tabprobe {

std::string_view to_string(TrialStatus status) {
  switch (status) {
    case TrialStatus::Answered: return "answered";
    case TrialStatus::Unparseable: return "unparseable";
    case TrialStatus::Failed: return "failed";
  }
  return "failed";
}

TrialStatus parse_trial_status(std::string_view text) {
  if (text == "answered") return TrialStatus::Answered;
  if (text == "unparseable") return TrialStatus::Unparseable;
  if (text == "failed") return TrialStatus::Failed;
  throw DataError("unknown trial status '" + std::string(text) + "'");
}

nlohmann::ordered_json trial_to_json(const TrialRecord& t) {
  nlohmann::ordered_json j;
  j["probe_id"] = t.probe_id;
  j["dataset"] = t.dataset_id;
  j["variant"] = std::string(to_string(t.variant));
  j["task"] = std::string(to_string(t.task));
  j["model"] = t.model_name;
  j["truth_index"] = t.truth_index;
  j["answer_index"] = t.answer_index ? nlohmann::ordered_json(*t.answer_index) : nlohmann::ordered_json(nullptr);
  j["status"] = std::string(to_string(t.status));
  j["correct"] = t.correct;
  j["latency_ms"] = t.latency_ms;
  j["attempt_count"] = t.attempt_count;
  j["option_count"] = t.option_count;
  j["response"] = t.response;
  if (!t.error.empty()) j["error"] = t.error;
  return j;
}

TrialRecord trial_from_json(const nlohmann::json& j) {
  TrialRecord t;
  t.probe_id = j.at("probe_id").get<std::string>();
  t.dataset_id = j.at("dataset").get<std::string>();
  t.variant = parse_variant(j.at("variant").get<std::string>());
  t.task = parse_task(j.at("task").get<std::string>());
  t.model_name = j.at("model").get<std::string>();
  t.truth_index = j.at("truth_index").get<std::size_t>();
  if (!j.at("answer_index").is_null()) t.answer_index = j.at("answer_index").get<std::size_t>();
  t.status = parse_trial_status(j.at("status").get<std::string>());
  t.correct = j.at("correct").get<bool>();
  t.latency_ms = j.at("latency_ms").get<std::int64_t>();
  t.attempt_count = j.at("attempt_count").get<int>();
  t.option_count = j.value("option_count", kOptionCount);
  t.response = j.value("response", std::string{});
  t.error = j.value("error", std::string{});
  return t;
}

std::vector<TrialRecord> read_trials(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trial log '" + path.string() + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(std::move(line));
  }
  std::vector<TrialRecord> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(trial_from_json(nlohmann::json::parse(lines[i])));
    } catch (const std::exception& e) {
      if (i + 1 == lines.size()) {
        log_warning("ignoring truncated last line of " + path.string());
        break;
      }
      throw DataError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::string trials_to_jsonl(const std::vector<TrialRecord>& trials) {
  std::string out;
  for (const auto& t : trials) out += trial_to_json(t).dump() + "\n";
  return out;
}

}  // namespace tabprobe
