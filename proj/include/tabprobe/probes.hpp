#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tabprobe/dataset.hpp"
#include "tabprobe/marginal.hpp"

namespace tabprobe {

enum class Task { Completion, Existence };

std::string_view to_string(Task task);
/// Accepts "completion"/"existence" and the report codes "AC"/"AE".
Task parse_task(std::string_view text);
/// "AC" or "AE".
std::string_view metric_code(Task task);

inline constexpr std::size_t kOptionCount = 5;
inline constexpr std::string_view kTemplateVersion = "v1";

/// Number of attributes masked (completion) or perturbed (existence) per
/// record: 20% of the columns, rounded, at least one.
std::size_t attributes_per_record(std::size_t columns) noexcept;

struct CompletionProbe {
  std::string probe_id;
  std::size_t row_index = 0;
  ColumnSpec masked_column;
  Record visible_record;  // masked cell set to Missing; rendered as "?"
  std::array<CellValue, kOptionCount> candidates;
  std::size_t truth_index = 0;
};

struct ExistenceProbe {
  std::string probe_id;
  std::size_t row_index = 0;
  std::array<Record, kOptionCount> versions;
  std::size_t truth_index = 0;
  std::array<std::vector<std::string>, kOptionCount> perturbed_columns;  // empty for the genuine version
};

using Probe = std::variant<CompletionProbe, ExistenceProbe>;

const std::string& probe_id(const Probe& probe);
std::size_t truth_index(const Probe& probe);
std::size_t row_index(const Probe& probe);

struct GenerationConfig {
  std::size_t n_records = 0;
  std::uint64_t seed = 0;
  std::size_t per_record = 0;  // m (completion) or p (existence)
  std::string template_version{kTemplateVersion};
  std::vector<std::string> warnings;
};

struct ProbeSet {
  Task task = Task::Completion;
  std::string dataset_id;
  Variant variant = Variant::Real;
  std::vector<ColumnSpec> schema;
  std::vector<Probe> probes;
  GenerationConfig config;
};

/// One probe per (sampled row, masked column). Masked columns come from the
/// feature pool, alternating categorical and numerical picks while both remain.
ProbeSet gen_completion(const Dataset& ds, const FeaturePool& pool, std::size_t n_records, std::uint64_t seed);

/// One probe per sampled row: the genuine record plus four perturbed copies.
ProbeSet gen_existence(const Dataset& ds, std::size_t n_records, std::uint64_t seed);

/// Probe JSONL line without the truth label.
nlohmann::ordered_json probe_to_json(const ProbeSet& set, const Probe& probe);
nlohmann::ordered_json probe_set_meta(const ProbeSet& set);

struct ProbeFiles {
  std::filesystem::path probes;   // <stem>.probes.jsonl
  std::filesystem::path answers;  // <stem>.answers.jsonl
  std::filesystem::path meta;     // <stem>.meta.json
  static ProbeFiles for_stem(const std::filesystem::path& dir, const std::string& stem);
};

void write_probe_set(const ProbeSet& set, const ProbeFiles& files);
ProbeSet read_probe_set(const ProbeFiles& files);

/// Serialized probes + answers + meta; equal strings mean equal probe sets.
std::string serialize_probe_set(const ProbeSet& set);

}  // namespace tabprobe
