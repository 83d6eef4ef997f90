#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabprobe/trial.hpp"

namespace tabprobe {

inline constexpr double kDefaultAlpha = 0.001;

/// One (dataset, variant, task, model) cell of the contamination table.
struct AggregateCell {
  std::string dataset_id;
  Variant variant = Variant::Real;
  Task task = Task::Completion;
  std::string model_name;
  std::uint64_t n = 0;
  std::uint64_t correct_count = 0;
  double accuracy = 0.0;
  double p_value = 1.0;  // one-sided exact binomial tail vs p0
  double p0 = 0.2;
  bool significant = false;

  bool operator==(const AggregateCell&) const = default;
};

/// Groups trials by (dataset, variant, task, model). Unparseable and Failed
/// trials count in n. Output is sorted by dataset, variant (real < like < obf),
/// task (AC < AE), model. Throws DataError for option counts other than 5.
std::vector<AggregateCell> aggregate(const std::vector<TrialRecord>& trials, double alpha = kDefaultAlpha);

enum class ReportFormat { Markdown, Csv, Json };

struct ReportSection {
  std::string title;                  // e.g. "Semantic Dataset"
  std::vector<std::string> datasets;  // in display order
};

struct ReportLayout {
  /// Model column order; models absent from it follow in sorted order.
  std::vector<std::string> models;
  /// Dataset grouping. Empty: one untitled block of all datasets in cell order.
  std::vector<ReportSection> sections;
  /// Extra lines (e.g. skipped probe sets) appended under the markdown table.
  std::vector<std::string> notes;
  double alpha = kDefaultAlpha;
};

std::string render_report(const std::vector<AggregateCell>& cells, ReportFormat format,
                          const ReportLayout& layout = {});

nlohmann::ordered_json cell_to_json(const AggregateCell& cell);
AggregateCell aggregate_cell_from_json(const nlohmann::json& j);
std::vector<AggregateCell> cells_from_json(const nlohmann::json& doc);

/// Accuracy as shown in tables: two decimals.
std::string format_accuracy(double accuracy);

}  // namespace tabprobe
