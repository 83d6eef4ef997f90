#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabprobe/probes.hpp"

namespace tabprobe {

struct PromptText {
  std::string system_text;
  std::string user_text;
  std::size_t option_count = kOptionCount;
  std::string template_version{kTemplateVersion};
  /// Rendered option bodies, A first; used for verbatim-value answer matching.
  std::vector<std::string> option_texts;
};

struct PromptOptions {
  bool reveal_dataset_name = true;
  std::string template_version{kTemplateVersion};
};

/// Placeholder for a Missing cell that is part of the record (not the blank).
inline constexpr std::string_view kMissingText = "NA";

/// "name = value; name = value" in schema order; `masked` renders as "name = ?".
std::string render_record(const Record& record, std::span<const ColumnSpec> schema,
                          std::optional<std::size_t> masked = std::nullopt);

/// Zero-shot multiple-choice prompt for a probe. Throws ConfigError for an
/// unknown template version.
PromptText render_prompt(const Probe& probe, const ProbeSet& set, const PromptOptions& options = {});

/// Appended to the user text on the single re-query after an unparseable answer.
inline constexpr std::string_view kStrictSuffix = "\n\nReply with one letter only.";

/// SHA-256 over template version, system text and user text.
std::string prompt_fingerprint(const PromptText& prompt);

/// Option index parsed from a model response; nullopt means Unparseable.
///
/// Rules, in order: an "answer/option/choice ... X" phrase; a standalone
/// option letter; a verbatim option value. Each rule must resolve to a single
/// option or the response falls through / is Unparseable.
std::optional<std::size_t> parse_answer(std::string_view response, std::size_t option_count,
                                        std::span<const std::string> option_texts = {});

char option_letter(std::size_t index);

}  // namespace tabprobe
