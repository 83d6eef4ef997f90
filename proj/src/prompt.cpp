#include "tabprobe/prompt.hpp"

#include "tabprobe/error.hpp"
#include "tabprobe/hash.hpp"

namespace tabprobe {

char option_letter(std::size_t index) { return static_cast<char>('A' + index); }

std::string render_record(const Record& record, std::span<const ColumnSpec> schema, std::optional<std::size_t> masked) {
  std::string out;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (j) out += "; ";
    out += schema[j].name;
    out += " = ";
    if (masked && *masked == j) {
      out += "?";
    } else if (record[j].is_missing()) {
      out += kMissingText;
    } else {
      out += record[j].text();
    }
  }
  return out;
}

namespace {

constexpr std::string_view kSystemText =
    "You are an assistant answering multiple-choice questions about tabular datasets. "
    "Reply with the letter of the correct option.";

std::string dataset_phrase(const ProbeSet& set, const PromptOptions& options) {
  if (options.reveal_dataset_name) return "the tabular dataset \"" + set.dataset_id + "\"";
  return "a tabular dataset";
}

}  // namespace

PromptText render_prompt(const Probe& probe, const ProbeSet& set, const PromptOptions& options) {
  if (options.template_version != kTemplateVersion) {
    throw ConfigError("unknown prompt template version '" + options.template_version + "'");
  }
  PromptText prompt;
  prompt.template_version = options.template_version;
  prompt.system_text = std::string(kSystemText);
  prompt.option_count = kOptionCount;

  std::string user;
  if (const auto* c = std::get_if<CompletionProbe>(&probe)) {
    user += "The following record comes from " + dataset_phrase(set, options) +
            ". The value of one attribute has been replaced by \"?\".\n\n";
    user += "Record: " + render_record(c->visible_record, set.schema, c->masked_column.position) + "\n\n";
    user += "Which value belongs in place of \"?\" for the attribute \"" + c->masked_column.name + "\"?\n";
    for (std::size_t i = 0; i < kOptionCount; ++i) {
      prompt.option_texts.push_back(c->candidates[i].text());
      user += std::string(1, option_letter(i)) + ") " + prompt.option_texts.back() + "\n";
    }
    user += "\nAnswer with a single letter A–E and nothing else.";
  } else {
    const auto& e = std::get<ExistenceProbe>(probe);
    user += "Below are five versions of a record from " + dataset_phrase(set, options) +
            ". Exactly one version is the genuine record as it appears in the dataset; "
            "the other four have been altered.\n\n";
    for (std::size_t i = 0; i < kOptionCount; ++i) {
      prompt.option_texts.push_back(render_record(e.versions[i], set.schema));
      user += std::string(1, option_letter(i)) + ") " + prompt.option_texts.back() + "\n";
    }
    user += "\nWhich version is the genuine record from the dataset? "
            "Answer with a single letter A–E and nothing else.";
  }
  prompt.user_text = std::move(user);
  return prompt;
}

std::string prompt_fingerprint(const PromptText& prompt) {
  std::string buf = prompt.template_version;
  buf.push_back('\0');
  buf += prompt.system_text;
  buf.push_back('\0');
  buf += prompt.user_text;
  return sha256_hex(buf);
}

}  // namespace tabprobe
