#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include "tabprobe/error.hpp"
#include "tabprobe/prompt.hpp"

namespace tabprobe {
namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = lower(c);
  return out;
}

std::string_view trim(std::string_view s) {
  auto blank = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && blank(s.front())) s.remove_prefix(1);
  while (!s.empty() && blank(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<std::size_t> letter_index(char c, std::size_t option_count) {
  const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u < 'A' || u >= static_cast<char>('A' + option_count)) return std::nullopt;
  return static_cast<std::size_t>(u - 'A');
}

std::optional<std::size_t> unique(const std::set<std::size_t>& found) {
  if (found.size() == 1) return *found.begin();
  return std::nullopt;
}

// Rule 1: "answer", "option" or "choice", optionally followed by filler such as
// "is", ":" or "(", then a standalone letter.
std::set<std::size_t> keyword_letters(std::string_view text, std::size_t option_count) {
  static constexpr std::string_view kKeywords[] = {"answer", "option", "choice"};
  static constexpr std::string_view kFillers[] = {"is", "would be", "will be", "should be", "be"};
  const std::string low = to_lower(text);
  std::set<std::size_t> found;
  for (auto kw : kKeywords) {
    for (std::size_t pos = low.find(kw); pos != std::string::npos; pos = low.find(kw, pos + 1)) {
      if (pos > 0 && std::isalpha(static_cast<unsigned char>(low[pos - 1]))) continue;
      std::size_t i = pos + kw.size();
      while (i < low.size() && std::isalpha(static_cast<unsigned char>(low[i]))) ++i;  // answers, options
      auto skip_punct = [&] {
        while (i < low.size() && (low[i] == ' ' || low[i] == ':' || low[i] == '=' || low[i] == '-' ||
                                  low[i] == '(' || low[i] == '[' || low[i] == '*' || low[i] == '"' ||
                                  low[i] == '\'' || low[i] == '\n' || low[i] == '\t')) {
          ++i;
        }
      };
      skip_punct();
      for (auto filler : kFillers) {
        if (low.compare(i, filler.size(), filler) == 0 &&
            (i + filler.size() >= low.size() || !is_word_char(low[i + filler.size()]))) {
          i += filler.size();
          skip_punct();
          break;
        }
      }
      if (i < low.size() && (i + 1 >= low.size() || !is_word_char(low[i + 1]))) {
        // A lowercase "a" followed by another word is the article, not option A.
        const bool article = text[i] == 'a' && i + 2 < low.size() && low[i + 1] == ' ' &&
                             std::isalpha(static_cast<unsigned char>(low[i + 2]));
        if (article) continue;
        if (auto idx = letter_index(low[i], option_count)) found.insert(*idx);
      }
    }
  }
  return found;
}

// Rule 2: standalone letters. Lowercase letters only count when they are the
// whole response, so the article "a" in prose does not read as option A.
std::set<std::size_t> standalone_letters(std::string_view text, std::size_t option_count) {
  std::set<std::size_t> found;
  std::string stripped;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) stripped.push_back(c);
  }
  if (stripped.size() == 1) {
    if (auto idx = letter_index(stripped[0], option_count)) found.insert(*idx);
    return found;
  }
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c < 'A' || c > 'Z') continue;
    const bool left = i == 0 || !is_word_char(text[i - 1]);
    const bool right = i + 1 >= text.size() || !is_word_char(text[i + 1]);
    if (!left || !right) continue;
    // "A." at a sentence start followed by more words still counts; an apostrophe
    // suffix ("A's") does not.
    if (i + 1 < text.size() && text[i + 1] == '\'') continue;
    if (auto idx = letter_index(c, option_count)) found.insert(*idx);
  }
  return found;
}

// Rule 3: the response repeats exactly one option's value.
std::optional<std::size_t> verbatim_option(std::string_view text, std::span<const std::string> options) {
  const auto body = trim(text);
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (!options[i].empty() && body == options[i]) {
      // Exact match wins unless another option has the same text (cannot happen for distinct candidates).
      return i;
    }
  }
  std::set<std::size_t> found;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (options[i].empty()) continue;
    const auto pos = body.find(options[i]);
    if (pos == std::string_view::npos) continue;
    const bool left = pos == 0 || !is_word_char(body[pos - 1]);
    const auto end = pos + options[i].size();
    const bool right = end >= body.size() || !is_word_char(body[end]);
    if (left && right) found.insert(i);
  }
  return unique(found);
}

}  // namespace

std::optional<std::size_t> parse_answer(std::string_view response, std::size_t option_count,
                                        std::span<const std::string> option_texts) {
  if (option_count < 2 || option_count > 5) throw ConfigError("parse_answer: option_count must lie in [2, 5]");
  const auto keyword = keyword_letters(response, option_count);
  if (!keyword.empty()) return unique(keyword);
  const auto letters = standalone_letters(response, option_count);
  if (!letters.empty()) return unique(letters);
  if (!option_texts.empty()) return verbatim_option(response, option_texts.first(std::min(option_texts.size(), option_count)));
  return std::nullopt;
}

}  // namespace tabprobe
