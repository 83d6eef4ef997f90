#include "tabprobe/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "tabprobe/error.hpp"

namespace tabprobe {

std::string_view to_string(ColumnKind kind) {
  return kind == ColumnKind::Numerical ? "numerical" : "categorical";
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::Real: return "real";
    case Variant::Like: return "like";
    case Variant::Obf: return "obf";
  }
  return "real";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "numerical") return ColumnKind::Numerical;
  if (text == "categorical") return ColumnKind::Categorical;
  throw ConfigError("unknown column kind '" + std::string(text) + "'");
}

Variant parse_variant(std::string_view text) {
  if (text == "real") return Variant::Real;
  if (text == "like") return Variant::Like;
  if (text == "obf") return Variant::Obf;
  throw ConfigError("unknown variant '" + std::string(text) + "'");
}

CellValue CellValue::categorical(std::string token) {
  CellValue c;
  c.value_ = std::move(token);
  return c;
}

CellValue CellValue::numerical(double value) {
  if (!std::isfinite(value)) throw DataError("numerical cell must be finite");
  CellValue c;
  c.value_ = value;
  return c;
}

std::string CellValue::text() const {
  if (is_categorical()) return token();
  if (is_numerical()) return format_number(number());
  return {};
}

std::strong_ordering CellValue::operator<=>(const CellValue& other) const {
  if (value_.index() != other.value_.index()) return value_.index() <=> other.value_.index();
  if (is_numerical()) {
    const double a = number();
    const double b = other.number();
    if (a < b) return std::strong_ordering::less;
    if (b < a) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  if (is_categorical()) return token().compare(other.token()) <=> 0;
  return std::strong_ordering::equal;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

const ColumnSpec& Dataset::column(std::string_view name) const {
  for (const auto& c : schema) {
    if (c.name == name) return c;
  }
  throw ConfigError("unknown column '" + std::string(name) + "'");
}

bool Dataset::has_column(std::string_view name) const {
  for (const auto& c : schema) {
    if (c.name == name) return true;
  }
  return false;
}

namespace {

struct RawRow {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// RFC-4180 tokenizer. Unquoted fields are trimmed of blanks; quoted fields are kept verbatim.
std::vector<RawRow> tokenize(std::string_view text) {
  std::vector<RawRow> rows;
  std::size_t i = 0;
  std::size_t line = 1;
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;

  while (i < text.size()) {
    RawRow row;
    row.line = line;
    bool blank = true;
    for (;;) {
      std::string field;
      bool quoted = false;
      std::size_t start = i;
      while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
      if (i < text.size() && text[i] == '"') {
        quoted = true;
        ++i;
        for (;;) {
          if (i >= text.size()) throw DataError("unterminated quoted field starting on line " + std::to_string(row.line));
          const char c = text[i++];
          if (c == '"') {
            if (i < text.size() && text[i] == '"') {
              field.push_back('"');
              ++i;
            } else {
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.push_back(c);
          }
        }
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
        if (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          throw DataError("unexpected character after quoted field on line " + std::to_string(line));
        }
      } else {
        i = start;
        const std::size_t begin = i;
        while (i < text.size() && text[i] != ',' && text[i] != '\n' && text[i] != '\r') ++i;
        field = std::string(trim(text.substr(begin, i - begin)));
      }
      if (quoted || !field.empty()) blank = false;
      row.fields.push_back(std::move(field));
      if (i < text.size() && text[i] == ',') {
        blank = false;
        ++i;
        continue;
      }
      break;
    }
    if (i < text.size() && text[i] == '\r') ++i;
    if (i < text.size() && text[i] == '\n') {
      ++i;
      ++line;
    }
    if (!blank) rows.push_back(std::move(row));
  }
  return rows;
}

bool is_missing_text(std::string_view s) { return s.empty() || s == "?"; }

bool parse_finite(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto result = std::from_chars(s.data(), s.data() + s.size(), out);
  return result.ec == std::errc{} && result.ptr == s.data() + s.size() && std::isfinite(out);
}

bool needs_quotes(std::string_view s) {
  if (s.empty()) return false;
  if (s.front() == ' ' || s.back() == ' ' || s.front() == '\t' || s.back() == '\t') return true;
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

}  // namespace

Dataset parse_csv(std::string_view text, const KindHints& hints, std::string source_id) {
  auto raw = tokenize(text);
  if (raw.empty()) throw DataError("CSV has no header row");

  Dataset ds;
  ds.source_id = std::move(source_id);
  ds.variant = Variant::Real;

  const auto& header = raw.front().fields;
  std::unordered_set<std::string> seen;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j].empty()) throw DataError("empty header name in column " + std::to_string(j + 1));
    if (!seen.insert(header[j]).second) throw DataError("duplicate header name '" + header[j] + "'");
    ds.schema.push_back({header[j], ColumnKind::Categorical, j});
  }
  for (const auto& [name, kind] : hints) {
    if (!seen.contains(name)) throw DataError("kind hint names unknown column '" + name + "'");
  }

  const std::size_t width = header.size();
  for (std::size_t r = 1; r < raw.size(); ++r) {
    if (raw[r].fields.size() != width) {
      throw DataError("ragged row on line " + std::to_string(raw[r].line) + ": expected " +
                      std::to_string(width) + " fields, found " + std::to_string(raw[r].fields.size()));
    }
  }

  for (std::size_t j = 0; j < width; ++j) {
    bool numeric = true;
    for (std::size_t r = 1; r < raw.size() && numeric; ++r) {
      const auto& f = raw[r].fields[j];
      double v;
      if (!is_missing_text(f) && !parse_finite(f, v)) numeric = false;
    }
    ColumnKind kind = numeric ? ColumnKind::Numerical : ColumnKind::Categorical;
    if (auto it = hints.find(ds.schema[j].name); it != hints.end()) {
      if (it->second == ColumnKind::Numerical && !numeric) {
        throw DataError("column '" + ds.schema[j].name + "' hinted numerical but holds non-numeric values");
      }
      kind = it->second;
    }
    ds.schema[j].kind = kind;
  }

  ds.rows.reserve(raw.size() - 1);
  for (std::size_t r = 1; r < raw.size(); ++r) {
    Record rec;
    rec.reserve(width);
    for (std::size_t j = 0; j < width; ++j) {
      const auto& f = raw[r].fields[j];
      if (is_missing_text(f)) {
        rec.push_back(CellValue::missing());
      } else if (ds.schema[j].kind == ColumnKind::Numerical) {
        double v = 0;
        parse_finite(f, v);
        rec.push_back(CellValue::numerical(v));
      } else {
        rec.push_back(CellValue::categorical(f));
      }
    }
    ds.rows.push_back(std::move(rec));
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const KindHints& hints, std::string source_id) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw DataError("cannot read CSV '" + path.string() + "'");
  }
  if (source_id.empty()) source_id = path.stem().string();
  try {
    return parse_csv(text, hints, std::move(source_id));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string to_csv(const Dataset& ds) {
  std::string out;
  auto put = [&out](std::string_view field) {
    if (needs_quotes(field)) {
      out.push_back('"');
      for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
      }
      out.push_back('"');
    } else {
      out.append(field);
    }
  };
  for (std::size_t j = 0; j < ds.schema.size(); ++j) {
    if (j) out.push_back(',');
    put(ds.schema[j].name);
  }
  out.push_back('\n');
  for (const auto& row : ds.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out.push_back(',');
      put(row[j].is_missing() ? std::string_view("?") : std::string_view(row[j].text()));
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  write_file_atomic(path, to_csv(ds));
}

KindHints kinds_of(const Dataset& ds) {
  KindHints hints;
  for (const auto& c : ds.schema) hints.emplace(c.name, c.kind);
  return hints;
}

nlohmann::json cell_to_json(const CellValue& cell) {
  if (cell.is_missing()) return nullptr;
  if (cell.is_numerical()) return cell.number();
  return cell.token();
}

CellValue cell_from_json(const nlohmann::json& value, ColumnKind kind) {
  if (value.is_null()) return CellValue::missing();
  if (kind == ColumnKind::Numerical) {
    if (!value.is_number()) throw DataError("expected a number for a numerical cell, got " + value.dump());
    return CellValue::numerical(value.get<double>());
  }
  if (!value.is_string()) throw DataError("expected a string for a categorical cell, got " + value.dump());
  return CellValue::categorical(value.get<std::string>());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace tabprobe

std::size_t std::hash<tabprobe::CellValue>::operator()(const tabprobe::CellValue& cell) const noexcept {
  if (cell.is_missing()) return 0x9e3779b97f4a7c15ULL;
  if (cell.is_numerical()) {
    const double v = cell.number() == 0.0 ? 0.0 : cell.number();
    return std::hash<double>{}(v) ^ 0x51ed27ULL;
  }
  return std::hash<std::string>{}(cell.token());
}
