#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace tabprobe {

enum class ColumnKind { Categorical, Numerical };

enum class Variant { Real, Like, Obf };

std::string_view to_string(ColumnKind kind);
std::string_view to_string(Variant variant);
ColumnKind parse_column_kind(std::string_view text);
Variant parse_variant(std::string_view text);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Categorical;
  std::size_t position = 0;

  bool operator==(const ColumnSpec&) const = default;
};

/// One cell: a categorical token, a finite number, or Missing.
class CellValue {
 public:
  CellValue() = default;

  static CellValue missing() { return {}; }
  static CellValue categorical(std::string token);
  /// Throws DataError for NaN or infinities.
  static CellValue numerical(double value);

  bool is_missing() const noexcept { return std::holds_alternative<std::monostate>(value_); }
  bool is_categorical() const noexcept { return std::holds_alternative<std::string>(value_); }
  bool is_numerical() const noexcept { return std::holds_alternative<double>(value_); }

  const std::string& token() const { return std::get<std::string>(value_); }
  double number() const { return std::get<double>(value_); }

  /// Display text: the token, the shortest round-trip decimal, or "" for Missing.
  std::string text() const;

  bool operator==(const CellValue&) const = default;
  /// Missing < numbers < tokens; numbers by value, tokens bytewise.
  std::strong_ordering operator<=>(const CellValue& other) const;

 private:
  std::variant<std::monostate, double, std::string> value_;
};

using Record = std::vector<CellValue>;

/// Shortest decimal string that parses back to exactly `value`.
std::string format_number(double value);

struct Dataset {
  std::vector<ColumnSpec> schema;
  std::vector<Record> rows;
  std::string source_id;
  Variant variant = Variant::Real;

  std::size_t column_count() const noexcept { return schema.size(); }
  std::size_t row_count() const noexcept { return rows.size(); }
  /// Throws ConfigError naming the column when absent.
  const ColumnSpec& column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

using KindHints = std::map<std::string, ColumnKind, std::less<>>;

/// Parses CSV text with a header row. Empty fields and "?" are Missing.
Dataset parse_csv(std::string_view text, const KindHints& hints = {}, std::string source_id = {});
Dataset load_csv(const std::filesystem::path& path, const KindHints& hints = {}, std::string source_id = {});

std::string to_csv(const Dataset& ds);
void write_csv(const std::filesystem::path& path, const Dataset& ds);

/// Kind map of every column, suitable as hints when reloading a written CSV.
KindHints kinds_of(const Dataset& ds);

nlohmann::json cell_to_json(const CellValue& cell);
CellValue cell_from_json(const nlohmann::json& value, ColumnKind kind);

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace tabprobe

template <>
struct std::hash<tabprobe::CellValue> {
  std::size_t operator()(const tabprobe::CellValue& cell) const noexcept;
};
