#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tabprobe/dataset.hpp"

namespace tabprobe {

/// Marginal-resampled copy: same schema and row count, every cell drawn
/// independently from its column's empirical distribution (Missing included).
Dataset make_like(const Dataset& ds, std::uint64_t seed);

/// Bijective renaming of column headers (f01, f02, ...) and, per categorical
/// column, of tokens (c01, c02, ... in order of first appearance).
class ObfuscationMap {
 public:
  void add_column(const std::string& original, const std::string& renamed);
  /// Registers a categorical column's value map (possibly empty).
  void add_value_column(const std::string& original_column);
  void add_value(const std::string& original_column, const std::string& token, const std::string& symbol);

  const std::string& column_name(const std::string& original) const;
  const std::string& original_column_name(const std::string& renamed) const;
  bool has_value_map(const std::string& original_column) const;
  const std::string& encode(const std::string& original_column, const std::string& token) const;
  const std::string& decode(const std::string& original_column, const std::string& symbol) const;

  const std::vector<std::pair<std::string, std::string>>& columns() const noexcept { return columns_; }

  /// {columns:{orig:new}, values:{col:{orig:new}}}
  nlohmann::ordered_json to_json() const;
  static ObfuscationMap from_json(const nlohmann::json& doc);

 private:
  struct ValueMap {
    std::vector<std::pair<std::string, std::string>> entries;
    std::unordered_map<std::string, std::string> forward;
    std::unordered_map<std::string, std::string> inverse;
  };
  std::vector<std::pair<std::string, std::string>> columns_;
  std::unordered_map<std::string, std::string> column_forward_;
  std::unordered_map<std::string, std::string> column_inverse_;
  std::vector<std::string> value_order_;
  std::unordered_map<std::string, ValueMap> values_;
};

/// `seed` is accepted for interface symmetry with make_like; the mapping itself
/// is fully determined by the data.
std::pair<Dataset, ObfuscationMap> make_obfuscated(const Dataset& ds, std::uint64_t seed = 0);

/// Renames columns and tokens of a dataset in the map's domain. Throws DataError
/// naming any column or token the map does not know.
Dataset apply_map(const ObfuscationMap& map, const Dataset& ds);
/// Inverse of apply_map.
Dataset invert_map(const ObfuscationMap& map, const Dataset& ds);

/// "f01", "f02", ... ; 1-based, at least two digits.
std::string obfuscated_column_name(std::size_t position);
std::string obfuscated_token(std::size_t ordinal);

}  // namespace tabprobe
