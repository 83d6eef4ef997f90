#include "tabprobe/variants.hpp"

#include <algorithm>
#include <cstdio>

#include "tabprobe/error.hpp"
#include "tabprobe/kernels.hpp"

namespace tabprobe {

Dataset make_like(const Dataset& ds, std::uint64_t seed) {
  if (ds.variant != Variant::Real) throw ConfigError("make_like expects the real variant of '" + ds.source_id + "'");
  const auto marginals = kernels::column_marginals(ds);
  for (const auto& m : marginals) {
    if (m.total == 0) throw DataError("column '" + m.column.name + "' has no observed values to resample");
  }
  const auto columns = kernels::resample_columns(marginals, ds.row_count(), seed);

  Dataset like;
  like.schema = ds.schema;
  like.source_id = ds.source_id;
  like.variant = Variant::Like;
  like.rows.assign(ds.row_count(), Record(ds.column_count()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (std::size_t i = 0; i < columns[j].size(); ++i) like.rows[i][j] = columns[j][i];
  }
  return like;
}

std::string obfuscated_column_name(std::size_t position) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%02zu", position + 1);
  return buf;
}

std::string obfuscated_token(std::size_t ordinal) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%02zu", ordinal);
  return buf;
}

void ObfuscationMap::add_column(const std::string& original, const std::string& renamed) {
  if (column_forward_.contains(original)) throw DataError("column '" + original + "' mapped twice");
  if (column_inverse_.contains(renamed)) throw DataError("column symbol '" + renamed + "' used twice");
  columns_.emplace_back(original, renamed);
  column_forward_.emplace(original, renamed);
  column_inverse_.emplace(renamed, original);
}

void ObfuscationMap::add_value_column(const std::string& original_column) {
  if (values_.try_emplace(original_column).second) value_order_.push_back(original_column);
}

void ObfuscationMap::add_value(const std::string& original_column, const std::string& token,
                               const std::string& symbol) {
  add_value_column(original_column);
  auto& vm = values_.at(original_column);
  if (vm.forward.contains(token)) throw DataError("token '" + token + "' of column '" + original_column + "' mapped twice");
  if (vm.inverse.contains(symbol)) throw DataError("symbol '" + symbol + "' of column '" + original_column + "' used twice");
  vm.entries.emplace_back(token, symbol);
  vm.forward.emplace(token, symbol);
  vm.inverse.emplace(symbol, token);
}

const std::string& ObfuscationMap::column_name(const std::string& original) const {
  const auto it = column_forward_.find(original);
  if (it == column_forward_.end()) throw DataError("obfuscation map has no column '" + original + "'");
  return it->second;
}

const std::string& ObfuscationMap::original_column_name(const std::string& renamed) const {
  const auto it = column_inverse_.find(renamed);
  if (it == column_inverse_.end()) throw DataError("obfuscation map has no column symbol '" + renamed + "'");
  return it->second;
}

bool ObfuscationMap::has_value_map(const std::string& original_column) const {
  return values_.contains(original_column);
}

const std::string& ObfuscationMap::encode(const std::string& original_column, const std::string& token) const {
  const auto vm = values_.find(original_column);
  if (vm == values_.end()) throw DataError("obfuscation map has no values for column '" + original_column + "'");
  const auto it = vm->second.forward.find(token);
  if (it == vm->second.forward.end()) {
    throw DataError("unknown token '" + token + "' in column '" + original_column + "'");
  }
  return it->second;
}

const std::string& ObfuscationMap::decode(const std::string& original_column, const std::string& symbol) const {
  const auto vm = values_.find(original_column);
  if (vm == values_.end()) throw DataError("obfuscation map has no values for column '" + original_column + "'");
  const auto it = vm->second.inverse.find(symbol);
  if (it == vm->second.inverse.end()) {
    throw DataError("unknown symbol '" + symbol + "' in column '" + original_column + "'");
  }
  return it->second;
}

nlohmann::ordered_json ObfuscationMap::to_json() const {
  nlohmann::ordered_json doc;
  doc["columns"] = nlohmann::ordered_json::object();
  for (const auto& [orig, renamed] : columns_) doc["columns"][orig] = renamed;
  doc["values"] = nlohmann::ordered_json::object();
  for (const auto& col : value_order_) {
    auto& out = doc["values"][col];
    out = nlohmann::ordered_json::object();
    for (const auto& [token, symbol] : values_.at(col).entries) out[token] = symbol;
  }
  return doc;
}

ObfuscationMap ObfuscationMap::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("columns") || !doc["columns"].is_object()) {
    throw DataError("obfuscation map: missing 'columns' object");
  }
  // nlohmann::json sorts keys, so restore schema order from the fNN symbols.
  std::vector<std::pair<std::string, std::string>> cols;
  for (const auto& [orig, renamed] : doc["columns"].items()) cols.emplace_back(orig, renamed.get<std::string>());
  std::stable_sort(cols.begin(), cols.end(), [](const auto& a, const auto& b) {
    if (a.second.size() != b.second.size()) return a.second.size() < b.second.size();
    return a.second < b.second;
  });
  ObfuscationMap map;
  for (const auto& [orig, renamed] : cols) map.add_column(orig, renamed);
  if (doc.contains("values")) {
    if (!doc["values"].is_object()) throw DataError("obfuscation map: 'values' must be an object");
    for (const auto& [col, entries] : doc["values"].items()) {
      if (!map.column_forward_.contains(col)) throw DataError("obfuscation map: values for unknown column '" + col + "'");
    }
    for (const auto& [col, renamed] : cols) {
      if (!doc["values"].contains(col)) continue;
      const auto& entries = doc["values"][col];
      map.add_value_column(col);
      std::vector<std::pair<std::string, std::string>> vals;
      for (const auto& [token, symbol] : entries.items()) vals.emplace_back(token, symbol.get<std::string>());
      std::stable_sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) {
        if (a.second.size() != b.second.size()) return a.second.size() < b.second.size();
        return a.second < b.second;
      });
      for (const auto& [token, symbol] : vals) map.add_value(col, token, symbol);
    }
  }
  return map;
}

std::pair<Dataset, ObfuscationMap> make_obfuscated(const Dataset& ds, [[maybe_unused]] std::uint64_t seed) {
  if (ds.variant != Variant::Real) {
    throw ConfigError("make_obfuscated expects the real variant of '" + ds.source_id + "'");
  }
  ObfuscationMap map;
  for (const auto& col : ds.schema) {
    map.add_column(col.name, obfuscated_column_name(col.position));
    if (col.kind != ColumnKind::Categorical) continue;
    map.add_value_column(col.name);
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& row : ds.rows) {
      const auto& cell = row[col.position];
      if (cell.is_missing()) continue;
      if (seen.try_emplace(cell.token(), seen.size() + 1).second) {
        map.add_value(col.name, cell.token(), obfuscated_token(seen.size()));
      }
    }
  }
  return {apply_map(map, ds), std::move(map)};
}

namespace {

template <typename ColumnFn, typename TokenFn>
Dataset remap(const Dataset& ds, Variant variant, ColumnFn&& column_of, TokenFn&& token_of) {
  Dataset out;
  out.source_id = ds.source_id;
  out.variant = variant;
  out.schema.reserve(ds.schema.size());
  std::vector<std::string> originals;
  for (const auto& col : ds.schema) {
    auto [name, original] = column_of(col.name);
    out.schema.push_back({std::move(name), col.kind, col.position});
    originals.push_back(std::move(original));
  }
  out.rows.reserve(ds.rows.size());
  for (const auto& row : ds.rows) {
    Record rec;
    rec.reserve(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto& cell = row[j];
      if (cell.is_categorical()) {
        rec.push_back(CellValue::categorical(token_of(originals[j], cell.token())));
      } else {
        rec.push_back(cell);
      }
    }
    out.rows.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

Dataset apply_map(const ObfuscationMap& map, const Dataset& ds) {
  return remap(
      ds, Variant::Obf,
      [&](const std::string& name) { return std::pair{map.column_name(name), name}; },
      [&](const std::string& original_column, const std::string& token) { return map.encode(original_column, token); });
}

Dataset invert_map(const ObfuscationMap& map, const Dataset& ds) {
  return remap(
      ds, Variant::Real,
      [&](const std::string& name) {
        const auto& original = map.original_column_name(name);
        return std::pair{original, original};
      },
      [&](const std::string& original_column, const std::string& symbol) {
        return map.decode(original_column, symbol);
      });
}

}  // namespace tabprobe
