#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabprobe/dataset.hpp"
#include "tabprobe/rng.hpp"

namespace tabprobe {

/// Empirical distribution of one column's non-missing cells.
///
/// `support` is kept in canonical order (numbers ascending, tokens bytewise) so
/// the marginal and any sampling sequence drawn from it do not depend on row order.
struct Marginal {
  ColumnSpec column;
  std::vector<CellValue> support;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  std::uint64_t missing = 0;

  std::size_t distinct() const noexcept { return support.size(); }
  /// Count of `value`, 0 if outside the support.
  std::uint64_t count_of(const CellValue& value) const;
};

/// Throws DataError when the column has no observed values.
Marginal marginal(const Dataset& ds, const ColumnSpec& col);

/// Shannon entropy in bits. Categorical marginals only.
double entropy_bits(const Marginal& m);

/// Sample variance (n-1 denominator). Numerical marginals with total >= 2 only.
double variance(const Marginal& m);

/// Draws a value proportionally to its count, restricted to support \ exclude.
/// Never returns Missing. Throws DataError when the restricted support is empty.
CellValue sample_marginal(const Marginal& m, Rng& rng, std::span<const CellValue> exclude = {});

/// Columns that can host 5-way probes need at least this many distinct values.
inline constexpr std::size_t kMinDistinctForPool = 5;
inline constexpr std::size_t kPoolSizePerKind = 4;

struct ColumnEligibility {
  ColumnSpec column;
  std::size_t distinct = 0;
  bool eligible = false;
  bool pooled = false;
  std::optional<double> stat;  // entropy (bits) or variance
  std::string reason;          // set when not eligible
};

struct FeaturePool {
  std::vector<ColumnSpec> categorical_top;
  std::vector<ColumnSpec> numerical_top;
  std::vector<ColumnEligibility> eligibility;

  std::size_t size() const noexcept { return categorical_top.size() + numerical_top.size(); }
  bool empty() const noexcept { return size() == 0; }
};

/// Ranks eligibility without throwing on an empty pool.
FeaturePool rank_features(const Dataset& ds);
/// Same as rank_features but throws DataError when no column can host a probe.
FeaturePool select_feature_pool(const Dataset& ds);

/// {columns:[{name,kind,distinct,eligible,stat,...}]}
nlohmann::ordered_json schema_dump(const Dataset& ds, const FeaturePool& pool);

}  // namespace tabprobe
