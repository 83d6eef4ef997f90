#include "tabprobe/marginal.hpp"

#include <algorithm>
#include <cmath>

#include "tabprobe/error.hpp"
#include "tabprobe/kernels.hpp"

namespace tabprobe {

std::uint64_t Marginal::count_of(const CellValue& value) const {
  const auto it = std::lower_bound(support.begin(), support.end(), value);
  if (it == support.end() || !(*it == value)) return 0;
  return counts[static_cast<std::size_t>(it - support.begin())];
}

Marginal marginal(const Dataset& ds, const ColumnSpec& col) {
  if (col.position >= ds.schema.size() || !(ds.schema[col.position] == col)) {
    throw ConfigError("column '" + col.name + "' is not part of dataset '" + ds.source_id + "'");
  }
  auto m = kernels::detail::tally_column(ds, col.position);
  if (m.total == 0) throw DataError("column '" + col.name + "' has no observed values");
  return m;
}

double entropy_bits(const Marginal& m) {
  if (m.column.kind != ColumnKind::Categorical) {
    throw ConfigError("entropy_bits: column '" + m.column.name + "' is numerical");
  }
  if (m.total == 0) throw ConfigError("entropy_bits: column '" + m.column.name + "' has no observations");
  const double total = static_cast<double>(m.total);
  double h = 0.0;
  for (auto c : m.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h <= 0.0 ? 0.0 : h;
}

double variance(const Marginal& m) {
  if (m.column.kind != ColumnKind::Numerical) {
    throw ConfigError("variance: column '" + m.column.name + "' is categorical");
  }
  if (m.total < 2) throw ConfigError("variance: column '" + m.column.name + "' needs at least 2 observations");
  // Weighted Welford update over (value, count) pairs.
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < m.support.size(); ++i) {
    const double w = static_cast<double>(m.counts[i]);
    const double x = m.support[i].number();
    const double n_new = n + w;
    const double delta = x - mean;
    mean += delta * (w / n_new);
    m2 += w * delta * (x - mean);
    n = n_new;
  }
  return std::max(0.0, m2 / (n - 1.0));
}

CellValue sample_marginal(const Marginal& m, Rng& rng, std::span<const CellValue> exclude) {
  auto excluded = [&](const CellValue& v) { return std::find(exclude.begin(), exclude.end(), v) != exclude.end(); };
  std::uint64_t weight = 0;
  for (std::size_t i = 0; i < m.support.size(); ++i) {
    if (!excluded(m.support[i])) weight += m.counts[i];
  }
  if (weight == 0) {
    throw DataError("column '" + m.column.name + "': no value left to sample after exclusions");
  }
  std::uint64_t r = rng.below(weight);
  for (std::size_t i = 0; i < m.support.size(); ++i) {
    if (excluded(m.support[i])) continue;
    if (r < m.counts[i]) return m.support[i];
    r -= m.counts[i];
  }
  return m.support.back();  // unreachable
}

FeaturePool rank_features(const Dataset& ds) {
  FeaturePool pool;
  const auto marginals = kernels::column_marginals(ds);
  std::vector<std::size_t> cat;
  std::vector<std::size_t> num;
  for (std::size_t j = 0; j < marginals.size(); ++j) {
    const auto& m = marginals[j];
    ColumnEligibility e;
    e.column = ds.schema[j];
    e.distinct = m.distinct();
    if (m.column.kind == ColumnKind::Categorical && m.total > 0) {
      e.stat = entropy_bits(m);
    } else if (m.column.kind == ColumnKind::Numerical && m.total >= 2) {
      e.stat = variance(m);
    }
    if (m.total == 0) {
      e.reason = "no observed values";
    } else if (e.distinct < kMinDistinctForPool) {
      e.reason = "only " + std::to_string(e.distinct) + " distinct values; 5 are needed for 5-way candidates";
    } else {
      e.eligible = true;
      (m.column.kind == ColumnKind::Categorical ? cat : num).push_back(j);
    }
    pool.eligibility.push_back(std::move(e));
  }

  auto rank = [&](std::vector<std::size_t>& idx, std::vector<ColumnSpec>& out) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return *pool.eligibility[a].stat > *pool.eligibility[b].stat;
    });
    for (std::size_t i = 0; i < idx.size() && i < kPoolSizePerKind; ++i) {
      pool.eligibility[idx[i]].pooled = true;
      out.push_back(ds.schema[idx[i]]);
    }
  };
  rank(cat, pool.categorical_top);
  rank(num, pool.numerical_top);
  return pool;
}

FeaturePool select_feature_pool(const Dataset& ds) {
  auto pool = rank_features(ds);
  if (pool.empty()) {
    throw DataError("dataset '" + ds.source_id +
                    "' cannot support 5-way probes: no column has at least 5 distinct observed values");
  }
  return pool;
}

nlohmann::ordered_json schema_dump(const Dataset& ds, const FeaturePool& pool) {
  nlohmann::ordered_json cols = nlohmann::ordered_json::array();
  for (const auto& e : pool.eligibility) {
    nlohmann::ordered_json c;
    c["name"] = e.column.name;
    c["kind"] = std::string(to_string(e.column.kind));
    c["distinct"] = e.distinct;
    c["eligible"] = e.eligible;
    c["pooled"] = e.pooled;
    c["stat"] = e.stat ? nlohmann::ordered_json(*e.stat) : nlohmann::ordered_json(nullptr);
    if (!e.reason.empty()) c["reason"] = e.reason;
    cols.push_back(std::move(c));
  }
  nlohmann::ordered_json doc;
  doc["dataset"] = ds.source_id;
  doc["variant"] = std::string(to_string(ds.variant));
  doc["rows"] = ds.row_count();
  doc["columns"] = std::move(cols);
  return doc;
}

}  // namespace tabprobe
