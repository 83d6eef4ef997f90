#include <algorithm>
#include <map>

#include "tabprobe/binomial.hpp"
#include "tabprobe/kernels.hpp"

namespace tabprobe::kernels {

namespace detail {

Marginal tally_column(const Dataset& ds, std::size_t column) {
  Marginal m;
  m.column = ds.schema.at(column);
  if (m.column.kind == ColumnKind::Numerical) {
    std::vector<double> values;
    values.reserve(ds.rows.size());
    for (const auto& row : ds.rows) {
      const auto& cell = row[column];
      if (cell.is_missing()) {
        ++m.missing;
      } else {
        values.push_back(cell.number());
      }
    }
    std::sort(values.begin(), values.end());
    for (std::size_t i = 0; i < values.size();) {
      std::size_t j = i;
      while (j < values.size() && values[j] == values[i]) ++j;
      m.support.push_back(CellValue::numerical(values[i]));
      m.counts.push_back(j - i);
      i = j;
    }
    m.total = values.size();
  } else {
    std::map<std::string_view, std::uint64_t> counts;
    for (const auto& row : ds.rows) {
      const auto& cell = row[column];
      if (cell.is_missing()) {
        ++m.missing;
      } else {
        ++counts[cell.token()];
        ++m.total;
      }
    }
    for (const auto& [token, count] : counts) {
      m.support.push_back(CellValue::categorical(std::string(token)));
      m.counts.push_back(count);
    }
  }
  return m;
}

std::vector<CellValue> resample_column(const Marginal& m, std::size_t rows, std::uint64_t seed) {
  // Cumulative weights with Missing as a trailing bucket.
  std::vector<std::uint64_t> cumulative;
  cumulative.reserve(m.counts.size());
  std::uint64_t acc = 0;
  for (auto c : m.counts) cumulative.push_back(acc += c);
  const std::uint64_t weight = acc + m.missing;

  std::vector<CellValue> out;
  out.reserve(rows);
  Rng rng(seed);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::uint64_t r = rng.below(weight);
    if (r >= acc) {
      out.push_back(CellValue::missing());
      continue;
    }
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    out.push_back(m.support[static_cast<std::size_t>(it - cumulative.begin())]);
  }
  return out;
}

}  // namespace detail

namespace serial {

std::vector<Marginal> column_marginals(const Dataset& ds) {
  std::vector<Marginal> out;
  out.reserve(ds.schema.size());
  for (std::size_t j = 0; j < ds.schema.size(); ++j) out.push_back(detail::tally_column(ds, j));
  return out;
}

std::vector<std::vector<CellValue>> resample_columns(std::span<const Marginal> marginals, std::size_t rows,
                                                     std::uint64_t seed) {
  std::vector<std::vector<CellValue>> out;
  out.reserve(marginals.size());
  for (std::size_t j = 0; j < marginals.size(); ++j) {
    out.push_back(detail::resample_column(marginals[j], rows, derive_seed(seed, "like", j)));
  }
  return out;
}

std::vector<double> binomial_tails(std::span<const TailQuery> queries) {
  std::vector<double> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(binomial_tail(q.n, q.k, q.p0));
  return out;
}

}  // namespace serial
}  // namespace tabprobe::kernels
