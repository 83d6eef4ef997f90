#pragma once

// Data-parallel kernels. Each kernel has a serial reference and an OpenMP
// version; both must produce identical results for identical inputs, which the
// unit tests check. Library code calls the dispatching wrappers at the bottom.

#include <cstdint>
#include <span>
#include <vector>

#include "tabprobe/dataset.hpp"
#include "tabprobe/marginal.hpp"

namespace tabprobe::kernels {

struct TailQuery {
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  double p0 = 0.2;
};

namespace serial {

/// Marginal of every column, in schema order. Columns with no observations get total 0.
std::vector<Marginal> column_marginals(const Dataset& ds);

/// Column-major draws for a marginal-resampled dataset: out[j][i] is row i of column j.
/// Column j uses its own stream derived from (seed, j); Missing is drawn at its empirical rate.
std::vector<std::vector<CellValue>> resample_columns(std::span<const Marginal> marginals, std::size_t rows,
                                                     std::uint64_t seed);

std::vector<double> binomial_tails(std::span<const TailQuery> queries);

}  // namespace serial

namespace parallel {

std::vector<Marginal> column_marginals(const Dataset& ds);
std::vector<std::vector<CellValue>> resample_columns(std::span<const Marginal> marginals, std::size_t rows,
                                                     std::uint64_t seed);
std::vector<double> binomial_tails(std::span<const TailQuery> queries);

}  // namespace parallel

/// True when the parallel namespace was compiled with OpenMP.
bool openmp_enabled() noexcept;
int max_threads() noexcept;

inline std::vector<Marginal> column_marginals(const Dataset& ds) { return parallel::column_marginals(ds); }
inline std::vector<std::vector<CellValue>> resample_columns(std::span<const Marginal> marginals,
                                                            std::size_t rows, std::uint64_t seed) {
  return parallel::resample_columns(marginals, rows, seed);
}
inline std::vector<double> binomial_tails(std::span<const TailQuery> queries) {
  return parallel::binomial_tails(queries);
}

// Per-item bodies shared by both schedules.
namespace detail {
Marginal tally_column(const Dataset& ds, std::size_t column);
std::vector<CellValue> resample_column(const Marginal& m, std::size_t rows, std::uint64_t seed);
}  // namespace detail

}  // namespace tabprobe::kernels
