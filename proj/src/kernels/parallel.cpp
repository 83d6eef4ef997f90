#include <cstdint>

#include "tabprobe/binomial.hpp"
#include "tabprobe/kernels.hpp"

#ifdef TABPROBE_HAVE_OPENMP
#include <omp.h>
#define TABPROBE_OMP_DYNAMIC _Pragma("omp parallel for schedule(dynamic, 1)")
#else
#define TABPROBE_OMP_DYNAMIC
#endif

namespace tabprobe::kernels {

bool openmp_enabled() noexcept {
#ifdef TABPROBE_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() noexcept {
#ifdef TABPROBE_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace parallel {

// Columns differ widely in cost (distinct counts), hence the dynamic schedule.
std::vector<Marginal> column_marginals(const Dataset& ds) {
  const auto n = static_cast<std::int64_t>(ds.schema.size());
  std::vector<Marginal> out(ds.schema.size());
  TABPROBE_OMP_DYNAMIC
  for (std::int64_t j = 0; j < n; ++j) {
    out[static_cast<std::size_t>(j)] = detail::tally_column(ds, static_cast<std::size_t>(j));
  }
  return out;
}

std::vector<std::vector<CellValue>> resample_columns(std::span<const Marginal> marginals, std::size_t rows,
                                                     std::uint64_t seed) {
  const auto n = static_cast<std::int64_t>(marginals.size());
  std::vector<std::vector<CellValue>> out(marginals.size());
  TABPROBE_OMP_DYNAMIC
  for (std::int64_t j = 0; j < n; ++j) {
    const auto col = static_cast<std::size_t>(j);
    out[col] = detail::resample_column(marginals[col], rows, derive_seed(seed, "like", col));
  }
  return out;
}

std::vector<double> binomial_tails(std::span<const TailQuery> queries) {
  // Validate up front: exceptions must not escape an OpenMP region.
  for (const auto& q : queries) {
    if (q.k > q.n || !(q.p0 > 0.0 && q.p0 < 1.0)) return serial::binomial_tails(queries);
  }
  const auto n = static_cast<std::int64_t>(queries.size());
  std::vector<double> out(queries.size());
  TABPROBE_OMP_DYNAMIC
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& q = queries[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = binomial_tail(q.n, q.k, q.p0);
  }
  return out;
}

}  // namespace parallel
}  // namespace tabprobe::kernels
