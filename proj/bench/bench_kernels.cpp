#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "tabprobe/kernels.hpp"

namespace {

const tabprobe::Dataset& table() {
  static const auto ds = fixtures::adult_like(20000, 7);
  return ds;
}

std::vector<tabprobe::kernels::TailQuery> tail_queries() {
  std::vector<tabprobe::kernels::TailQuery> qs;
  for (std::uint64_t n = 100; n <= 5000; n += 100) {
    for (std::uint64_t k = n / 10; k <= n / 2; k += n / 20) qs.push_back({n, k, 0.2});
  }
  return qs;
}

void BM_MarginalsSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(tabprobe::kernels::serial::column_marginals(table()));
}
void BM_MarginalsParallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(tabprobe::kernels::parallel::column_marginals(table()));
}

void BM_ResampleSerial(benchmark::State& state) {
  const auto ms = tabprobe::kernels::serial::column_marginals(table());
  for (auto _ : state) benchmark::DoNotOptimize(tabprobe::kernels::serial::resample_columns(ms, table().row_count(), 1));
}
void BM_ResampleParallel(benchmark::State& state) {
  const auto ms = tabprobe::kernels::serial::column_marginals(table());
  for (auto _ : state) benchmark::DoNotOptimize(tabprobe::kernels::parallel::resample_columns(ms, table().row_count(), 1));
}

void BM_TailsSerial(benchmark::State& state) {
  const auto qs = tail_queries();
  for (auto _ : state) benchmark::DoNotOptimize(tabprobe::kernels::serial::binomial_tails(qs));
}
void BM_TailsParallel(benchmark::State& state) {
  const auto qs = tail_queries();
  for (auto _ : state) benchmark::DoNotOptimize(tabprobe::kernels::parallel::binomial_tails(qs));
}

}  // namespace

BENCHMARK(BM_MarginalsSerial);
BENCHMARK(BM_MarginalsParallel);
BENCHMARK(BM_ResampleSerial);
BENCHMARK(BM_ResampleParallel);
BENCHMARK(BM_TailsSerial);
BENCHMARK(BM_TailsParallel);
BENCHMARK_MAIN();
