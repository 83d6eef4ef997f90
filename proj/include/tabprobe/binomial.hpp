#pragma once

#include <cstdint>

namespace tabprobe {

/// P[X = k] for X ~ Binomial(n, p), via the saddle-point expansion, which keeps
/// full relative precision for large n where log-gamma differences cancel.
double binomial_pmf(std::uint64_t n, std::uint64_t k, double p);

/// Exact one-sided upper tail P[X >= k], X ~ Binomial(n, p0).
/// Requires k <= n and 0 < p0 < 1 (throws ConfigError otherwise).
double binomial_tail(std::uint64_t n, std::uint64_t k, double p0);

}  // namespace tabprobe
