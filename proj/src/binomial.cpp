#include "tabprobe/binomial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tabprobe/error.hpp"

namespace tabprobe {
namespace {

// log(n!) - [(n + 1/2) log n - n + log sqrt(2 pi)] for n = 0..15.
constexpr double kStirlingError[16] = {
    0.0,
    0.08106146679532725822,
    0.041340695955409294094,
    0.027677925684998339149,
    0.020790672103765093112,
    0.016644691189821192163,
    0.013876128823070747999,
    0.011896709945891770095,
    0.010411265261972096497,
    0.0092554621827127329177,
    0.0083305634333628712565,
    0.007573675487951840795,
    0.0069428401072095298657,
    0.0064089941880042070684,
    0.0059513701127588477356,
    0.005554733551962801371,
};

double stirling_error(double n) {
  if (n <= 15.0) return kStirlingError[static_cast<int>(n)];
  constexpr double s0 = 1.0 / 12.0;
  constexpr double s1 = 1.0 / 360.0;
  constexpr double s2 = 1.0 / 1260.0;
  constexpr double s3 = 1.0 / 1680.0;
  constexpr double s4 = 1.0 / 1188.0;
  const double nn = n * n;
  return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// x log(x / np) + np - x, accurate when x is close to np.
double deviance(double x, double np) {
  if (std::abs(x - np) < 0.1 * (x + np)) {
    double v = (x - np) / (x + np);
    double s = (x - np) * v;
    double ej = 2.0 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double s1 = s + ej / (2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / np) + np - x;
}

}  // namespace

double binomial_pmf(std::uint64_t n_count, std::uint64_t k_count, double p) {
  if (k_count > n_count) return 0.0;
  const double n = static_cast<double>(n_count);
  const double x = static_cast<double>(k_count);
  const double q = 1.0 - p;
  if (k_count == 0) return n_count == 0 ? 1.0 : std::exp(n * std::log1p(-p));
  if (k_count == n_count) return std::exp(n * std::log(p));
  const double lc = stirling_error(n) - stirling_error(x) - stirling_error(n - x) - deviance(x, n * p) -
                    deviance(n - x, n * q);
  const double lf = std::log(2.0 * std::numbers::pi) + std::log(x) + std::log1p(-x / n);
  return std::exp(lc - 0.5 * lf);
}

double binomial_tail(std::uint64_t n, std::uint64_t k, double p0) {
  if (k > n) throw ConfigError("binomial_tail: k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  if (!(p0 > 0.0 && p0 < 1.0)) throw ConfigError("binomial_tail: p0 must lie in (0, 1)");
  if (k == 0) return 1.0;

  // Sum whichever side lies away from the mean; its terms decay monotonically
  // from the starting index, so the loop stops once they stop contributing.
  const double mean = static_cast<double>(n) * p0;
  double sum = 0.0;
  if (static_cast<double>(k) >= mean) {
    for (std::uint64_t i = k; i <= n; ++i) {
      const double term = binomial_pmf(n, i, p0);
      sum += term;
      if (term <= sum * 1e-17 || term == 0.0) break;
    }
    return std::clamp(sum, 0.0, 1.0);
  }
  for (std::uint64_t i = k; i-- > 0;) {
    const double term = binomial_pmf(n, i, p0);
    sum += term;
    if (term <= sum * 1e-17 || term == 0.0) break;
  }
  return std::clamp(1.0 - sum, 0.0, 1.0);
}

}  // namespace tabprobe
