#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "tabprobe/binomial.hpp"
#include "tabprobe/error.hpp"

using namespace tabprobe;

TEST_CASE("small tails") {
  CHECK(binomial_tail(1, 0, 0.2) == 1.0);
  CHECK(binomial_tail(1, 1, 0.2) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(binomial_tail(0, 0, 0.2) == 1.0);
  CHECK(binomial_tail(3, 3, 0.5) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("n=100 k=40 against exact summation") {
  CHECK(std::abs(binomial_tail(100, 40, 0.2) - fixtures::exact_binomial_tail(100, 40, 1, 5)) <= 1e-12);
}

TEST_CASE("every k for moderate n") {
  for (std::uint64_t n : {1u, 2u, 5u, 17u, 50u, 99u, 150u}) {
    const auto exact = fixtures::exact_binomial_tails(n, 1, 5);
    for (std::uint64_t k = 0; k <= n; ++k) CHECK(std::abs(binomial_tail(n, k, 0.2) - exact[k]) <= 1e-12);
  }
}

TEST_CASE("other baselines") {
  const auto exact = fixtures::exact_binomial_tails(80, 1, 4);
  for (std::uint64_t k = 0; k <= 80; ++k) CHECK(std::abs(binomial_tail(80, k, 0.25) - exact[k]) <= 1e-12);
}

TEST_CASE("monotone in k and equal to one at zero") {
  for (std::uint64_t n : {10u, 100u, 1000u, 10000u}) {
    double prev = binomial_tail(n, 0, 0.2);
    CHECK(prev == 1.0);
    for (std::uint64_t k = 1; k <= n; k += (n > 1000 ? 7 : 1)) {
      const double cur = binomial_tail(n, k, 0.2);
      CHECK(cur <= prev);
      CHECK(cur >= 0.0);
      prev = cur;
    }
  }
}

TEST_CASE("pmf sums to one") {
  double total = 0.0;
  for (std::uint64_t k = 0; k <= 300; ++k) total += binomial_pmf(300, k, 0.2);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("precondition violations") {
  CHECK_THROWS_AS(binomial_tail(5, 6, 0.2), ConfigError);
  CHECK_THROWS_AS(binomial_tail(5, 2, 0.0), ConfigError);
  CHECK_THROWS_AS(binomial_tail(5, 2, 1.0), ConfigError);
  CHECK_THROWS_AS(binomial_tail(5, 2, std::nan("")), ConfigError);
}

TEST_CASE("chance-level accuracy is not significant") {
  CHECK(binomial_tail(100, 20, 0.2) > 0.001);
  CHECK(binomial_tail(100, 73, 0.2) < 0.001);
}
