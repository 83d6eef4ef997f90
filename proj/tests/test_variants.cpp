#include <cmath>
#include <cstring>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "tabprobe/error.hpp"
#include "tabprobe/marginal.hpp"
#include "tabprobe/variants.hpp"

using namespace tabprobe;

TEST_CASE("like keeps schema, size and support") {
  const auto ds = parse_csv("c\nx\ny\nz\nx\n", {}, "one");
  const auto like = make_like(ds, 5);
  CHECK(like.variant == Variant::Like);
  CHECK(like.schema == ds.schema);
  CHECK(like.row_count() == ds.row_count());
  const auto m = marginal(ds, ds.schema[0]);
  for (const auto& row : like.rows) CHECK(m.count_of(row[0]) > 0);
}

TEST_CASE("like is a pure function of the seed") {
  const auto ds = fixtures::adult_like(1000, 3);
  CHECK(make_like(ds, 11).rows == make_like(ds, 11).rows);
  CHECK(make_like(ds, 11).rows != make_like(ds, 12).rows);
}

TEST_CASE("like rejects other variants and empty columns") {
  auto ds = parse_csv("a,b\n1,?\n2,?\n");
  CHECK_THROWS_AS(make_like(ds, 1), DataError);
  auto real = parse_csv("a\n1\n2\n");
  real.variant = Variant::Obf;
  CHECK_THROWS_AS(make_like(real, 1), ConfigError);
}

TEST_CASE("like breaks a deterministic dependence") {
  // y = x over 10 equally likely values: rows agree with probability sum p_v^2 = 0.1
  std::string csv = "x,y\n";
  Rng rng(3);
  std::vector<double> p(10, 0.0);
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = rng.below(10);
    p[v] += 1.0 / n;
    csv += "v" + std::to_string(v) + ",v" + std::to_string(v) + "\n";
  }
  double expected = 0.0;
  for (double q : p) expected += q * q;
  const auto like = make_like(parse_csv(csv), 99);
  std::size_t equal = 0;
  for (const auto& row : like.rows) equal += row[0] == row[1];
  const double rate = static_cast<double>(equal) / n;
  // 5 sigma band for a Bernoulli(expected) mean over 10000 rows
  CHECK(std::abs(rate - expected) <= 5.0 * std::sqrt(expected * (1 - expected) / n));
}

TEST_CASE("like matches marginals and missing rates on a large table") {
  const auto ds = fixtures::adult_like(10000, 17);
  const auto like = make_like(ds, 4);
  for (std::size_t j = 0; j < ds.column_count(); ++j) {
    CAPTURE(ds.schema[j].name);
    CHECK(fixtures::marginal_tv(ds, like, j) <= 0.05);
    if (marginal(ds, ds.schema[j]).distinct() <= 100) CHECK(fixtures::tv_distance(ds, like, j) <= 0.05);
  }
  // Resampling a column of (almost) unique values with replacement leaves about
  // 1/e of the original values unseen, so exact-value TV sits near 0.37 there.
  const auto fnlwgt = ds.column("fnlwgt").position;
  CHECK(marginal(ds, ds.column("fnlwgt")).distinct() > 9000);
  CHECK(fixtures::tv_distance(ds, like, fnlwgt) == doctest::Approx(0.37).epsilon(0.1));
  const auto& wc = ds.column("workclass");
  const auto m_real = marginal(ds, wc);
  const auto m_like = marginal(like, wc);
  const double p = static_cast<double>(m_real.missing) / ds.row_count();
  CHECK(std::abs(static_cast<double>(m_like.missing) / like.row_count() - p) <= 5.0 * std::sqrt(p * (1 - p) / 10000));
}

TEST_CASE("like removes correlation between numeric columns") {
  const auto ds = fixtures::adult_like(10000, 17);
  const auto a = ds.column("age").position, b = ds.column("hours-per-week").position;
  const double before = fixtures::pearson(fixtures::numeric_column(ds, a), fixtures::numeric_column(ds, b));
  CHECK(std::abs(before) >= 0.3);
  const auto like = make_like(ds, 4);
  CHECK(std::abs(fixtures::pearson(fixtures::numeric_column(like, a), fixtures::numeric_column(like, b))) <= 0.05);
}

TEST_CASE("obfuscation renames headers and tokens in order of first appearance") {
  const auto ds = parse_csv("occupation,fare\nPrivate,7.25\nState-gov,71.2833\nPrivate,?\n?,8.05\n", {}, "t");
  const auto [obf, map] = make_obfuscated(ds);
  CHECK(obf.variant == Variant::Obf);
  CHECK(obf.schema[0].name == "f01");
  CHECK(obf.schema[1].name == "f02");
  CHECK(obf.rows[0][0] == CellValue::categorical("c01"));
  CHECK(obf.rows[1][0] == CellValue::categorical("c02"));
  CHECK(obf.rows[2][0] == CellValue::categorical("c01"));
  CHECK(obf.rows[3][0].is_missing());
  CHECK(obf.rows[1][1] == ds.rows[1][1]);
  CHECK(obf.rows[2][1].is_missing());
  CHECK(map.has_value_map("occupation"));
  CHECK_FALSE(map.has_value_map("fare"));
  CHECK(map.encode("occupation", "State-gov") == "c02");
  CHECK(map.decode("occupation", "c01") == "Private");
  CHECK(map.original_column_name("f02") == "fare");
}

TEST_CASE("obfuscation keeps numeric columns bit-identical") {
  const auto ds = fixtures::adult_like(3000, 5);
  const auto [obf, map] = make_obfuscated(ds);
  std::vector<std::size_t> numeric;
  for (const auto& col : ds.schema) {
    if (col.kind == ColumnKind::Numerical) numeric.push_back(col.position);
  }
  for (std::size_t i = 0; i < ds.row_count(); ++i) {
    for (auto j : numeric) {
      REQUIRE(obf.rows[i][j].is_numerical());
      const double a = ds.rows[i][j].number(), b = obf.rows[i][j].number();
      CHECK(std::memcmp(&a, &b, sizeof a) == 0);
    }
  }
  for (auto a : numeric) {
    for (auto b : numeric) {
      const double before = fixtures::pearson(fixtures::numeric_column(ds, a), fixtures::numeric_column(ds, b));
      const double after = fixtures::pearson(fixtures::numeric_column(obf, a), fixtures::numeric_column(obf, b));
      CHECK(std::abs(before - after) <= 1e-12);
    }
  }
}

TEST_CASE("apply and invert round-trip") {
  const auto ds = fixtures::adult_like(2000, 8);
  const auto [obf, map] = make_obfuscated(ds);
  CHECK(to_csv(apply_map(map, ds)) == to_csv(obf));
  const auto back = invert_map(map, obf);
  CHECK(back.variant == Variant::Real);
  CHECK(back.schema == ds.schema);
  CHECK(to_csv(back) == to_csv(ds));
}

TEST_CASE("unknown token or column is named in the error") {
  const auto ds = parse_csv("a,b\nx,1\ny,2\n", {}, "t");
  const auto [obf, map] = make_obfuscated(ds);
  auto other = parse_csv("a,b\nx,1\nzzz,2\n", {}, "t");
  try {
    apply_map(map, other);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("zzz") != std::string::npos);
  }
  auto renamed = parse_csv("a,q\nx,1\n", {}, "t");
  try {
    apply_map(map, renamed);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("q") != std::string::npos);
  }
  CHECK_THROWS_AS(invert_map(map, ds), DataError);
}

TEST_CASE("map survives serialization") {
  const auto ds = fixtures::adult_like(1500, 2);
  const auto [obf, map] = make_obfuscated(ds);
  const auto text = map.to_json().dump();
  const auto reloaded = ObfuscationMap::from_json(nlohmann::json::parse(text));
  CHECK(reloaded.to_json().dump() == text);
  CHECK(to_csv(apply_map(reloaded, ds)) == to_csv(obf));
  CHECK(to_csv(invert_map(reloaded, obf)) == to_csv(ds));
  const auto doc = map.to_json();
  CHECK(doc["columns"]["age"] == "f01");
  CHECK_FALSE(doc["values"].contains("age"));
  CHECK(doc["values"]["workclass"].size() == marginal(ds, ds.column("workclass")).distinct());
}

TEST_CASE("map entries are bijective") {
  ObfuscationMap map;
  map.add_column("a", "f01");
  CHECK_THROWS_AS(map.add_column("b", "f01"), DataError);
  CHECK_THROWS_AS(map.add_column("a", "f02"), DataError);
  map.add_value_column("a");
  map.add_value("a", "x", "c01");
  CHECK_THROWS_AS(map.add_value("a", "y", "c01"), DataError);
}

TEST_CASE("symbol formatting") {
  CHECK(obfuscated_column_name(0) == "f01");
  CHECK(obfuscated_column_name(99) == "f100");
  CHECK(obfuscated_token(1) == "c01");
  CHECK(obfuscated_token(123) == "c123");
}
