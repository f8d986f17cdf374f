/*******************************************************************************
 * Copyright 2026 The convnarr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *******************************************************************************/
#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>

#include "convnarr/csv.hpp"
#include "convnarr/rng.hpp"

using namespace convnarr;

TEST_CASE("mt19937_64 stream is the standard one") {
  // 10000th output of a default-seeded mt19937_64, fixed by the C++ standard.
  std::mt19937_64 e;
  e.discard(9999);
  CHECK(e() == 9981545732273789042ULL);
}

TEST_CASE("rng is deterministic per seed and streams differ") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    differs |= x != c.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  CHECK(differs);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("rng distributions have the expected moments") {
  Rng r(9);
  const int n = 200000;
  double s = 0, s2 = 0, ps = 0;
  std::map<std::uint64_t, int> counts;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal(3.0, 2.0);
    s += x;
    s2 += x * x;
    ps += r.poisson(4.0);
    ++counts[r.below(5)];
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  CHECK(mean == doctest::Approx(3.0).epsilon(0.01));
  CHECK(var == doctest::Approx(4.0).epsilon(0.02));
  CHECK(ps / n == doctest::Approx(4.0).epsilon(0.01));
  CHECK(counts.size() == 5);
  for (const auto& [k, c] : counts) CHECK(c == doctest::Approx(n / 5.0).epsilon(0.03));
  CHECK(r.poisson(0.0) == 0);
}

TEST_CASE("shuffle is a seeded permutation") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[static_cast<std::size_t>(i)] = i;
  auto a = v, b = v;
  Rng(5).shuffle(a);
  Rng(5).shuffle(b);
  CHECK(a == b);
  CHECK(a != v);
  std::sort(a.begin(), a.end());
  CHECK(a == v);
}

TEST_CASE("csv parses quoted fields, CRLF and BOM") {
  const auto t = csv::parse("\xEF\xBB\xBFh1,h2\r\na,\"b, \"\"c\"\"\"\r\n\"multi\nline\",x\r\n\r\n");
  REQUIRE(t.header == std::vector<std::string>{"h1", "h2"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].fields == std::vector<std::string>{"a", "b, \"c\""});
  CHECK(t.rows[0].line == 2);
  CHECK(t.rows[1].fields == std::vector<std::string>{"multi\nline", "x"});
  CHECK(t.rows[1].line == 3);
}

TEST_CASE("csv reports unterminated quotes with the line") {
  try {
    csv::parse("a,b\n1,\"oops\n2,3\n");
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("csv writer round-trips") {
  const std::vector<std::string> fields = {"plain", "with,comma", "with \"quote\"", "two\nlines", ""};
  const auto line = csv::format_row(fields);
  const auto t = csv::parse(line, false);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].fields == fields);
  CHECK(csv::quote("x") == "x");
  CHECK(csv::quote("a,b") == "\"a,b\"");
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.0}) CHECK(std::stod(csv::format_double(v)) == v);
  CHECK(csv::format_double(0.5) == "0.5");
}
