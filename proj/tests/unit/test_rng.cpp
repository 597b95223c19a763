#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "loyaltylab/csv.hpp"
#include "loyaltylab/parallel.hpp"
#include "loyaltylab/rng.hpp"

using namespace loyaltylab;

TEST_CASE("mt19937_64 stream matches the standard's 10000th value") {
  // The standard fixes this value; the portable helpers rely on the raw engine.
  std::mt19937_64 e;
  e.discard(9999);
  CHECK(e() == 9981545732273789042ULL);
}

TEST_CASE("same seed, same draws") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform_index(17) == b.uniform_index(17));
    CHECK(a.normal() == b.normal());
    CHECK(a.poisson(3.5) == b.poisson(3.5));
  }
}

TEST_CASE("derived seeds differ by tag and parent") {
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  CHECK(derive_seed(7, std::uint64_t{3}) == derive_seed(7, std::uint64_t{3}));
}

TEST_CASE("fnv1a known vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("uniform_index stays in range and covers it") {
  Rng r(5);
  std::map<std::size_t, int> seen;
  for (int i = 0; i < 7000; ++i) {
    const auto v = r.uniform_index(7);
    REQUIRE(v < 7);
    ++seen[v];
  }
  CHECK(seen.size() == 7);
  for (const auto& [v, n] : seen) CHECK(std::abs(n - 1000) < 150);
}

TEST_CASE("uniform_int is inclusive") {
  Rng r(9);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(r.uniform_int(-2, 2));
  CHECK(seen == std::set<std::int64_t>{-2, -1, 0, 1, 2});
}

TEST_CASE("normal and poisson moments") {
  Rng r(11);
  const int n = 200000;
  double s = 0, ss = 0, ps = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal(2.0, 3.0);
    s += x;
    ss += x * x;
    ps += static_cast<double>(r.poisson(4.0));
  }
  const double mean = s / n, var = ss / n - mean * mean;
  CHECK(mean == doctest::Approx(2.0).epsilon(0.01));
  CHECK(var == doctest::Approx(9.0).epsilon(0.02));
  CHECK(ps / n == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("weighted_index follows weights and never picks zero weight") {
  Rng r(3);
  const std::vector<double> w{1.0, 0.0, 3.0};
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 40000; ++i) ++counts[r.weighted_index(w)];
  CHECK(counts[1] == 0);
  CHECK(static_cast<double>(counts[2]) / counts[0] == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("sample_without_replacement gives distinct indices and clamps k") {
  Rng r(1);
  auto s = r.sample_without_replacement(10, 4);
  CHECK(s.size() == 4);
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 4);
  auto all = r.sample_without_replacement(5, 9);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("shuffle is a permutation") {
  Rng r(2);
  std::vector<int> v{1, 2, 3, 4, 5, 6};
  r.shuffle(v);
  std::sort(v.begin(), v.end());
  CHECK(v == std::vector<int>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("parallel_for result does not depend on thread count") {
  auto run = [](unsigned threads) {
    std::vector<std::uint64_t> out(500);
    parallel_for(out.size(), threads, [&](std::size_t i) {
      Rng r(derive_seed(99, static_cast<std::uint64_t>(i)));
      out[i] = r.next();
    });
    return out;
  };
  CHECK(run(1) == run(4));
}

TEST_CASE("parallel_for rethrows task errors") {
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("csv number and field formatting") {
  CHECK(csv::num(0.1) == "0.1");
  CHECK(csv::num(1.0 / 3.0) == "0.3333333333333333");
  CHECK(csv::num(-0.0) == "0");
  CHECK(csv::num(std::optional<double>{}) == "");
  CHECK(csv::field("a,b") == "\"a,b\"");
  CHECK(csv::field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv::split("x,\"a,b\",\"q\"\"q\"") == std::vector<std::string>{"x", "a,b", "q\"q"});
  const double v = 0.1 + 0.2;
  CHECK(std::stod(csv::num(v)) == v);
}
