#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "med/rng.hpp"

TEST_CASE("same seed, same stream") {
  med::Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.uniform() == b.uniform());
  med::Rng c(42), d(42);
  for (int i = 0; i < 100; ++i) CHECK(c.normal() == d.normal());
  med::Rng e(43);
  bool any_diff = false;
  med::Rng f(42);
  for (int i = 0; i < 10; ++i) any_diff |= (e.uniform() != f.uniform());
  CHECK(any_diff);
}

TEST_CASE("uniform draws live in [0,1) on a 53-bit lattice") {
  med::Rng rng(7);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double scaled = u * 9007199254740992.0;  // 2^53
    REQUIRE(scaled == std::floor(scaled));
    sum += u;
  }
  CHECK(std::fabs(sum / n - 0.5) < 0.01);
}

TEST_CASE("bounded integer draws cover their range uniformly") {
  med::Rng rng(11);
  std::array<int, 7> counts{};
  const int n = 7000;
  for (int i = 0; i < n; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) {
    CHECK(c > 850);
    CHECK(c < 1150);
  }

  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.uniform_int(-3, 3);
    REQUIRE(v >= -3);
    REQUIRE(v <= 3);
  }
}

TEST_CASE("normal draws have the right first two moments") {
  med::Rng rng(23);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::fabs(mean) < 0.02);
  CHECK(std::fabs(var - 1.0) < 0.05);

  med::Rng shifted(23);
  const double first = shifted.normal(10.0, 0.5);
  med::Rng plain(23);
  CHECK(first == 10.0 + 0.5 * plain.normal());
}

TEST_CASE("random permutations are permutations and unbiased") {
  med::Rng rng(5);
  std::array<int, 6> counts{};
  const int n = 6000;
  for (int i = 0; i < n; ++i) {
    const auto p = med::random_permutation(3, rng);
    REQUIRE(p.size() == 3);
    std::set<std::size_t> seen(p.begin(), p.end());
    REQUIRE(seen.size() == 3);
    // map the 6 orderings of {0,1,2} to 0..5
    const std::size_t key = p[0] * 2 + (p[1] < p[2] ? 0 : 1);
    ++counts[key];
  }
  for (int c : counts) {
    CHECK(c > 850);
    CHECK(c < 1150);
  }

  const auto empty = med::random_permutation(0, rng);
  CHECK(empty.empty());
  const auto one = med::random_permutation(1, rng);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == 0);
}

TEST_CASE("derived seeds separate streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t tag = 0; tag < 8; ++tag)
    for (std::uint64_t idx = 0; idx < 64; ++idx) seen.insert(med::derive_seed(99, tag, idx));
  CHECK(seen.size() == 8 * 64);
  CHECK(med::derive_seed(1, 2, 3) != med::derive_seed(2, 2, 3));
  CHECK(med::derive_seed(1, 2, 3) != med::derive_seed(1, 3, 3));
  CHECK(med::derive_seed(1, 2, 3) != med::derive_seed(1, 2, 4));
  CHECK(med::derive_seed(1, 2, 3) == med::derive_seed(1, 2, 3));
}
