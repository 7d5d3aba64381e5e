#include <catch2/catch_amalgamated.hpp>

#include <cstdint>

#include "obsk/oracle.hpp"

using namespace obsk;
using W = std::uint64_t;

namespace {

// Independent O(n^2) skyline straight from the definitions; the BNL
// implementation must agree with it on every instance.
PlainDb<W> brute_skyline(const PlainDb<W>& db, const PlainQuery<W>& q) {
  PlainDb<W> c = region_filter(db, q);
  PlainDb<W> out;
  for (const auto& p : c) {
    bool dominated = false;
    for (const auto& other : c)
      if (dominates(other, p, q)) {
        dominated = true;
        break;
      }
    if (!dominated) out.push_back(p);
  }
  return out;
}

PlainQuery<W> random_query(std::uint32_t m, Rng& rng, W hi = 1000) {
  PlainQuery<W> q;
  auto k = std::uint32_t(1 + rng.below(m));
  auto dims = rng.permutation(m);
  for (std::uint32_t j = 0; j < k; ++j) {
    W a = W(rng.below(hi)), b = W(rng.below(hi));
    q.selected.push_back({dims[j], std::min(a, b), std::max(a, b),
                          rng.bit() ? Pref::max : Pref::min});
  }
  return q;
}

PlainDb<W> random_db(std::size_t n, std::uint32_t m, Rng& rng, W hi = 1000) {
  PlainDb<W> db(n, PlainTuple<W>(m));
  for (auto& row : db)
    for (auto& v : row) v = W(rng.below(hi));
  return db;
}

}  // namespace

TEST_CASE("dominance follows the two-clause definition", "[oracle]") {
  PlainQuery<W> q;
  q.selected = {{0, 0, 9, Pref::min}, {1, 0, 9, Pref::min}};

  CHECK_FALSE(dominates<W>({1, 2, 3}, {1, 2, 3}, q));  // equal on selected dims
  CHECK(dominates<W>({1, 1, 9}, {2, 1, 0}, q));
  CHECK_FALSE(dominates<W>({2, 1, 0}, {1, 1, 9}, q));
  // Unselected dimension differences are invisible.
  CHECK_FALSE(dominates<W>({1, 2, 0}, {1, 2, 99}, q));

  SECTION("mixed preferences") {
    PlainQuery<W> mixed;
    mixed.selected = {{0, 0, 9, Pref::min}, {1, 0, 9, Pref::max}};
    CHECK(dominates<W>({1, 5}, {3, 2}, mixed));
    CHECK_FALSE(dominates<W>({1, 2}, {3, 5}, mixed));
  }
}

TEST_CASE("dominance is antisymmetric on random inputs", "[oracle]") {
  Rng rng(11);
  for (int t = 0; t < 100000; ++t) {
    std::uint32_t m = 2 + std::uint32_t(rng.below(4));
    auto q = random_query(m, rng, 8);  // small domain provokes ties
    PlainTuple<W> a(m), b(m);
    for (auto& v : a) v = W(rng.below(8));
    for (auto& v : b) v = W(rng.below(8));
    REQUIRE_FALSE((dominates(a, b, q) && dominates(b, a, q)));
  }
}

TEST_CASE("region membership is a closed interval", "[oracle]") {
  PlainQuery<W> q;
  q.selected = {{0, 3, 7, Pref::min}};
  CHECK(in_region<W>({7}, q));      // upper boundary included
  CHECK(in_region<W>({3}, q));      // lower boundary included
  CHECK_FALSE(in_region<W>({8}, q));
  CHECK_FALSE(in_region<W>({2}, q));
}

TEST_CASE("region filter count matches brute scan", "[oracle]") {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    std::uint32_t m = 2 + std::uint32_t(rng.below(4));
    auto db = random_db(100, m, rng);
    auto q = random_query(m, rng);
    std::size_t count = 0;
    for (const auto& row : db)
      if (in_region(row, q)) ++count;
    REQUIRE(region_filter(db, q).size() == count);
  }
}

TEST_CASE("two-point skyline", "[oracle]") {
  PlainQuery<W> q;
  q.selected = {{0, 0, 999, Pref::min}, {1, 0, 999, Pref::min}};
  PlainDb<W> db = {{1, 1}, {2, 2}};
  auto s = bnl_skyline(db, q);
  REQUIRE(s.size() == 1);
  CHECK(s[0] == PlainTuple<W>{1, 1});
}

TEST_CASE("identical tuples are all retained", "[oracle]") {
  PlainQuery<W> q;
  q.selected = {{0, 0, 999, Pref::min}};
  PlainDb<W> db = {{5, 1}, {5, 2}, {5, 3}};
  auto s = bnl_skyline(db, q);
  CHECK(s.size() == 3);
}

TEST_CASE("BNL equals brute force on random instances", "[oracle]") {
  Rng rng(13);
  for (int t = 0; t < 1000; ++t) {
    std::uint32_t m = 2 + std::uint32_t(rng.below(5));
    std::size_t n = 1 + rng.below(200);
    W hi = rng.bit() ? 16 : 1000;  // small domain exercises duplicates
    auto db = random_db(n, m, rng, hi);
    auto q = random_query(m, rng, hi);
    REQUIRE(same_row_multiset(bnl_skyline(db, q), brute_skyline(db, q)));
  }
}

TEST_CASE("skyline is invariant under database permutation", "[oracle]") {
  Rng rng(14);
  for (int t = 0; t < 200; ++t) {
    std::uint32_t m = 2 + std::uint32_t(rng.below(4));
    auto db = random_db(60, m, rng, 32);
    auto q = random_query(m, rng, 32);
    auto base = bnl_skyline(db, q);
    auto perm = rng.permutation(std::uint32_t(db.size()));
    PlainDb<W> shuffled;
    for (auto i : perm) shuffled.push_back(db[i]);
    REQUIRE(same_row_multiset(base, bnl_skyline(shuffled, q)));
  }
}
