#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <map>

#include "obsk/ring.hpp"

using namespace obsk;

TEST_CASE("arithmetic share round trip, forced shares", "[ring]") {
  auto [s1, s2] = split_arith<std::uint64_t>(5, 2);
  CHECK(s2.share == 3);
  CHECK(reconstruct_arith(s1, s2) == 5);

  auto [z1, z2] = split_arith<std::uint64_t>(0, 0);
  CHECK(z2.share == 0);
  CHECK(reconstruct_arith(z1, z2) == 0);

  // Wraparound: s1 = 2^64 - 1 forces s2 = 2 for x = 1.
  auto [w1, w2] = split_arith<std::uint64_t>(1, ~std::uint64_t(0));
  CHECK(w2.share == 2);
  CHECK(reconstruct_arith(w1, w2) == 1);
}

TEST_CASE("share/reconstruct round trip, randomized", "[ring]") {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    std::uint64_t x = rng.next_u64();
    auto [s1, s2] = share_arith<std::uint64_t>(x, rng);
    REQUIRE(reconstruct_arith(s1, s2) == x);
  }
}

TEST_CASE("share/reconstruct exhaustive at l=8", "[ring]") {
  for (unsigned x = 0; x < 256; ++x)
    for (unsigned s = 0; s < 256; ++s) {
      auto [s1, s2] = split_arith<std::uint8_t>(std::uint8_t(x), std::uint8_t(s));
      REQUIRE(reconstruct_arith(s1, s2) == std::uint8_t(x));
    }
  for (unsigned b = 0; b < 2; ++b)
    for (unsigned s = 0; s < 2; ++s) {
      auto [b1, b2] = split_bit(std::uint8_t(b), std::uint8_t(s));
      REQUIRE(reconstruct_bit(b1, b2) == b);
    }
}

TEST_CASE("reconstruct rejects same-party shares", "[ring]") {
  ArithShare<std::uint64_t> a{1, Party::p1}, b{2, Party::p1};
  CHECK_THROWS_AS(reconstruct_arith(a, b), ProtocolError);
  BitShare c{1, Party::p2}, d{0, Party::p2};
  CHECK_THROWS_AS(reconstruct_bit(c, d), ProtocolError);
}

TEST_CASE("local linear operations are share homomorphisms", "[ring]") {
  Rng rng(2);
  SECTION("worked examples") {
    auto [x1, x2] = share_arith<std::uint64_t>(3, rng);
    auto [y1, y2] = share_arith<std::uint64_t>(4, rng);
    CHECK(reconstruct_arith(local_add(x1, y1), local_add(x2, y2)) == 7);
    CHECK(reconstruct_arith(local_const_mul<std::uint64_t>(x1, 5),
                            local_const_mul<std::uint64_t>(x2, 5)) == 15);
    CHECK(reconstruct_arith(local_const_add<std::uint64_t>(x1, 10),
                            local_const_add<std::uint64_t>(x2, 10)) == 13);
  }
  SECTION("random sub") {
    for (int i = 0; i < 100000; ++i) {
      std::uint64_t x = rng.next_u64(), y = rng.next_u64();
      auto [x1, x2] = share_arith<std::uint64_t>(x, rng);
      auto [y1, y2] = share_arith<std::uint64_t>(y, rng);
      REQUIRE(reconstruct_arith(local_sub(x1, y1), local_sub(x2, y2)) == x - y);
    }
  }
  SECTION("mixed-party operands rejected") {
    auto [x1, x2] = share_arith<std::uint64_t>(3, rng);
    CHECK_THROWS_AS(local_add(x1, ArithShare<std::uint64_t>{1, Party::p2}),
                    ProtocolError);
  }
}

TEST_CASE("binary NOT flips exactly party 1", "[ring]") {
  for (unsigned b = 0; b < 2; ++b)
    for (unsigned s = 0; s < 2; ++s) {
      auto [b1, b2] = split_bit(std::uint8_t(b), std::uint8_t(s));
      BitShare n1 = local_not(b1), n2 = local_not(b2);
      CHECK(n1.share == ((b1.share ^ 1u) & 1u));
      CHECK(n2.share == b2.share);
      CHECK(reconstruct_bit(n1, n2) == (b ^ 1u));
      CHECK(reconstruct_bit(local_not(n1), local_not(n2)) == b);
    }
}

TEST_CASE("first share passes a uniformity chi-square", "[ring]") {
  // 10^5 sharings of a fixed secret; bucket the first share's low byte.
  // Chi-square critical value for df=255 at significance 0.001 is 330.52.
  Rng rng(3);
  std::vector<std::uint64_t> counts(256, 0);
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) {
    auto [s1, s2] = share_arith<std::uint64_t>(42, rng);
    counts[s1.share & 0xff]++;
  }
  double expected = trials / 256.0;
  double chi = 0;
  for (auto c : counts) {
    double d = double(c) - expected;
    chi += d * d / expected;
  }
  CHECK(chi < 330.52);
}

TEST_CASE("value domain bound", "[ring]") {
  CHECK(in_value_domain<std::uint64_t>((std::uint64_t(1) << 62) - 1));
  CHECK_FALSE(in_value_domain<std::uint64_t>(std::uint64_t(1) << 62));
  CHECK(in_value_domain<std::uint8_t>(63));
  CHECK_FALSE(in_value_domain<std::uint8_t>(64));
}

TEST_CASE("little-endian word serialization round trips", "[ring]") {
  std::vector<std::uint8_t> buf;
  put_word<std::uint64_t>(buf, 0x0123456789abcdefull);
  REQUIRE(buf.size() == 8);
  CHECK(buf[0] == 0xef);
  CHECK(buf[7] == 0x01);
  CHECK(get_word<std::uint64_t>(buf.data()) == 0x0123456789abcdefull);
}
