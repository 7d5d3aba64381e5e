#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <map>

#include "obsk/correlations.hpp"

using namespace obsk;
using W = std::uint64_t;

TEST_CASE("beaver triples satisfy w = u*v", "[correlations]") {
  Rng rng(21);
  BeaverPool<W> p1, p2;
  gen_beaver<W>(10000, rng, p1, p2);
  REQUIRE(p1.size() == 10000);
  for (std::size_t i = 0; i < p1.size(); ++i) {
    W u = p1.u[i] + p2.u[i];
    W v = p1.v[i] + p2.v[i];
    REQUIRE(W(p1.w[i] + p2.w[i]) == W(u * v));
  }
  BeaverPool<W> e1, e2;
  gen_beaver<W>(0, rng, e1, e2);
  CHECK(e1.size() == 0);
}

TEST_CASE("and triples satisfy w = u&v over 10^5 draws", "[correlations]") {
  Rng rng(22);
  AndPool p1, p2;
  gen_and_triples(100000, rng, p1, p2);
  std::map<int, int> truth_seen;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    int u = p1.u.get(i) ^ p2.u.get(i);
    int v = p1.v.get(i) ^ p2.v.get(i);
    int w = p1.w.get(i) ^ p2.w.get(i);
    REQUIRE(w == (u & v));
    truth_seen[u * 2 + v]++;
  }
  // All four (u, v) combinations occur.
  CHECK(truth_seen.size() == 4);
}

TEST_CASE("shared random bits are unbiased and share-wise uniform", "[correlations]") {
  Rng rng(23);
  PackedBits p1, p2;
  gen_shared_bits(100000, rng, p1, p2);
  std::uint64_t ones = 0, share_ones = 0;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    ones += p1.get(i) ^ p2.get(i);
    share_ones += p1.get(i);
  }
  double mean = double(ones) / double(p1.size());
  CHECK(mean > 0.49);
  CHECK(mean < 0.51);
  // Chi-square on 2 buckets, df=1, critical value 10.83 at p=0.001.
  double expected = double(p1.size()) / 2.0;
  double d0 = double(p1.size() - share_ones) - expected;
  double d1 = double(share_ones) - expected;
  double chi = d0 * d0 / expected + d1 * d1 / expected;
  CHECK(chi < 10.83);
}

TEST_CASE("shuffle correlation delta identity", "[correlations]") {
  Rng rng(24);
  SECTION("n=1 forces identity permutations") {
    ShuffleCorrelationShare<W> s1, s2;
    gen_shuffle_correlation<W>(1, 3, rng, s1, s2);
    REQUIRE(s1.perm == std::vector<std::uint32_t>{0});
    REQUIRE(s2.perm == std::vector<std::uint32_t>{0});
    for (std::uint32_t j = 0; j < 3; ++j)
      CHECK(s2.output.at(0, j) ==
            W(s1.mask.at(0, j) + s2.mask.at(0, j) - s1.output.at(0, j)));
  }
  SECTION("random instance recomputation") {
    for (int t = 0; t < 50; ++t) {
      ShuffleCorrelationShare<W> s1, s2;
      gen_shuffle_correlation<W>(8, 3, rng, s1, s2);
      Matrix<W> expect = sub_matrices(
          permute_rows(add_matrices(permute_rows(s2.mask, s1.perm), s1.mask), s2.perm),
          s1.output);
      REQUIRE(expect == s2.output);
    }
  }
}

TEST_CASE("dealer permutations are uniform", "[correlations]") {
  // 10^4 generations at n=4; frequencies over the 24 permutations must pass
  // chi-square with df=23 (critical value 49.73 at p=0.001).
  Rng rng(25);
  std::map<std::vector<std::uint32_t>, int> freq;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    ShuffleCorrelationShare<W> s1, s2;
    gen_shuffle_correlation<W>(4, 1, rng, s1, s2);
    freq[s1.perm]++;
  }
  REQUIRE(freq.size() == 24);
  double expected = trials / 24.0;
  double chi = 0;
  for (const auto& [perm, count] : freq) {
    double d = count - expected;
    chi += d * d / expected;
  }
  CHECK(chi < 49.73);
}

TEST_CASE("budget covers dominance and generation costs", "[correlations]") {
  auto b = CorrelationBudget::for_query(100, 5, 64, 20);
  CHECK(b.shuffles == 1);
  CHECK(b.and_triples > 0);
  CHECK(b.random_bits == 2u * 20 * 20);
  // secLEQ cost: l-1 generate ANDs + 2 per combine, root saves one.
  CHECK(CorrelationBudget::secleq_ands(64) == 186);
  CHECK(CorrelationBudget::secleq_ands(8) == 18);
}

TEST_CASE("correlation files round trip and reject corruption", "[correlations]") {
  Rng rng(26);
  auto budget = CorrelationBudget{8, 100, 16, 1};
  auto dealt = make_correlations<W>(10, 5, budget, rng);

  auto dir = std::filesystem::temp_directory_path() / "obsk_corr_test";
  std::filesystem::create_directories(dir);
  auto path1 = (dir / "p1.obsk").string();
  write_correlations(dealt.p1, path1);

  SECTION("round trip is bit-identical") {
    auto back = read_correlations<W>(path1, Party::p1);
    CHECK(back.n == 10);
    CHECK(back.m == 5);
    CHECK(serialize_correlations(back) == serialize_correlations(dealt.p1));
  }
  SECTION("party mismatch is rejected") {
    CHECK_THROWS_AS(read_correlations<W>(path1, Party::p2), CorruptFileError);
  }
  SECTION("truncation is rejected") {
    auto bytes = serialize_correlations(dealt.p1);
    bytes.resize(bytes.size() / 2);
    detail::write_file(path1 + ".trunc", bytes);
    CHECK_THROWS_AS(read_correlations<W>(path1 + ".trunc", Party::p1),
                    CorruptFileError);
  }
  SECTION("bad magic is rejected") {
    auto bytes = serialize_correlations(dealt.p1);
    bytes[0] = 'X';
    detail::write_file(path1 + ".magic", bytes);
    CHECK_THROWS_AS(read_correlations<W>(path1 + ".magic", Party::p1),
                    CorruptFileError);
  }
  SECTION("trailing garbage is rejected") {
    auto bytes = serialize_correlations(dealt.p1);
    bytes.push_back(0);
    detail::write_file(path1 + ".tail", bytes);
    CHECK_THROWS_AS(read_correlations<W>(path1 + ".tail", Party::p1),
                    CorruptFileError);
  }
}

TEST_CASE("file header survives the 8-bit ring", "[correlations]") {
  Rng rng(27);
  auto dealt = make_correlations<std::uint8_t>(4, 2, CorrelationBudget{2, 50, 4, 1}, rng);
  auto bytes = serialize_correlations(dealt.p2);
  auto back = deserialize_correlations<std::uint8_t>(bytes);
  CHECK(back.party == Party::p2);
  CHECK(back.n == 4);
  CHECK(back.m == 2);
  CHECK(back.and_triples.size() == 50);
  // A 64-bit reader must refuse the 8-bit file.
  CHECK_THROWS_AS(deserialize_correlations<std::uint64_t>(bytes), CorruptFileError);
}
