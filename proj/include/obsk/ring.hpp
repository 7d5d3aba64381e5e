#pragma once

// Fixed-width modular ring arithmetic over Z_{2^l} and Z_2, plus additive
// share creation/reconstruction and the local share operations both servers
// can evaluate without interaction.

#include <cstdint>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

namespace obsk {

enum class Party : std::uint8_t { p1 = 1, p2 = 2 };

inline Party other(Party p) { return p == Party::p1 ? Party::p2 : Party::p1; }
inline int party_index(Party p) { return p == Party::p1 ? 0 : 1; }

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ring word type W must be an unsigned integer; all arithmetic wraps mod 2^l
// where l = bit width of W. The production ring is Z_{2^64}; Z_{2^8} exists
// for exhaustive tests.
template <typename W>
struct RingTraits {
  static_assert(std::is_unsigned_v<W>, "ring word must be unsigned");
  static constexpr int bits = static_cast<int>(sizeof(W) * 8);
  // Attribute values and range bounds live in [0, 2^(l-2)) so that
  // |a - b| < 2^(l-1) and the sign of a difference shows up in its MSB.
  static constexpr W value_bound = W(1) << (bits - 2);
  static constexpr W max_value = value_bound - 1;
};

template <typename W>
constexpr W ring_add(W a, W b) { return static_cast<W>(a + b); }
template <typename W>
constexpr W ring_sub(W a, W b) { return static_cast<W>(a - b); }
template <typename W>
constexpr W ring_mul(W a, W b) { return static_cast<W>(a * b); }
template <typename W>
constexpr W ring_neg(W a) { return static_cast<W>(W(0) - a); }

template <typename W>
constexpr bool in_value_domain(W v) { return v < RingTraits<W>::value_bound; }

// Deterministic random source. One instance per role/thread; never shared.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  template <typename W>
  W word() { return static_cast<W>(gen_()); }

  std::uint8_t bit() { return static_cast<std::uint8_t>(gen_() & 1u); }

  // Uniform in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    std::uniform_int_distribution<std::uint64_t> d(0, bound - 1);
    return d(gen_);
  }

  // Uniform permutation of {0..n-1} (Fisher-Yates).
  std::vector<std::uint32_t> permutation(std::uint32_t n) {
    std::vector<std::uint32_t> p(n);
    for (std::uint32_t i = 0; i < n; ++i) p[i] = i;
    for (std::uint32_t i = n; i > 1; --i) {
      auto j = static_cast<std::uint32_t>(below(i));
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }

  std::mt19937_64& generator() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Scalar shares. Batch protocol code works on raw word vectors for speed;
// these carry the party tag for API-level plumbing and tests.

template <typename W>
struct ArithShare {
  W share = 0;
  Party party = Party::p1;
};

struct BitShare {
  std::uint8_t share = 0;  // 0 or 1
  Party party = Party::p1;
};

// Splits x into (s1, x - s1); share_arith draws s1 uniformly.
template <typename W>
std::pair<ArithShare<W>, ArithShare<W>> split_arith(W x, W s1) {
  return {ArithShare<W>{s1, Party::p1},
          ArithShare<W>{ring_sub<W>(x, s1), Party::p2}};
}

template <typename W>
std::pair<ArithShare<W>, ArithShare<W>> share_arith(W x, Rng& rng) {
  return split_arith<W>(x, rng.word<W>());
}

template <typename W>
W reconstruct_arith(const ArithShare<W>& s1, const ArithShare<W>& s2) {
  if (s1.party == s2.party)
    throw ProtocolError("reconstruct_arith: both shares claim the same party");
  return ring_add(s1.share, s2.share);
}

inline std::pair<BitShare, BitShare> split_bit(std::uint8_t b, std::uint8_t s1) {
  return {BitShare{s1, Party::p1},
          BitShare{static_cast<std::uint8_t>((b ^ s1) & 1u), Party::p2}};
}

inline std::pair<BitShare, BitShare> share_bit(std::uint8_t b, Rng& rng) {
  return split_bit(b, rng.bit());
}

inline std::uint8_t reconstruct_bit(const BitShare& s1, const BitShare& s2) {
  if (s1.party == s2.party)
    throw ProtocolError("reconstruct_bit: both shares claim the same party");
  return static_cast<std::uint8_t>((s1.share ^ s2.share) & 1u);
}

// ---------------------------------------------------------------------------
// Local (non-interactive) share operations.

template <typename W>
ArithShare<W> local_add(const ArithShare<W>& a, const ArithShare<W>& b) {
  if (a.party != b.party)
    throw ProtocolError("local_add: operands held by different parties");
  return {ring_add(a.share, b.share), a.party};
}

template <typename W>
ArithShare<W> local_sub(const ArithShare<W>& a, const ArithShare<W>& b) {
  if (a.party != b.party)
    throw ProtocolError("local_sub: operands held by different parties");
  return {ring_sub(a.share, b.share), a.party};
}

// Both parties scale their share by the public constant.
template <typename W>
ArithShare<W> local_const_mul(const ArithShare<W>& a, W c) {
  return {ring_mul(a.share, c), a.party};
}

// Only party 1 adds the public constant.
template <typename W>
ArithShare<W> local_const_add(const ArithShare<W>& a, W c) {
  return {a.party == Party::p1 ? ring_add(a.share, c) : a.share, a.party};
}

inline BitShare local_xor(const BitShare& a, const BitShare& b) {
  if (a.party != b.party)
    throw ProtocolError("local_xor: operands held by different parties");
  return {static_cast<std::uint8_t>((a.share ^ b.share) & 1u), a.party};
}

// NOT: party 1 flips its share, party 2 keeps its share.
inline BitShare local_not(const BitShare& a) {
  return {static_cast<std::uint8_t>(
              a.party == Party::p1 ? (a.share ^ 1u) & 1u : a.share & 1u),
          a.party};
}

// ---------------------------------------------------------------------------
// Little-endian serialization. These encodings are normative for every file
// format and wire message in the project: ring words as 8-byte LE (1 byte in
// the 8-bit test ring), bit shares as a single 0/1 byte.

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

template <typename W>
void put_word(std::vector<std::uint8_t>& out, W v) {
  for (std::size_t i = 0; i < sizeof(W); ++i)
    out.push_back(static_cast<std::uint8_t>(std::uint64_t(v) >> (8 * i)));
}

template <typename W>
W get_word(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(W); ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return static_cast<W>(v);
}

}  // namespace obsk
