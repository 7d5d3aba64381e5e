#pragma once

// Offline correlated randomness: Beaver multiplication triples, binary AND
// triples, shared random bits, and shuffle correlations. The dealer (played
// by the data owner) generates everything input-independently, self-checks
// the algebraic identities, and writes one file per server.
//
// Correlation file layout (all integers little-endian):
//   magic "OBSK" | u8 version=1 | u8 party | u8 l | u32 n | u32 m
//   u64 beaver_count | u64 and_count | u64 bit_count | u64 shuffle_count
//   beaver section:  per triple, (w, u, v) shares, one ring word each
//   and section:     per triple, (w, u, v) shares, one byte each
//   bits section:    one byte per bit share
//   shuffle section: per correlation,
//     party 1: A1 (n x m words), B (n x m words), pi1 (n x u32)
//     party 2: A2 (n x m words), Delta (n x m words), pi2 (n x u32)

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "obsk/matrix.hpp"
#include "obsk/ring.hpp"

namespace obsk {

class CorruptFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bit pool packed 64 per word in memory; serialized one byte per bit.
class PackedBits {
 public:
  std::size_t size() const { return size_; }

  std::uint8_t get(std::size_t i) const {
    return static_cast<std::uint8_t>((words_[i >> 6] >> (i & 63u)) & 1u);
  }

  void push(std::uint8_t b) {
    if ((size_ & 63u) == 0) words_.push_back(0);
    words_.back() |= std::uint64_t(b & 1u) << (size_ & 63u);
    ++size_;
  }

  void append_random(std::size_t count, Rng& rng) {
    reserve(size_ + count);
    // Fill whole words where possible.
    while (count > 0 && (size_ & 63u) != 0) { push(rng.bit()); --count; }
    while (count >= 64) {
      words_.push_back(rng.next_u64());
      size_ += 64;
      count -= 64;
    }
    while (count > 0) { push(rng.bit()); --count; }
  }

  void reserve(std::size_t bits) { words_.reserve((bits + 63) / 64); }

  friend bool operator==(const PackedBits& a, const PackedBits& b) {
    if (a.size_ != b.size_) return false;
    for (std::size_t i = 0; i < a.size_; ++i)
      if (a.get(i) != b.get(i)) return false;
    return true;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

// One party's view of a scalar Beaver triple / AND triple (for tests and the
// spec-level single-triple API; pools below hold the bulk form).
template <typename W>
struct BeaverTriple {
  ArithShare<W> w, u, v;  // w reconstructs to u * v
};

struct AndTriple {
  BitShare w, u, v;  // w reconstructs to u AND v
};

template <typename W>
struct BeaverPool {
  std::vector<W> w, u, v;
  std::size_t size() const { return w.size(); }
};

struct AndPool {
  PackedBits w, u, v;
  std::size_t size() const { return w.size(); }
};

// Party view of one shuffle correlation. Party 1 holds (A1, B, pi1); party 2
// holds (A2, Delta, pi2) with Delta = pi2(pi1(A2) + A1) - B.
template <typename W>
struct ShuffleCorrelationShare {
  Matrix<W> mask;      // A1 or A2
  Matrix<W> output;    // B (party 1) or Delta (party 2)
  std::vector<std::uint32_t> perm;  // pi1 or pi2
  bool consumed = false;
};

template <typename W>
struct CorrelationSet {
  Party party = Party::p1;
  std::uint32_t n = 0;  // shuffle row count
  std::uint32_t m = 0;  // shuffle column count
  BeaverPool<W> beaver;
  AndPool and_triples;
  PackedBits bits;
  std::vector<ShuffleCorrelationShare<W>> shuffles;
};

// Correlation counts required for one query against an (n, m) database,
// given the worst-case sub-database size. The formulas mirror the engine's
// per-operation costs and are over-provisioned 2x; data-dependent control
// flow in the fetch phase makes exact counts unknowable offline.
struct CorrelationBudget {
  std::uint64_t beaver = 0;
  std::uint64_t and_triples = 0;
  std::uint64_t random_bits = 0;
  std::uint64_t shuffles = 0;

  // AND-triple cost of one secLEQ/SecExt at ring width l: l-1 bitwise ANDs
  // for the carry generate terms plus 2 ANDs per carry-tree combine (the
  // root combine skips its unused propagate product).
  static constexpr std::uint64_t secleq_ands(int l) {
    return std::uint64_t(l - 1) + 2u * std::uint64_t(l - 2) - 1u;
  }

  // AND-triple cost of one ObliDom call on m-dimensional tuples.
  static constexpr std::uint64_t dom_ands(std::uint32_t m, int l) {
    return 2ull * m * secleq_ands(l)  // 2m comparisons
           + 3ull * m                 // beta, beta', alpha&alpha'
           + 2ull * m                 // sigma (OR), omega
           + 2ull * (m - 1)           // sigma-hat AND tree, omega-hat OR tree
           + 1;                       // Phi
  }

  static std::uint64_t gen_ands(std::uint32_t n, std::uint32_t m, int l) {
    return 2ull * n * m * secleq_ands(l)  // range comparisons
           + std::uint64_t(n) * m         // delta_j = alpha & beta
           + std::uint64_t(n) * (m - 1);  // delta-hat AND tree
  }

  static CorrelationBudget for_query(std::uint32_t n, std::uint32_t m, int l,
                                     std::uint32_t max_sub_db,
                                     std::uint64_t extra_beaver = 0) {
    std::uint64_t c = max_sub_db;
    CorrelationBudget b;
    // Fetch worst case: 2*|C|^2 ObliDom calls, plus one OR-accumulate and one
    // mask AND per candidate comparison.
    std::uint64_t fetch = 2ull * c * c * dom_ands(m, l) + 2ull * c * c;
    b.and_triples = 2 * (gen_ands(n, m, l) + fetch);
    b.random_bits = 2 * c * c;
    b.beaver = 2 * extra_beaver;
    b.shuffles = 1;
    return b;
  }

  CorrelationBudget scaled(std::uint64_t queries) const {
    return {beaver * queries, and_triples * queries, random_bits * queries,
            shuffles * queries};
  }
};

// ---------------------------------------------------------------------------
// Generation (dealer side). Each function fills both party views.

template <typename W>
void gen_beaver(std::uint64_t count, Rng& rng, BeaverPool<W>& p1, BeaverPool<W>& p2) {
  p1.w.reserve(p1.w.size() + count);
  for (std::uint64_t i = 0; i < count; ++i) {
    W u1 = rng.word<W>(), u2 = rng.word<W>();
    W v1 = rng.word<W>(), v2 = rng.word<W>();
    W w = ring_mul(ring_add(u1, u2), ring_add(v1, v2));
    W w1 = rng.word<W>();
    p1.u.push_back(u1); p1.v.push_back(v1); p1.w.push_back(w1);
    p2.u.push_back(u2); p2.v.push_back(v2); p2.w.push_back(ring_sub(w, w1));
  }
}

inline void gen_and_triples(std::uint64_t count, Rng& rng, AndPool& p1, AndPool& p2) {
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint8_t u1 = rng.bit(), u2 = rng.bit();
    std::uint8_t v1 = rng.bit(), v2 = rng.bit();
    std::uint8_t w = static_cast<std::uint8_t>((u1 ^ u2) & (v1 ^ v2));
    std::uint8_t w1 = rng.bit();
    p1.u.push(u1); p1.v.push(v1); p1.w.push(w1);
    p2.u.push(u2); p2.v.push(v2); p2.w.push(static_cast<std::uint8_t>(w ^ w1));
  }
}

inline void gen_shared_bits(std::uint64_t count, Rng& rng, PackedBits& p1, PackedBits& p2) {
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint8_t b = rng.bit();
    std::uint8_t s1 = rng.bit();
    p1.push(s1);
    p2.push(static_cast<std::uint8_t>(b ^ s1));
  }
}

// Builds one shuffle correlation from given permutations (test hook) or
// uniformly random ones.
template <typename W>
void make_shuffle_correlation(std::uint32_t n, std::uint32_t m,
                              std::vector<std::uint32_t> pi1,
                              std::vector<std::uint32_t> pi2, Rng& rng,
                              ShuffleCorrelationShare<W>& s1,
                              ShuffleCorrelationShare<W>& s2) {
  Matrix<W> a1 = random_matrix<W>(n, m, rng);
  Matrix<W> a2 = random_matrix<W>(n, m, rng);
  Matrix<W> b = random_matrix<W>(n, m, rng);
  Matrix<W> delta =
      sub_matrices(permute_rows(add_matrices(permute_rows(a2, pi1), a1), pi2), b);
  s1 = {std::move(a1), std::move(b), std::move(pi1), false};
  s2 = {std::move(a2), std::move(delta), std::move(pi2), false};
}

template <typename W>
void gen_shuffle_correlation(std::uint32_t n, std::uint32_t m, Rng& rng,
                             ShuffleCorrelationShare<W>& s1,
                             ShuffleCorrelationShare<W>& s2) {
  make_shuffle_correlation<W>(n, m, rng.permutation(n), rng.permutation(n), rng,
                              s1, s2);
}

template <typename W>
struct DealerOutput {
  CorrelationSet<W> p1, p2;
};

// Self-test: every emitted correlation must satisfy its defining identity
// upon reconstruction. Runs over a sample (or everything for small sets)
// before anything is written out.
template <typename W>
void verify_correlations(const CorrelationSet<W>& p1, const CorrelationSet<W>& p2,
                         std::size_t sample = 4096) {
  auto fail = [](const char* what) {
    throw std::logic_error(std::string("dealer self-test failed: ") + what);
  };
  std::size_t nb = p1.beaver.size();
  std::size_t step = nb > sample ? nb / sample : 1;
  for (std::size_t i = 0; i < nb; i += step) {
    W u = ring_add(p1.beaver.u[i], p2.beaver.u[i]);
    W v = ring_add(p1.beaver.v[i], p2.beaver.v[i]);
    W w = ring_add(p1.beaver.w[i], p2.beaver.w[i]);
    if (w != ring_mul(u, v)) fail("beaver triple");
  }
  std::size_t na = p1.and_triples.size();
  step = na > sample ? na / sample : 1;
  for (std::size_t i = 0; i < na; i += step) {
    std::uint8_t u = p1.and_triples.u.get(i) ^ p2.and_triples.u.get(i);
    std::uint8_t v = p1.and_triples.v.get(i) ^ p2.and_triples.v.get(i);
    std::uint8_t w = p1.and_triples.w.get(i) ^ p2.and_triples.w.get(i);
    if (w != (u & v)) fail("and triple");
  }
  for (std::size_t s = 0; s < p1.shuffles.size(); ++s) {
    const auto& c1 = p1.shuffles[s];
    const auto& c2 = p2.shuffles[s];
    Matrix<W> expect = sub_matrices(
        permute_rows(add_matrices(permute_rows(c2.mask, c1.perm), c1.mask), c2.perm),
        c1.output);
    if (!(expect == c2.output)) fail("shuffle delta identity");
  }
}

template <typename W>
DealerOutput<W> make_correlations(std::uint32_t n, std::uint32_t m,
                                  const CorrelationBudget& budget, Rng& rng) {
  DealerOutput<W> out;
  out.p1.party = Party::p1;
  out.p2.party = Party::p2;
  out.p1.n = out.p2.n = n;
  out.p1.m = out.p2.m = m;
  gen_beaver<W>(budget.beaver, rng, out.p1.beaver, out.p2.beaver);
  gen_and_triples(budget.and_triples, rng, out.p1.and_triples, out.p2.and_triples);
  gen_shared_bits(budget.random_bits, rng, out.p1.bits, out.p2.bits);
  for (std::uint64_t s = 0; s < budget.shuffles; ++s) {
    ShuffleCorrelationShare<W> s1, s2;
    gen_shuffle_correlation<W>(n, m, rng, s1, s2);
    out.p1.shuffles.push_back(std::move(s1));
    out.p2.shuffles.push_back(std::move(s2));
  }
  verify_correlations(out.p1, out.p2);
  return out;
}

// ---------------------------------------------------------------------------
// File I/O.

namespace detail {

constexpr char kCorrMagic[4] = {'O', 'B', 'S', 'K'};
constexpr std::uint8_t kCorrVersion = 1;

class ByteReader {
 public:
  ByteReader(const std::uint8_t* p, std::size_t n) : p_(p), end_(p + n) {}
  const std::uint8_t* take(std::size_t n) {
    if (std::size_t(end_ - p_) < n)
      throw CorruptFileError("correlation file truncated");
    const std::uint8_t* r = p_;
    p_ += n;
    return r;
  }
  std::uint32_t u32() { return get_u32(take(4)); }
  std::uint64_t u64() { return get_u64(take(8)); }
  std::uint8_t u8() { return *take(1); }
  template <typename W>
  W word() { return get_word<W>(take(sizeof(W))); }
  bool done() const { return p_ == end_; }

 private:
  const std::uint8_t* p_;
  const std::uint8_t* end_;
};

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CorruptFileError("cannot open file: " + path);
  f.seekg(0, std::ios::end);
  auto size = static_cast<std::size_t>(f.tellg());
  f.seekg(0);
  std::vector<std::uint8_t> buf(size);
  if (size && !f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size)))
    throw CorruptFileError("short read: " + path);
  return buf;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot create file: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace detail

template <typename W>
std::vector<std::uint8_t> serialize_correlations(const CorrelationSet<W>& set) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), detail::kCorrMagic, detail::kCorrMagic + 4);
  out.push_back(detail::kCorrVersion);
  out.push_back(static_cast<std::uint8_t>(set.party));
  out.push_back(static_cast<std::uint8_t>(RingTraits<W>::bits));
  put_u32(out, set.n);
  put_u32(out, set.m);
  put_u64(out, set.beaver.size());
  put_u64(out, set.and_triples.size());
  put_u64(out, set.bits.size());
  put_u64(out, set.shuffles.size());
  for (std::size_t i = 0; i < set.beaver.size(); ++i) {
    put_word(out, set.beaver.w[i]);
    put_word(out, set.beaver.u[i]);
    put_word(out, set.beaver.v[i]);
  }
  for (std::size_t i = 0; i < set.and_triples.size(); ++i) {
    out.push_back(set.and_triples.w.get(i));
    out.push_back(set.and_triples.u.get(i));
    out.push_back(set.and_triples.v.get(i));
  }
  for (std::size_t i = 0; i < set.bits.size(); ++i) out.push_back(set.bits.get(i));
  for (const auto& s : set.shuffles) {
    for (W v : s.mask.data) put_word(out, v);
    for (W v : s.output.data) put_word(out, v);
    for (std::uint32_t v : s.perm) put_u32(out, v);
  }
  return out;
}

template <typename W>
CorrelationSet<W> deserialize_correlations(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes.data(), bytes.size());
  const std::uint8_t* magic = r.take(4);
  if (!std::equal(magic, magic + 4, detail::kCorrMagic))
    throw CorruptFileError("bad correlation file magic");
  if (r.u8() != detail::kCorrVersion)
    throw CorruptFileError("unsupported correlation file version");
  CorrelationSet<W> set;
  std::uint8_t party = r.u8();
  if (party != 1 && party != 2) throw CorruptFileError("bad party id");
  set.party = static_cast<Party>(party);
  if (r.u8() != RingTraits<W>::bits)
    throw CorruptFileError("ring width mismatch");
  set.n = r.u32();
  set.m = r.u32();
  std::uint64_t nb = r.u64(), na = r.u64(), nbits = r.u64(), ns = r.u64();
  set.beaver.w.reserve(nb); set.beaver.u.reserve(nb); set.beaver.v.reserve(nb);
  for (std::uint64_t i = 0; i < nb; ++i) {
    set.beaver.w.push_back(r.word<W>());
    set.beaver.u.push_back(r.word<W>());
    set.beaver.v.push_back(r.word<W>());
  }
  set.and_triples.w.reserve(na); set.and_triples.u.reserve(na); set.and_triples.v.reserve(na);
  for (std::uint64_t i = 0; i < na; ++i) {
    set.and_triples.w.push(r.u8());
    set.and_triples.u.push(r.u8());
    set.and_triples.v.push(r.u8());
  }
  set.bits.reserve(nbits);
  for (std::uint64_t i = 0; i < nbits; ++i) set.bits.push(r.u8());
  for (std::uint64_t s = 0; s < ns; ++s) {
    ShuffleCorrelationShare<W> sc;
    sc.mask = Matrix<W>(set.n, set.m);
    for (auto& v : sc.mask.data) v = r.word<W>();
    sc.output = Matrix<W>(set.n, set.m);
    for (auto& v : sc.output.data) v = r.word<W>();
    sc.perm.resize(set.n);
    for (auto& v : sc.perm) {
      v = r.u32();
      if (v >= set.n) throw CorruptFileError("permutation index out of range");
    }
    set.shuffles.push_back(std::move(sc));
  }
  if (!r.done()) throw CorruptFileError("trailing bytes in correlation file");
  return set;
}

template <typename W>
void write_correlations(const CorrelationSet<W>& set, const std::string& path) {
  detail::write_file(path, serialize_correlations(set));
}

template <typename W>
CorrelationSet<W> read_correlations(const std::string& path, Party expected_party) {
  auto set = deserialize_correlations<W>(detail::read_file(path));
  if (set.party != expected_party)
    throw CorruptFileError("correlation file belongs to the other party");
  return set;
}

}  // namespace obsk
