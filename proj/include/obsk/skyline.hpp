#pragma once

// Query-time protocol stack over the shuffled database: oblivious
// sub-database generation, oblivious user-defined dominance evaluation, and
// oblivious skyline fetching with randomized masked discards and isDomi
// tagging.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "obsk/engine.hpp"
#include "obsk/matrix.hpp"

namespace obsk {

// One party's half of an encrypted query: m closed ranges as arithmetic
// shares and m 2-bit preference vectors as binary shares. Bit 1 set means
// the dimension is unselected; bit 2 set means the user prefers the maximum.
template <typename W>
struct QueryShares {
  Party party = Party::p1;
  std::vector<W> region_lo, region_hi;
  std::vector<std::uint8_t> pref_unselected;  // p'[1]
  std::vector<std::uint8_t> pref_max;         // p'[2]

  std::uint32_t dims() const { return static_cast<std::uint32_t>(region_lo.size()); }
};

template <typename W>
struct ResultEntryShares {
  std::vector<W> row;
  std::uint8_t is_domi = 0;
};

template <typename W>
struct ResultSetShares {
  Party party = Party::p1;
  std::vector<ResultEntryShares<W>> entries;
};

// Per-pair fetch events, recorded when a trace sink is supplied. Both
// opened bits are public to the servers anyway; tests use the trace to
// check the masked-discard statistics against ground truth.
struct FetchEvent {
  std::uint32_t scanned;     // index (within C) of the tuple being scanned
  std::uint32_t candidate;   // index (within C) of the window entry
  std::uint8_t phi1_masked;  // opened Phi_1'
  bool phi2_opened;
  std::uint8_t phi2;
};

struct GenResult {
  std::vector<std::uint8_t> membership;  // opened delta-hat bits, one per row
};

namespace detail {

// Parallel AND-reduction of `groups` contiguous segments of `width` bits
// each (batch-major layout). One engine round per tree level; all groups
// share the rounds. Returns one bit share per group.
template <typename W>
std::vector<std::uint8_t> and_tree(Engine<W>& eng, std::vector<std::uint8_t> flat,
                                   std::size_t groups, std::size_t width) {
  while (width > 1) {
    std::size_t pairs = width / 2;
    bool leftover = (width & 1u) != 0;
    std::vector<std::uint8_t> lhs, rhs;
    lhs.reserve(groups * pairs);
    rhs.reserve(groups * pairs);
    for (std::size_t g = 0; g < groups; ++g) {
      const std::uint8_t* b = flat.data() + g * width;
      for (std::size_t t = 0; t < pairs; ++t) {
        lhs.push_back(b[2 * t]);
        rhs.push_back(b[2 * t + 1]);
      }
    }
    std::vector<std::uint8_t> prod = eng.and_bits(lhs, rhs);
    std::size_t new_width = pairs + (leftover ? 1 : 0);
    std::vector<std::uint8_t> next(groups * new_width);
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t t = 0; t < pairs; ++t)
        next[g * new_width + t] = prod[g * pairs + t];
      if (leftover) next[g * new_width + pairs] = flat[g * width + width - 1];
    }
    flat = std::move(next);
    width = new_width;
  }
  return flat;
}

}  // namespace detail

// Oblivious sub-database generation. Emits the rows of the shuffled database
// whose delta-hat bit opens to 1, preserving shuffled order. Every range
// check of every row is issued as one comparison batch, so the whole pass
// costs a constant number of rounds plus one opening of n bits.
template <typename W>
ShareMatrix<W> obli_gen(Engine<W>& eng, const ShareMatrix<W>& db,
                        const QueryShares<W>& query, GenResult* out = nullptr) {
  const std::uint32_t n = db.rows();
  const std::uint32_t m = db.cols();
  if (query.dims() != m)
    throw ProtocolError("query dimensionality does not match database");

  // alpha_ij = (lo_j <= t_i[j]), beta_ij = (t_i[j] <= hi_j).
  std::vector<W> lhs(2 * std::size_t(n) * m), rhs(2 * std::size_t(n) * m);
  for (std::uint32_t i = 0; i < n; ++i) {
    const W* row = db.shares.row(i);
    for (std::uint32_t j = 0; j < m; ++j) {
      std::size_t k = std::size_t(i) * m + j;
      lhs[k] = query.region_lo[j];
      rhs[k] = row[j];
      lhs[std::size_t(n) * m + k] = row[j];
      rhs[std::size_t(n) * m + k] = query.region_hi[j];
    }
  }
  std::vector<std::uint8_t> cmp = eng.sec_leq(lhs, rhs);
  std::vector<std::uint8_t> alpha(cmp.begin(), cmp.begin() + std::size_t(n) * m);
  std::vector<std::uint8_t> beta(cmp.begin() + std::size_t(n) * m, cmp.end());
  std::vector<std::uint8_t> delta = eng.and_bits(alpha, beta);
  std::vector<std::uint8_t> delta_hat = detail::and_tree(eng, std::move(delta), n, m);
  std::vector<std::uint8_t> open = eng.open_bits(delta_hat, OpenTag::delta_hat);

  ShareMatrix<W> sub;
  sub.party = eng.party();
  std::uint32_t kept = 0;
  for (std::uint32_t i = 0; i < n; ++i) kept += open[i];
  sub.shares = Matrix<W>(kept, m);
  std::uint32_t r = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!open[i]) continue;
    const W* src = db.shares.row(i);
    W* dst = sub.shares.row(r++);
    for (std::uint32_t j = 0; j < m; ++j) dst[j] = src[j];
  }
  if (out) out->membership = std::move(open);
  return sub;
}

// Oblivious user-defined dominance: shared flag Phi = (a dominates b) under
// the shared preference vectors. All 2m comparisons go out as one batch;
// per-dimension consistency and strictness terms follow, then a log-depth
// aggregation.
template <typename W>
std::uint8_t obli_dom(Engine<W>& eng, std::span<const W> a, std::span<const W> b,
                      const QueryShares<W>& query) {
  const std::size_t m = query.dims();
  std::vector<W> lhs(2 * m), rhs(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    lhs[i] = a[i];          // alpha_i = (a[i] <= b[i])
    rhs[i] = b[i];
    lhs[m + i] = b[i];      // alpha'_i = (b[i] <= a[i])
    rhs[m + i] = a[i];
  }
  std::vector<std::uint8_t> cmp = eng.sec_leq(lhs, rhs);
  std::span<const std::uint8_t> alpha(cmp.data(), m);
  std::span<const std::uint8_t> alpha_p(cmp.data() + m, m);

  // Round 1: beta_i = !p2 & alpha_i, beta'_i = p2 & alpha'_i, eq-term
  // alpha_i & alpha'_i.
  std::vector<std::uint8_t> l1, r1;
  l1.reserve(3 * m);
  r1.reserve(3 * m);
  std::vector<std::uint8_t> not_p2 = eng.not_bits(query.pref_max);
  for (std::size_t i = 0; i < m; ++i) { l1.push_back(not_p2[i]); r1.push_back(alpha[i]); }
  for (std::size_t i = 0; i < m; ++i) { l1.push_back(query.pref_max[i]); r1.push_back(alpha_p[i]); }
  for (std::size_t i = 0; i < m; ++i) { l1.push_back(alpha[i]); r1.push_back(alpha_p[i]); }
  std::vector<std::uint8_t> prod1 = eng.and_bits(l1, r1);

  // phi_i = beta_i ^ beta'_i; sigma_i = phi_i | p1_i; omega_i = !(alpha_i &
  // alpha'_i) & !p1_i. The OR and the omega ANDs share one round.
  std::vector<std::uint8_t> not_p1 = eng.not_bits(query.pref_unselected);
  std::vector<std::uint8_t> l2, r2;
  l2.reserve(2 * m);
  r2.reserve(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    std::uint8_t phi = static_cast<std::uint8_t>((prod1[i] ^ prod1[m + i]) & 1u);
    l2.push_back(eng.not_bit(phi));
    r2.push_back(not_p1[i]);
  }
  for (std::size_t i = 0; i < m; ++i) {
    l2.push_back(eng.not_bit(prod1[2 * m + i]));
    r2.push_back(not_p1[i]);
  }
  std::vector<std::uint8_t> prod2 = eng.and_bits(l2, r2);

  // sigma-hat = AND of sigma_i; omega-hat = OR of omega_i = !(AND of
  // !omega_i). Both trees run in the same rounds.
  std::vector<std::uint8_t> flat(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    // prod2[i] = !phi_i & !p1_i, so sigma_i is its negation.
    flat[i] = eng.not_bit(prod2[i]);
    // prod2[m+i] = omega_i; feed !omega_i into the AND tree.
    flat[m + i] = eng.not_bit(prod2[m + i]);
  }
  std::vector<std::uint8_t> roots = detail::and_tree(eng, std::move(flat), 2, m);
  std::uint8_t sigma_hat = roots[0];
  std::uint8_t omega_hat = eng.not_bit(roots[1]);
  return eng.and_bits(std::vector<std::uint8_t>{sigma_hat},
                      std::vector<std::uint8_t>{omega_hat})[0];
}

// Opens Phi_1 & r for a freshly sampled shared random bit r (each server
// contributes one uniform share). A zero Phi_1 therefore always opens as
// zero; a one opens as one only half the time.
template <typename W>
std::uint8_t mask_bit(Engine<W>& eng, std::uint8_t phi1_share) {
  std::uint8_t r_share = eng.rng().bit();
  std::uint8_t masked = eng.and_bits(std::vector<std::uint8_t>{phi1_share},
                                     std::vector<std::uint8_t>{r_share})[0];
  return eng.open_bits(std::vector<std::uint8_t>{masked}, OpenTag::phi1_masked)[0];
}

// Oblivious skyline fetch over the sub-database C (shuffled order). The
// window is an order-preserving vector scanned by index; removal does not
// advance the index, so the element shifted into the slot is not skipped.
template <typename W>
ResultSetShares<W> obli_fetch(Engine<W>& eng, const ShareMatrix<W>& sub_db,
                              const QueryShares<W>& query,
                              std::vector<FetchEvent>* trace = nullptr) {
  const std::uint32_t c = sub_db.rows();
  const std::uint32_t m = sub_db.cols();
  if (query.dims() != m)
    throw ProtocolError("query dimensionality does not match sub-database");

  ResultSetShares<W> result;
  result.party = eng.party();
  std::vector<std::uint32_t> origin;  // C-row index of each window entry
  if (c == 0) return result;

  auto row_of = [&](std::uint32_t i) {
    return std::span<const W>(sub_db.shares.row(i), m);
  };

  result.entries.push_back({{row_of(0).begin(), row_of(0).end()}, 0});
  origin.push_back(0);

  for (std::uint32_t i = 1; i < c; ++i) {
    bool keep = true;
    std::uint8_t phi_acc = 0;  // shared accumulator, starts as public 0
    std::size_t j = 0;
    while (j < result.entries.size()) {
      std::span<const W> cand(result.entries[j].row.data(), m);
      std::uint8_t phi1 = obli_dom(eng, cand, row_of(i), query);

      // One round: OR-accumulate into phi_acc and mask phi1 with a fresh
      // random bit.
      std::uint8_t r_share = eng.rng().bit();
      std::vector<std::uint8_t> pair_out =
          eng.and_bits(std::vector<std::uint8_t>{eng.not_bit(phi_acc), phi1},
                       std::vector<std::uint8_t>{eng.not_bit(phi1), r_share});
      phi_acc = eng.not_bit(pair_out[0]);
      std::uint8_t phi1_masked =
          eng.open_bits(std::vector<std::uint8_t>{pair_out[1]}, OpenTag::phi1_masked)[0];

      if (phi1_masked == 1) {
        if (trace) trace->push_back({i, origin[j], 1, false, 0});
        keep = false;
        break;
      }

      std::uint8_t phi2 = obli_dom(eng, row_of(i), cand, query);
      std::uint8_t phi2_open =
          eng.open_bits(std::vector<std::uint8_t>{phi2}, OpenTag::phi2)[0];
      if (trace) trace->push_back({i, origin[j], 0, true, phi2_open});
      if (phi2_open == 1) {
        result.entries.erase(result.entries.begin() + static_cast<std::ptrdiff_t>(j));
        origin.erase(origin.begin() + static_cast<std::ptrdiff_t>(j));
        continue;  // same index now holds the next candidate
      }
      ++j;
    }
    if (keep) {
      result.entries.push_back({{row_of(i).begin(), row_of(i).end()}, phi_acc});
      origin.push_back(i);
    }
  }
  return result;
}

}  // namespace obsk
