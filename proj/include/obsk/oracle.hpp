#pragma once

// Plaintext reference path: user-defined dominance, constrained-region
// membership, and the block-nested-loop skyline over a cleartext database.
// Every encrypted-path test checks against these functions.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "obsk/ring.hpp"

namespace obsk {

enum class Pref : std::uint8_t { min = 0, max = 1 };

// A user-defined skyline query in the clear: a subset of dimensions, one
// closed range and one min/max preference per selected dimension.
template <typename W>
struct PlainQuery {
  struct Dim {
    std::uint32_t dim = 0;  // 0-based dimension index
    W lo = 0;
    W hi = 0;
    Pref pref = Pref::min;
  };
  std::vector<Dim> selected;

  void validate(std::uint32_t m) const {
    if (selected.empty()) throw std::invalid_argument("query selects no dimension");
    for (const auto& d : selected) {
      if (d.dim >= m) throw std::invalid_argument("selected dimension out of range");
      if (d.lo > d.hi) throw std::invalid_argument("inverted range bound");
      if (!in_value_domain(d.hi)) throw std::invalid_argument("range bound outside value domain");
    }
  }
};

template <typename W>
using PlainTuple = std::vector<W>;

template <typename W>
using PlainDb = std::vector<PlainTuple<W>>;

// a dominates b: a is at least as preferred on every selected dimension and
// strictly different on at least one.
template <typename W>
bool dominates(const PlainTuple<W>& a, const PlainTuple<W>& b,
               const PlainQuery<W>& q) {
  bool some_strict = false;
  for (const auto& d : q.selected) {
    W av = a[d.dim], bv = b[d.dim];
    if (d.pref == Pref::min) {
      if (av > bv) return false;
    } else {
      if (av < bv) return false;
    }
    if (av != bv) some_strict = true;
  }
  return some_strict;
}

template <typename W>
bool in_region(const PlainTuple<W>& t, const PlainQuery<W>& q) {
  for (const auto& d : q.selected)
    if (t[d.dim] < d.lo || t[d.dim] > d.hi) return false;
  return true;
}

template <typename W>
PlainDb<W> region_filter(const PlainDb<W>& db, const PlainQuery<W>& q) {
  PlainDb<W> c;
  for (const auto& t : db)
    if (in_region(t, q)) c.push_back(t);
  return c;
}

// Block-nested-loop skyline. Maintains a window of candidates; each scanned
// tuple is discarded if dominated, removes the candidates it dominates, and
// is inserted when incomparable with everything left. Exact duplicates are
// mutually non-dominating and therefore coexist in the window.
template <typename W>
PlainDb<W> bnl_skyline(const PlainDb<W>& db, const PlainQuery<W>& q) {
  PlainDb<W> window;
  for (const auto& t : region_filter(db, q)) {
    bool discarded = false;
    std::size_t j = 0;
    while (j < window.size()) {
      if (dominates(window[j], t, q)) {
        discarded = true;
        break;
      }
      if (dominates(t, window[j], q)) {
        window.erase(window.begin() + static_cast<std::ptrdiff_t>(j));
        continue;
      }
      ++j;
    }
    if (!discarded) window.push_back(t);
  }
  return window;
}

// Multiset comparison helper: skyline output order carries no meaning.
template <typename W>
PlainDb<W> sorted_rows(PlainDb<W> rows) {
  std::sort(rows.begin(), rows.end());
  return rows;
}

template <typename W>
bool same_row_multiset(const PlainDb<W>& a, const PlainDb<W>& b) {
  return sorted_rows(a) == sorted_rows(b);
}

}  // namespace obsk
