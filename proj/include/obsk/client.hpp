#pragma once

// Data-owner and user roles: database encryption and outsourcing, query
// extension/encryption, and result decryption with fake-tuple filtering.
//
// Share file layout ("OBDB", little-endian):
//   magic "OBDB" | u8 version=1 | u8 party | u8 l | u32 n | u32 m
//   row-major ring words (one share matrix)
//
// Public metadata travels as a small JSON document: database id, n, m, l,
// and per-dimension public bounds.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "obsk/correlations.hpp"
#include "obsk/matrix.hpp"
#include "obsk/oracle.hpp"
#include "obsk/ring.hpp"
#include "obsk/skyline.hpp"

namespace obsk {

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename W>
struct PublicMetadata {
  std::string id;
  std::uint32_t n = 0;
  std::uint32_t m = 0;
  int ring_bits = RingTraits<W>::bits;
  std::vector<W> bound_lo, bound_hi;  // inclusive, per dimension

  void validate() const {
    if (bound_lo.size() != m || bound_hi.size() != m)
      throw IngestError("metadata bounds do not cover all dimensions");
    for (std::uint32_t j = 0; j < m; ++j) {
      if (bound_lo[j] > bound_hi[j]) throw IngestError("inverted public bounds");
      if (!in_value_domain(bound_hi[j]))
        throw IngestError("public bound outside value domain");
    }
  }

  static PublicMetadata with_default_bounds(std::string id, std::uint32_t n,
                                            std::uint32_t m) {
    PublicMetadata meta;
    meta.id = std::move(id);
    meta.n = n;
    meta.m = m;
    meta.bound_lo.assign(m, 0);
    meta.bound_hi.assign(m, RingTraits<W>::max_value);
    return meta;
  }
};

// ---------------------------------------------------------------------------
// Database encryption.

template <typename W>
struct EncryptedDatabase {
  ShareMatrix<W> p1, p2;
  PublicMetadata<W> meta;
};

template <typename W>
EncryptedDatabase<W> encrypt_database(const PlainDb<W>& db, const std::string& id,
                                      Rng& rng) {
  if (db.empty()) throw IngestError("database has no tuples");
  auto n = static_cast<std::uint32_t>(db.size());
  auto m = static_cast<std::uint32_t>(db[0].size());
  if (m == 0) throw IngestError("database has no dimensions");

  EncryptedDatabase<W> out;
  out.meta = PublicMetadata<W>::with_default_bounds(id, n, m);
  out.p1.party = Party::p1;
  out.p2.party = Party::p2;
  out.p1.shares = Matrix<W>(n, m);
  out.p2.shares = Matrix<W>(n, m);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (db[i].size() != m) throw IngestError("ragged database row " + std::to_string(i));
    for (std::uint32_t j = 0; j < m; ++j) {
      W v = db[i][j];
      if (!in_value_domain(v))
        throw IngestError("value out of domain at row " + std::to_string(i) +
                          ", column " + std::to_string(j));
      W s1 = rng.word<W>();
      out.p1.shares.at(i, j) = s1;
      out.p2.shares.at(i, j) = ring_sub(v, s1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Query extension and encryption.

// Extended plaintext query: ranges for all m dimensions (unselected ones take
// the public bounds) and one 2-bit preference code per dimension.
template <typename W>
struct ExtendedQuery {
  std::vector<W> lo, hi;
  std::vector<std::uint8_t> pref_unselected;  // p'[1]
  std::vector<std::uint8_t> pref_max;         // p'[2]
};

template <typename W>
ExtendedQuery<W> build_query(const PlainQuery<W>& q, const PublicMetadata<W>& meta) {
  q.validate(meta.m);
  for (const auto& d : q.selected)
    if (d.lo < meta.bound_lo[d.dim] || d.hi > meta.bound_hi[d.dim])
      throw std::invalid_argument("query range outside public bounds");

  ExtendedQuery<W> ext;
  ext.lo = meta.bound_lo;
  ext.hi = meta.bound_hi;
  ext.pref_unselected.assign(meta.m, 1);
  ext.pref_max.assign(meta.m, 0);
  for (const auto& d : q.selected) {
    ext.lo[d.dim] = d.lo;
    ext.hi[d.dim] = d.hi;
    ext.pref_unselected[d.dim] = 0;
    ext.pref_max[d.dim] = d.pref == Pref::max ? 1 : 0;
  }
  return ext;
}

template <typename W>
std::pair<QueryShares<W>, QueryShares<W>> encrypt_query(const ExtendedQuery<W>& ext,
                                                        Rng& rng) {
  auto m = static_cast<std::uint32_t>(ext.lo.size());
  QueryShares<W> q1, q2;
  q1.party = Party::p1;
  q2.party = Party::p2;
  for (std::uint32_t j = 0; j < m; ++j) {
    W s = rng.word<W>();
    q1.region_lo.push_back(s);
    q2.region_lo.push_back(ring_sub(ext.lo[j], s));
    s = rng.word<W>();
    q1.region_hi.push_back(s);
    q2.region_hi.push_back(ring_sub(ext.hi[j], s));
    std::uint8_t b = rng.bit();
    q1.pref_unselected.push_back(b);
    q2.pref_unselected.push_back(static_cast<std::uint8_t>(ext.pref_unselected[j] ^ b));
    b = rng.bit();
    q1.pref_max.push_back(b);
    q2.pref_max.push_back(static_cast<std::uint8_t>(ext.pref_max[j] ^ b));
  }
  return {std::move(q1), std::move(q2)};
}

// ---------------------------------------------------------------------------
// Result decryption. Entries flagged isDomi=1 are fakes retained by the
// randomized masking; the user drops them.

template <typename W>
PlainDb<W> decrypt_and_filter(const ResultSetShares<W>& r1,
                              const ResultSetShares<W>& r2) {
  if (r1.party == r2.party) throw ProtocolError("result shares from the same party");
  if (r1.entries.size() != r2.entries.size())
    throw ProtocolError("result set length mismatch between the servers");
  PlainDb<W> out;
  for (std::size_t i = 0; i < r1.entries.size(); ++i) {
    const auto& a = r1.entries[i];
    const auto& b = r2.entries[i];
    if (a.row.size() != b.row.size())
      throw ProtocolError("result entry width mismatch");
    if (((a.is_domi ^ b.is_domi) & 1u) == 1u) continue;
    PlainTuple<W> t(a.row.size());
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = ring_add(a.row[j], b.row[j]);
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files: CSV datasets, OBDB share files, JSON metadata.

template <typename W>
void write_csv(const PlainDb<W>& db, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot create " + path);
  if (db.empty()) throw IngestError("refusing to write empty dataset");
  for (std::size_t j = 0; j < db[0].size(); ++j)
    f << (j ? "," : "") << "d" << (j + 1);
  f << "\n";
  for (const auto& row : db) {
    for (std::size_t j = 0; j < row.size(); ++j)
      f << (j ? "," : "") << std::uint64_t(row[j]);
    f << "\n";
  }
  if (!f) throw std::runtime_error("short write: " + path);
}

template <typename W>
PlainDb<W> read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IngestError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw IngestError("dataset is empty: " + path);
  PlainDb<W> db;
  std::size_t m = 0;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    PlainTuple<W> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::uint64_t v = 0;
      try {
        v = std::stoull(cell);
      } catch (const std::exception&) {
        throw IngestError("bad value '" + cell + "' at line " + std::to_string(lineno));
      }
      if constexpr (sizeof(W) < 8) {
        if (v > std::uint64_t(RingTraits<W>::max_value))
          throw IngestError("value out of domain at line " + std::to_string(lineno));
      }
      row.push_back(static_cast<W>(v));
    }
    if (m == 0) m = row.size();
    if (row.size() != m) throw IngestError("ragged row at line " + std::to_string(lineno));
    db.push_back(std::move(row));
  }
  if (db.empty()) throw IngestError("dataset has a header but no rows: " + path);
  return db;
}

namespace detail {
constexpr char kDbMagic[4] = {'O', 'B', 'D', 'B'};
constexpr std::uint8_t kDbVersion = 1;
}  // namespace detail

template <typename W>
std::vector<std::uint8_t> serialize_share_matrix(const ShareMatrix<W>& sm) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), detail::kDbMagic, detail::kDbMagic + 4);
  out.push_back(detail::kDbVersion);
  out.push_back(static_cast<std::uint8_t>(sm.party));
  out.push_back(static_cast<std::uint8_t>(RingTraits<W>::bits));
  put_u32(out, sm.rows());
  put_u32(out, sm.cols());
  for (W v : sm.shares.data) put_word(out, v);
  return out;
}

template <typename W>
ShareMatrix<W> deserialize_share_matrix(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes.data(), bytes.size());
  const std::uint8_t* magic = r.take(4);
  if (!std::equal(magic, magic + 4, detail::kDbMagic))
    throw CorruptFileError("bad share file magic");
  if (r.u8() != detail::kDbVersion) throw CorruptFileError("bad share file version");
  ShareMatrix<W> sm;
  std::uint8_t party = r.u8();
  if (party != 1 && party != 2) throw CorruptFileError("bad party id in share file");
  sm.party = static_cast<Party>(party);
  if (r.u8() != RingTraits<W>::bits) throw CorruptFileError("ring width mismatch");
  std::uint32_t n = r.u32(), m = r.u32();
  sm.shares = Matrix<W>(n, m);
  for (auto& v : sm.shares.data) v = r.template word<W>();
  if (!r.done()) throw CorruptFileError("trailing bytes in share file");
  return sm;
}

template <typename W>
void write_share_matrix(const ShareMatrix<W>& sm, const std::string& path) {
  detail::write_file(path, serialize_share_matrix(sm));
}

template <typename W>
ShareMatrix<W> read_share_matrix(const std::string& path, Party expected_party) {
  auto sm = deserialize_share_matrix<W>(detail::read_file(path));
  if (sm.party != expected_party)
    throw CorruptFileError("share file belongs to the other party");
  return sm;
}

template <typename W>
void write_metadata(const PublicMetadata<W>& meta, const std::string& path) {
  nlohmann::json j;
  j["id"] = meta.id;
  j["n"] = meta.n;
  j["m"] = meta.m;
  j["l"] = meta.ring_bits;
  j["bound_lo"] = std::vector<std::uint64_t>(meta.bound_lo.begin(), meta.bound_lo.end());
  j["bound_hi"] = std::vector<std::uint64_t>(meta.bound_hi.begin(), meta.bound_hi.end());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot create " + path);
  f << j.dump(2) << "\n";
}

template <typename W>
PublicMetadata<W> read_metadata(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IngestError("cannot open " + path);
  nlohmann::json j;
  f >> j;
  PublicMetadata<W> meta;
  meta.id = j.at("id").get<std::string>();
  meta.n = j.at("n").get<std::uint32_t>();
  meta.m = j.at("m").get<std::uint32_t>();
  meta.ring_bits = j.at("l").get<int>();
  if (meta.ring_bits != RingTraits<W>::bits)
    throw IngestError("metadata ring width mismatch");
  for (auto v : j.at("bound_lo").get<std::vector<std::uint64_t>>())
    meta.bound_lo.push_back(static_cast<W>(v));
  for (auto v : j.at("bound_hi").get<std::vector<std::uint64_t>>())
    meta.bound_hi.push_back(static_cast<W>(v));
  meta.validate();
  return meta;
}

// Plain query JSON, used by the CLI to hand a generated query to the client.
template <typename W>
void write_query(const PlainQuery<W>& q, const std::string& path) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : q.selected) {
    dims.push_back({{"dim", d.dim},
                    {"lo", std::uint64_t(d.lo)},
                    {"hi", std::uint64_t(d.hi)},
                    {"pref", d.pref == Pref::max ? "max" : "min"}});
  }
  nlohmann::json j{{"selected", dims}};
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot create " + path);
  f << j.dump(2) << "\n";
}

template <typename W>
PlainQuery<W> read_query(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IngestError("cannot open " + path);
  nlohmann::json j;
  f >> j;
  PlainQuery<W> q;
  for (const auto& d : j.at("selected")) {
    typename PlainQuery<W>::Dim dim;
    dim.dim = d.at("dim").get<std::uint32_t>();
    dim.lo = static_cast<W>(d.at("lo").get<std::uint64_t>());
    dim.hi = static_cast<W>(d.at("hi").get<std::uint64_t>());
    dim.pref = d.at("pref").get<std::string>() == "max" ? Pref::max : Pref::min;
    q.selected.push_back(dim);
  }
  return q;
}

}  // namespace obsk
