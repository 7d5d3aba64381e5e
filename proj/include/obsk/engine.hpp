#pragma once

// Two-party interactive protocol layer. One Engine per party per session,
// driving a lock-step exchange sequence over a transport: batched share
// openings, Beaver multiplication, binary AND/XOR/NOT/OR, MSB extraction of
// a shared difference, and the <=-comparison built on it.
//
// Every exchanged frame carries (session id, round, op tag); any divergence
// between the parties' operation sequences is detected on receipt and aborts
// the session rather than silently desynchronizing.

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obsk/correlations.hpp"
#include "obsk/ring.hpp"
#include "obsk/transport.hpp"

namespace obsk {

class DesyncError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

// Purpose tag carried in the first payload byte of every engine exchange.
// The transcript scanner keys off these to audit what is opened on the wire.
enum class OpenTag : std::uint8_t {
  beaver_ef = 1,    // (e, f) masks of an arithmetic Beaver multiplication
  and_ef = 2,       // (e, f) masks of a binary AND (includes adder internals)
  delta_hat = 3,    // sub-database membership bits (opened over shuffled rows)
  phi1_masked = 4,  // randomized dominance flags
  phi2 = 5,         // reverse dominance flags
};

struct TranscriptEvent {
  MsgType msg;
  OpenTag tag;
  std::size_t count;  // opened element count
};

struct ConsumptionCounters {
  std::uint64_t beaver = 0;
  std::uint64_t and_triples = 0;
  std::uint64_t random_bits = 0;
  std::uint64_t shuffles = 0;
};

template <typename W>
class Engine {
 public:
  static constexpr int kRingBits = RingTraits<W>::bits;

  Engine(Party party, Transport& transport, CorrelationSet<W>& corr,
         std::uint64_t session_id, std::uint64_t rng_seed)
      : party_(party), transport_(transport), corr_(corr),
        session_id_(session_id), rng_(rng_seed) {
    if (corr.party != party)
      throw ProtocolError("correlation set belongs to the other party");
  }

  Party party() const { return party_; }
  std::uint64_t session_id() const { return session_id_; }
  std::uint32_t rounds() const { return round_; }
  std::uint64_t bytes_sent() const { return bytes_sent_; }
  const ConsumptionCounters& consumed() const { return consumed_; }
  CorrelationSet<W>& correlations() { return corr_; }
  Rng& rng() { return rng_; }

  std::vector<TranscriptEvent>* transcript = nullptr;

  // Verifies that both parties loaded matching correlation material before
  // any of it is consumed.
  void sync_check() {
    std::vector<std::uint8_t> info;
    put_u32(info, corr_.n);
    put_u32(info, corr_.m);
    info.push_back(static_cast<std::uint8_t>(kRingBits));
    put_u64(info, corr_.beaver.size());
    put_u64(info, corr_.and_triples.size());
    put_u64(info, corr_.bits.size());
    put_u64(info, corr_.shuffles.size());
    Frame theirs = exchange(MsgType::corr_sync, info);
    if (theirs.payload != info)
      throw DesyncError("correlation material differs between the servers");
  }

  // -------------------------------------------------------------------------
  // Openings. One exchange per batch; both parties end up with the values.

  std::vector<W> open_arith(std::span<const W> shares, OpenTag tag,
                            MsgType msg = MsgType::open_batch) {
    std::vector<std::uint8_t> payload;
    payload.reserve(5 + shares.size() * sizeof(W));
    payload.push_back(static_cast<std::uint8_t>(tag));
    put_u32(payload, static_cast<std::uint32_t>(shares.size()));
    for (W s : shares) put_word(payload, s);
    Frame theirs = exchange(msg, payload);
    check_open_header(theirs, tag, shares.size(), shares.size() * sizeof(W), msg);
    std::vector<W> out(shares.size());
    const std::uint8_t* p = theirs.payload.data() + 5;
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = ring_add(shares[i], get_word<W>(p + i * sizeof(W)));
    note(msg, tag, shares.size());
    return out;
  }

  std::vector<std::uint8_t> open_bits(std::span<const std::uint8_t> shares,
                                      OpenTag tag,
                                      MsgType msg = MsgType::open_batch) {
    std::vector<std::uint8_t> payload;
    payload.reserve(5 + shares.size());
    payload.push_back(static_cast<std::uint8_t>(tag));
    put_u32(payload, static_cast<std::uint32_t>(shares.size()));
    payload.insert(payload.end(), shares.begin(), shares.end());
    Frame theirs = exchange(msg, payload);
    check_open_header(theirs, tag, shares.size(), shares.size(), msg);
    std::vector<std::uint8_t> out(shares.size());
    const std::uint8_t* p = theirs.payload.data() + 5;
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<std::uint8_t>((shares[i] ^ p[i]) & 1u);
    note(msg, tag, shares.size());
    return out;
  }

  // -------------------------------------------------------------------------
  // Arithmetic multiplication via Beaver triples; one (e, f) exchange per
  // batch.

  std::vector<W> mul(std::span<const W> x, std::span<const W> y) {
    if (x.size() != y.size()) throw ProtocolError("mul: batch size mismatch");
    std::size_t b = x.size();
    std::size_t base = take_beaver(b);
    std::vector<W> ef(2 * b);
    for (std::size_t i = 0; i < b; ++i) {
      ef[i] = ring_sub(x[i], corr_.beaver.u[base + i]);
      ef[b + i] = ring_sub(y[i], corr_.beaver.v[base + i]);
    }
    std::vector<W> open = open_arith(ef, OpenTag::beaver_ef, MsgType::engine_round);
    std::vector<W> z(b);
    for (std::size_t i = 0; i < b; ++i) {
      W e = open[i], f = open[b + i];
      W zi = ring_add(ring_mul(f, corr_.beaver.u[base + i]),
                      ring_add(ring_mul(e, corr_.beaver.v[base + i]),
                               corr_.beaver.w[base + i]));
      if (party_ == Party::p1) zi = ring_add(zi, ring_mul(e, f));
      z[i] = zi;
    }
    return z;
  }

  // -------------------------------------------------------------------------
  // Binary domain. XOR and NOT are local; AND consumes one triple per
  // element; OR is De Morgan over one AND.

  std::vector<std::uint8_t> and_bits(std::span<const std::uint8_t> x,
                                     std::span<const std::uint8_t> y) {
    if (x.size() != y.size()) throw ProtocolError("and_bits: batch size mismatch");
    std::size_t b = x.size();
    std::size_t base = take_and(b);
    std::vector<std::uint8_t> ef(2 * b);
    for (std::size_t i = 0; i < b; ++i) {
      ef[i] = static_cast<std::uint8_t>((x[i] ^ corr_.and_triples.u.get(base + i)) & 1u);
      ef[b + i] = static_cast<std::uint8_t>((y[i] ^ corr_.and_triples.v.get(base + i)) & 1u);
    }
    std::vector<std::uint8_t> open = open_bits(ef, OpenTag::and_ef, MsgType::engine_round);
    std::vector<std::uint8_t> z(b);
    for (std::size_t i = 0; i < b; ++i) {
      std::uint8_t e = open[i], f = open[b + i];
      std::uint8_t zi = static_cast<std::uint8_t>(
          (f & corr_.and_triples.u.get(base + i)) ^
          (e & corr_.and_triples.v.get(base + i)) ^
          corr_.and_triples.w.get(base + i));
      if (party_ == Party::p1) zi ^= static_cast<std::uint8_t>(e & f);
      z[i] = static_cast<std::uint8_t>(zi & 1u);
    }
    return z;
  }

  std::vector<std::uint8_t> xor_bits(std::span<const std::uint8_t> x,
                                     std::span<const std::uint8_t> y) const {
    if (x.size() != y.size()) throw ProtocolError("xor_bits: batch size mismatch");
    std::vector<std::uint8_t> z(x.size());
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] = static_cast<std::uint8_t>((x[i] ^ y[i]) & 1u);
    return z;
  }

  std::vector<std::uint8_t> not_bits(std::span<const std::uint8_t> x) const {
    std::vector<std::uint8_t> z(x.begin(), x.end());
    if (party_ == Party::p1)
      for (auto& b : z) b = static_cast<std::uint8_t>((b ^ 1u) & 1u);
    return z;
  }

  std::uint8_t not_bit(std::uint8_t share) const {
    return party_ == Party::p1 ? static_cast<std::uint8_t>((share ^ 1u) & 1u)
                               : static_cast<std::uint8_t>(share & 1u);
  }

  std::vector<std::uint8_t> or_bits(std::span<const std::uint8_t> x,
                                    std::span<const std::uint8_t> y) {
    return not_bits(and_bits(not_bits(x), not_bits(y)));
  }

  // -------------------------------------------------------------------------
  // Comparison. sec_ext extracts the shared MSB of (a - b); for plaintexts
  // in the value domain [0, 2^(l-2)) that bit is 1 exactly when a < b.
  //
  // Realization: each party's arithmetic share of d = a - b is treated as a
  // private l-bit input. The MSB of the sum of the two inputs is the XOR of
  // their top bits with the carry into bit l-1; that single carry is the
  // generate term of a (g, p) prefix over bits 0..l-2, reduced by a
  // log-depth tree whose per-level ANDs are batched across the whole
  // comparison batch.

  std::vector<std::uint8_t> sec_ext(std::span<const W> a, std::span<const W> b) {
    if (a.size() != b.size()) throw ProtocolError("sec_ext: batch size mismatch");
    const std::size_t batch = a.size();
    if (batch == 0) return {};
    const int low_bits = kRingBits - 1;

    std::vector<W> d(batch);
    for (std::size_t i = 0; i < batch; ++i) d[i] = ring_sub(a[i], b[i]);

    // XOR-share layout: party 1's input x has shares (bits(d), 0); party 2's
    // input y has shares (0, bits(d)). Flattened as batch-major per bit
    // position: index i * low_bits + j.
    std::vector<std::uint8_t> x(batch * low_bits, 0), y(batch * low_bits, 0);
    std::vector<std::uint8_t>& own = party_ == Party::p1 ? x : y;
    for (std::size_t i = 0; i < batch; ++i)
      for (int j = 0; j < low_bits; ++j)
        own[i * low_bits + j] = static_cast<std::uint8_t>((std::uint64_t(d[i]) >> j) & 1u);

    // g_j = x_j & y_j, p_j = x_j ^ y_j for positions 0..l-2.
    std::vector<std::uint8_t> g = and_bits(x, y);
    std::vector<std::uint8_t> p = xor_bits(x, y);

    // Tree reduction of contiguous (g, p) segments, low to high:
    // (G_hi, P_hi) o (G_lo, P_lo) = (G_hi ^ (P_hi & G_lo), P_hi & P_lo).
    std::size_t width = static_cast<std::size_t>(low_bits);
    while (width > 1) {
      std::size_t pairs = width / 2;
      bool leftover = (width & 1u) != 0;
      bool final_level = (pairs + (leftover ? 1 : 0)) == 1;
      // Left operands of the level's ANDs: P_hi repeated for (G_lo, P_lo).
      std::vector<std::uint8_t> lhs, rhs;
      std::size_t per = final_level ? 1 : 2;
      lhs.reserve(batch * pairs * per);
      rhs.reserve(batch * pairs * per);
      for (std::size_t i = 0; i < batch; ++i) {
        const std::uint8_t* gb = g.data() + i * width;
        const std::uint8_t* pb = p.data() + i * width;
        for (std::size_t t = 0; t < pairs; ++t) {
          lhs.push_back(pb[2 * t + 1]);
          rhs.push_back(gb[2 * t]);
          if (!final_level) {
            lhs.push_back(pb[2 * t + 1]);
            rhs.push_back(pb[2 * t]);
          }
        }
      }
      std::vector<std::uint8_t> prod = and_bits(lhs, rhs);
      std::size_t new_width = pairs + (leftover ? 1 : 0);
      std::vector<std::uint8_t> ng(batch * new_width), np(batch * new_width, 0);
      for (std::size_t i = 0; i < batch; ++i) {
        const std::uint8_t* gb = g.data() + i * width;
        const std::uint8_t* pb = p.data() + i * width;
        const std::uint8_t* pr = prod.data() + i * pairs * per;
        for (std::size_t t = 0; t < pairs; ++t) {
          ng[i * new_width + t] =
              static_cast<std::uint8_t>((gb[2 * t + 1] ^ pr[t * per]) & 1u);
          if (!final_level)
            np[i * new_width + t] = pr[t * per + 1];
        }
        if (leftover) {
          ng[i * new_width + pairs] = gb[width - 1];
          np[i * new_width + pairs] = pb[width - 1];
        }
      }
      g = std::move(ng);
      p = std::move(np);
      width = new_width;
    }

    // msb = x_{l-1} ^ y_{l-1} ^ carry; only the owning party holds the top
    // input bit, so each party XORs its own.
    std::vector<std::uint8_t> msb(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      std::uint8_t top = static_cast<std::uint8_t>((std::uint64_t(d[i]) >> (kRingBits - 1)) & 1u);
      msb[i] = static_cast<std::uint8_t>((g[i] ^ top) & 1u);
    }
    return msb;
  }

  // a <= b, as NOT(sec_ext(b, a)).
  std::vector<std::uint8_t> sec_leq(std::span<const W> a, std::span<const W> b) {
    return not_bits(sec_ext(b, a));
  }

  // -------------------------------------------------------------------------
  // Correlation consumption.

  std::size_t take_beaver(std::size_t count) {
    if (consumed_.beaver + count > corr_.beaver.size())
      throw BudgetError("beaver triple budget exhausted");
    std::size_t base = consumed_.beaver;
    consumed_.beaver += count;
    return base;
  }

  std::size_t take_and(std::size_t count) {
    if (consumed_.and_triples + count > corr_.and_triples.size())
      throw BudgetError("and triple budget exhausted");
    std::size_t base = consumed_.and_triples;
    consumed_.and_triples += count;
    return base;
  }

  std::size_t take_random_bit() {
    if (consumed_.random_bits + 1 > corr_.bits.size())
      throw BudgetError("shared random bit budget exhausted");
    return consumed_.random_bits++;
  }

  ShuffleCorrelationShare<W>& take_shuffle() {
    if (consumed_.shuffles >= corr_.shuffles.size())
      throw BudgetError("shuffle correlation budget exhausted");
    auto& s = corr_.shuffles[consumed_.shuffles++];
    if (s.consumed) throw ProtocolError("shuffle correlation reused");
    s.consumed = true;
    return s;
  }

  // -------------------------------------------------------------------------
  // Raw exchange: both parties send one frame and receive the peer's frame
  // for the same round. Party 1 talks first; party 2 answers. One exchange
  // is one protocol round.

  Frame exchange(MsgType type, const std::vector<std::uint8_t>& payload) {
    Frame mine{type, session_id_, round_, payload};
    Frame theirs;
    if (party_ == Party::p1) {
      send(mine);
      theirs = recv();
    } else {
      theirs = recv();
      send(mine);
    }
    if (theirs.type != type)
      throw DesyncError("peer sent msg_type " + std::to_string(int(theirs.type)) +
                        ", expected " + std::to_string(int(type)));
    if (theirs.session_id != session_id_)
      throw DesyncError("peer frame belongs to another session");
    if (theirs.round != round_)
      throw DesyncError("round mismatch: local " + std::to_string(round_) +
                        ", peer " + std::to_string(theirs.round));
    ++round_;
    return theirs;
  }

  // One-way legs used by the shuffle (party 2 -> 1, then 1 -> 2). The pair
  // of legs advances the round counter once.
  void send_half(MsgType type, const std::vector<std::uint8_t>& payload) {
    send(Frame{type, session_id_, round_, payload});
  }

  Frame recv_half(MsgType type) {
    Frame f = recv();
    if (f.type != type) throw DesyncError("unexpected msg_type in shuffle leg");
    if (f.session_id != session_id_) throw DesyncError("session id mismatch");
    if (f.round != round_) throw DesyncError("round mismatch in shuffle leg");
    return f;
  }

  void bump_round() { ++round_; }

 private:
  void send(const Frame& f) {
    transport_.send_frame(f);
    bytes_sent_ += f.wire_size();
  }

  Frame recv() { return transport_.recv_frame(); }

  void check_open_header(const Frame& theirs, OpenTag tag, std::size_t count,
                         std::size_t data_bytes, MsgType msg) {
    (void)msg;
    if (theirs.payload.size() != 5 + data_bytes)
      throw DesyncError("open batch length mismatch between parties");
    if (theirs.payload[0] != static_cast<std::uint8_t>(tag))
      throw DesyncError("open tag mismatch between parties");
    if (get_u32(theirs.payload.data() + 1) != count)
      throw DesyncError("open count mismatch between parties");
  }

  void note(MsgType msg, OpenTag tag, std::size_t count) {
    if (transcript) transcript->push_back({msg, tag, count});
  }

  Party party_;
  Transport& transport_;
  CorrelationSet<W>& corr_;
  std::uint64_t session_id_;
  std::uint32_t round_ = 0;
  std::uint64_t bytes_sent_ = 0;
  ConsumptionCounters consumed_;
  Rng rng_;
};

}  // namespace obsk
