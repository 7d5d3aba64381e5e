#pragma once

// Oblivious database shuffle. The composed permutation pi2(pi1(.)) is applied
// to the shared rows while each server only ever sees its own factor:
//
//   CS2 -> CS1 : Z2 = <T>_2 - A2
//   CS1 -> CS2 : Z1 = pi1(Z2 + <T>_1) - A1
//   outputs      <T~>_1 = B,  <T~>_2 = pi2(Z1) + Delta
//
// with Delta = pi2(pi1(A2) + A1) - B prepared offline. Exactly two
// matrix-sized messages cross the wire; together they count as one round.

#include <cstdint>
#include <vector>

#include "obsk/engine.hpp"
#include "obsk/matrix.hpp"

namespace obsk {

namespace detail {

template <typename W>
std::vector<std::uint8_t> encode_matrix(const Matrix<W>& m) {
  std::vector<std::uint8_t> out;
  out.reserve(m.data.size() * sizeof(W));
  for (W v : m.data) put_word(out, v);
  return out;
}

template <typename W>
Matrix<W> decode_matrix(const std::vector<std::uint8_t>& bytes,
                        std::uint32_t rows, std::uint32_t cols) {
  if (bytes.size() != std::size_t(rows) * cols * sizeof(W))
    throw DesyncError("shuffle message has wrong size");
  Matrix<W> m(rows, cols);
  for (std::size_t i = 0; i < m.data.size(); ++i)
    m.data[i] = get_word<W>(bytes.data() + i * sizeof(W));
  return m;
}

}  // namespace detail

template <typename W>
ShareMatrix<W> obli_shuff(Engine<W>& eng, const ShareMatrix<W>& db) {
  ShuffleCorrelationShare<W>& corr = eng.take_shuffle();
  if (corr.mask.rows != db.rows() || corr.mask.cols != db.cols())
    throw ProtocolError("shuffle correlation dimensions do not match database");

  ShareMatrix<W> out;
  out.party = eng.party();
  if (eng.party() == Party::p2) {
    Matrix<W> z2 = sub_matrices(db.shares, corr.mask);
    eng.send_half(MsgType::shuffle_z2, detail::encode_matrix(z2));
    Frame f = eng.recv_half(MsgType::shuffle_z1);
    Matrix<W> z1 = detail::decode_matrix<W>(f.payload, db.rows(), db.cols());
    out.shares = add_matrices(permute_rows(z1, corr.perm), corr.output);
  } else {
    Frame f = eng.recv_half(MsgType::shuffle_z2);
    Matrix<W> z2 = detail::decode_matrix<W>(f.payload, db.rows(), db.cols());
    Matrix<W> z1 =
        sub_matrices(permute_rows(add_matrices(z2, db.shares), corr.perm), corr.mask);
    eng.send_half(MsgType::shuffle_z1, detail::encode_matrix(z1));
    out.shares = corr.output;  // B
  }
  eng.bump_round();
  return out;
}

}  // namespace obsk
