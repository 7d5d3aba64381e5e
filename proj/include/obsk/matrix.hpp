#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "obsk/ring.hpp"

namespace obsk {

// Row-major n x m matrix of ring words.
template <typename W>
struct Matrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<W> data;

  Matrix() = default;
  Matrix(std::uint32_t r, std::uint32_t c) : rows(r), cols(c), data(std::size_t(r) * c, 0) {}

  W* row(std::uint32_t i) { return data.data() + std::size_t(i) * cols; }
  const W* row(std::uint32_t i) const { return data.data() + std::size_t(i) * cols; }
  W& at(std::uint32_t i, std::uint32_t j) { return data[std::size_t(i) * cols + j]; }
  W at(std::uint32_t i, std::uint32_t j) const { return data[std::size_t(i) * cols + j]; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
  }
};

template <typename W>
Matrix<W> random_matrix(std::uint32_t rows, std::uint32_t cols, Rng& rng) {
  Matrix<W> m(rows, cols);
  for (auto& v : m.data) v = rng.word<W>();
  return m;
}

// Applies an index-vector permutation rowwise: output row i = input row pi[i].
// This convention is used identically everywhere (dealer and shuffler).
template <typename W>
Matrix<W> permute_rows(const Matrix<W>& m, const std::vector<std::uint32_t>& pi) {
  Matrix<W> out(m.rows, m.cols);
  for (std::uint32_t i = 0; i < m.rows; ++i) {
    const W* src = m.row(pi[i]);
    W* dst = out.row(i);
    for (std::uint32_t j = 0; j < m.cols; ++j) dst[j] = src[j];
  }
  return out;
}

template <typename W>
Matrix<W> add_matrices(const Matrix<W>& a, const Matrix<W>& b) {
  Matrix<W> out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = ring_add(a.data[i], b.data[i]);
  return out;
}

template <typename W>
Matrix<W> sub_matrices(const Matrix<W>& a, const Matrix<W>& b) {
  Matrix<W> out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = ring_sub(a.data[i], b.data[i]);
  return out;
}

// One party's half of a secret-shared database: an n x m matrix of arithmetic
// shares. Both parties agree on (n, m).
template <typename W>
struct ShareMatrix {
  Party party = Party::p1;
  Matrix<W> shares;

  std::uint32_t rows() const { return shares.rows; }
  std::uint32_t cols() const { return shares.cols; }
};

template <typename W>
Matrix<W> reconstruct_matrix(const ShareMatrix<W>& a, const ShareMatrix<W>& b) {
  if (a.party == b.party) throw ProtocolError("reconstruct_matrix: same party");
  if (!a.shares.same_shape(b.shares)) throw ProtocolError("reconstruct_matrix: shape mismatch");
  return add_matrices(a.shares, b.shares);
}

}  // namespace obsk
