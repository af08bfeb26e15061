// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// Dense matrices over F_2 with rank and right-kernel computation.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rk {

using F2Vector = std::vector<std::uint8_t>;

class F2Matrix {
 public:
  F2Matrix() = default;
  F2Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

  static F2Matrix identity(std::size_t n) {
    F2Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, true);
    return m;
  }
  /// Rows given as 0/1 vectors of equal length.
  static F2Matrix from_rows(const std::vector<F2Vector>& rows) {
    std::size_t c = rows.empty() ? 0 : rows.front().size();
    F2Matrix m(rows.size(), c);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != c) throw std::invalid_argument("ragged F2 matrix rows");
      for (std::size_t j = 0; j < c; ++j) m.set(i, j, rows[i][j] & 1);
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool get(std::size_t i, std::size_t j) const { return bits_[i * cols_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v) { bits_[i * cols_ + j] = v ? 1 : 0; }

  F2Matrix transpose() const {
    F2Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t.set(j, i, get(i, j));
    return t;
  }

  /// M x over F_2 for a column vector x of length cols().
  F2Vector apply(const F2Vector& x) const {
    if (x.size() != cols_) throw std::invalid_argument("F2 vector length mismatch");
    F2Vector y(rows_, 0);
    for (std::size_t i = 0; i < rows_; ++i) {
      std::uint8_t s = 0;
      for (std::size_t j = 0; j < cols_; ++j) s ^= static_cast<std::uint8_t>(get(i, j) & (x[j] & 1));
      y[i] = s;
    }
    return y;
  }

  /// Reduced row echelon form in place; returns pivot columns.
  std::vector<std::size_t> rref() {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols_ && r < rows_; ++c) {
      std::size_t sel = r;
      while (sel < rows_ && !get(sel, c)) ++sel;
      if (sel == rows_) continue;
      if (sel != r) {
        for (std::size_t j = 0; j < cols_; ++j) std::swap(bits_[sel * cols_ + j], bits_[r * cols_ + j]);
      }
      for (std::size_t i = 0; i < rows_; ++i) {
        if (i != r && get(i, c)) {
          for (std::size_t j = c; j < cols_; ++j) bits_[i * cols_ + j] ^= bits_[r * cols_ + j];
        }
      }
      pivots.push_back(c);
      ++r;
    }
    return pivots;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Rank of M over F_2 (dimension of its column image).
inline std::size_t f2_image_rank(F2Matrix m) { return m.rref().size(); }

/// Basis of {x : M x = 0}; rank + basis size = cols.
inline std::vector<F2Vector> f2_kernel(F2Matrix m) {
  auto pivots = m.rref();
  std::vector<bool> is_pivot(m.cols(), false);
  for (auto c : pivots) is_pivot[c] = true;
  std::vector<F2Vector> basis;
  for (std::size_t free = 0; free < m.cols(); ++free) {
    if (is_pivot[free]) continue;
    F2Vector v(m.cols(), 0);
    v[free] = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) {
      if (m.get(r, free)) v[pivots[r]] = 1;
    }
    basis.push_back(std::move(v));
  }
  return basis;
}

/// Rank of a family of vectors of equal length.
inline std::size_t f2_span_dim(const std::vector<F2Vector>& vs) {
  if (vs.empty()) return 0;
  return f2_image_rank(F2Matrix::from_rows(vs));
}

}  // namespace rk
