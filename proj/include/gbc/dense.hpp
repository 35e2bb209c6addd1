#pragma once

// Small row-major dense matrix and CSR operator with the handful of kernels
// the GCN needs. Products skip zero entries of the left operand, which makes
// sparse bag-of-words features cheap without a separate sparse path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gbc {

template <typename T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, T fill = T{0}) : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  T operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows, cols);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Square CSR operator.
template <typename T>
struct SparseMatrix {
  std::size_t n = 0;
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint32_t> cols;
  std::vector<T> values;

  T at(std::size_t r, std::size_t c) const {
    for (std::uint64_t e = offsets[r]; e < offsets[r + 1]; ++e) {
      if (cols[e] == c) return values[e];
    }
    return T{0};
  }
};

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("dimension mismatch: ") + what);
}
}  // namespace detail

/// A * B.
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  detail::require(a.cols == b.rows, "matmul");
  Matrix<T> c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    T* out = c.data.data() + i * c.cols;
    const T* arow = a.data.data() + i * a.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const T s = arow[k];
      if (s == T{0}) continue;
      const T* brow = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) out[j] += s * brow[j];
    }
  }
  return c;
}

/// A^T * B.
template <typename T>
Matrix<T> matmul_at_b(const Matrix<T>& a, const Matrix<T>& b) {
  detail::require(a.rows == b.rows, "matmul_at_b");
  Matrix<T> c(a.cols, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const T* arow = a.data.data() + i * a.cols;
    const T* brow = b.data.data() + i * b.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const T s = arow[k];
      if (s == T{0}) continue;
      T* out = c.data.data() + k * c.cols;
      for (std::size_t j = 0; j < b.cols; ++j) out[j] += s * brow[j];
    }
  }
  return c;
}

/// A * B^T.
template <typename T>
Matrix<T> matmul_a_bt(const Matrix<T>& a, const Matrix<T>& b) {
  detail::require(a.cols == b.cols, "matmul_a_bt");
  Matrix<T> c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const T* arow = a.data.data() + i * a.cols;
    for (std::size_t k = 0; k < b.rows; ++k) {
      const T* brow = b.data.data() + k * b.cols;
      T s{0};
      for (std::size_t j = 0; j < a.cols; ++j) s += arow[j] * brow[j];
      c(i, k) = s;
    }
  }
  return c;
}

/// S * X for a CSR operator S.
template <typename T>
Matrix<T> spmm(const SparseMatrix<T>& s, const Matrix<T>& x) {
  detail::require(s.n == x.rows, "spmm");
  Matrix<T> y(x.rows, x.cols);
  for (std::size_t i = 0; i < s.n; ++i) {
    T* out = y.data.data() + i * y.cols;
    for (std::uint64_t e = s.offsets[i]; e < s.offsets[i + 1]; ++e) {
      const T w = s.values[e];
      const T* xrow = x.data.data() + std::size_t{s.cols[e]} * x.cols;
      for (std::size_t j = 0; j < x.cols; ++j) out[j] += w * xrow[j];
    }
  }
  return y;
}

}  // namespace gbc
