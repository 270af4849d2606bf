#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "fds/errors.hpp"

namespace fds {

using index_t = std::ptrdiff_t;
using cdouble = std::complex<double>;

template <typename T> struct is_complex : std::false_type {};
template <typename T> struct is_complex<std::complex<T>> : std::true_type {};
template <typename T> inline constexpr bool is_complex_v = is_complex<T>::value;

inline double conj(double x) { return x; }
inline cdouble conj(cdouble x) { return std::conj(x); }
inline double abs2(double x) { return x * x; }
inline double abs2(cdouble x) { return std::norm(x); }
inline double real_part(double x) { return x; }
inline double real_part(cdouble x) { return x.real(); }

/// Dense row-major matrix over double or complex<double>.
///
/// Entries are stored contiguously row by row; `rows()*cols()` is always the
/// length of the backing array. Copies are deep.
template <typename T> class Matrix {
public:
  using value_type = T;

  Matrix() = default;
  Matrix(index_t rows, index_t cols, T fill = T{})
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(check_dim(rows) * check_dim(cols)), fill) {}

  Matrix(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = static_cast<index_t>(init.size());
    cols_ = rows_ ? static_cast<index_t>(init.begin()->size()) : 0;
    data_.reserve(static_cast<std::size_t>(rows_ * cols_));
    for (const auto& r : init) {
      if (static_cast<index_t>(r.size()) != cols_)
        throw DimensionError("ragged initializer list");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(index_t n) {
    Matrix I(n, n);
    for (index_t i = 0; i < n; ++i) I(i, i) = T(1);
    return I;
  }

  static Matrix diagonal(std::span<const T> d) {
    const auto n = static_cast<index_t>(d.size());
    Matrix D(n, n);
    for (index_t i = 0; i < n; ++i) D(i, i) = d[static_cast<std::size_t>(i)];
    return D;
  }

  index_t rows() const { return rows_; }
  index_t cols() const { return cols_; }
  index_t size() const { return rows_ * cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  T& operator()(index_t i, index_t j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
  const T& operator()(index_t i, index_t j) const {
    return data_[static_cast<std::size_t>(i * cols_ + j)];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T* row_ptr(index_t i) { return data_.data() + i * cols_; }
  const T* row_ptr(index_t i) const { return data_.data() + i * cols_; }
  std::span<T> row(index_t i) { return {row_ptr(i), static_cast<std::size_t>(cols_)}; }
  std::span<const T> row(index_t i) const { return {row_ptr(i), static_cast<std::size_t>(cols_)}; }

  std::vector<T> col(index_t j) const {
    std::vector<T> c(static_cast<std::size_t>(rows_));
    for (index_t i = 0; i < rows_; ++i) c[static_cast<std::size_t>(i)] = (*this)(i, j);
    return c;
  }

  Matrix block(index_t r0, index_t c0, index_t nr, index_t nc) const {
    if (r0 < 0 || c0 < 0 || r0 + nr > rows_ || c0 + nc > cols_)
      throw DimensionError("block out of range");
    Matrix B(nr, nc);
    for (index_t i = 0; i < nr; ++i)
      std::copy_n(row_ptr(r0 + i) + c0, nc, B.row_ptr(i));
    return B;
  }

  void set_block(index_t r0, index_t c0, const Matrix& B) {
    if (r0 < 0 || c0 < 0 || r0 + B.rows() > rows_ || c0 + B.cols() > cols_)
      throw DimensionError("set_block out of range");
    for (index_t i = 0; i < B.rows(); ++i)
      std::copy_n(B.row_ptr(i), B.cols(), row_ptr(r0 + i) + c0);
  }

  Matrix submatrix(std::span<const index_t> r, std::span<const index_t> c) const {
    Matrix B(static_cast<index_t>(r.size()), static_cast<index_t>(c.size()));
    for (std::size_t i = 0; i < r.size(); ++i) {
      const T* src = row_ptr(r[i]);
      T* dst = B.row_ptr(static_cast<index_t>(i));
      for (std::size_t j = 0; j < c.size(); ++j) dst[j] = src[c[j]];
    }
    return B;
  }

  Matrix transpose() const {
    Matrix B(cols_, rows_);
    for (index_t i = 0; i < rows_; ++i)
      for (index_t j = 0; j < cols_; ++j) B(j, i) = (*this)(i, j);
    return B;
  }

  Matrix adjoint() const {
    Matrix B(cols_, rows_);
    for (index_t i = 0; i < rows_; ++i)
      for (index_t j = 0; j < cols_; ++j) B(j, i) = conj((*this)(i, j));
    return B;
  }

  double norm_fro() const {
    double s = 0;
    for (const auto& v : data_) s += abs2(v);
    return std::sqrt(s);
  }

  double norm_max() const {
    double s = 0;
    for (const auto& v : data_) s = std::max(s, std::abs(v));
    return s;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const T& v) {
      if constexpr (is_complex_v<T>)
        return std::isfinite(v.real()) && std::isfinite(v.imag());
      else
        return std::isfinite(v);
    });
  }

  Matrix& operator+=(const Matrix& B) {
    require_same(B);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += B.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& B) {
    require_same(B);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= B.data_[k];
    return *this;
  }
  Matrix& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend Matrix operator+(Matrix A, const Matrix& B) { return A += B; }
  friend Matrix operator-(Matrix A, const Matrix& B) { return A -= B; }
  friend Matrix operator*(T s, Matrix A) { return A *= s; }

private:
  static index_t check_dim(index_t n) {
    if (n < 0) throw DimensionError("negative matrix dimension");
    return n;
  }
  void require_same(const Matrix& B) const {
    if (B.rows_ != rows_ || B.cols_ != cols_) throw DimensionError("shape mismatch");
  }

  index_t rows_ = 0;
  index_t cols_ = 0;
  std::vector<T> data_;
};

using RMatrix = Matrix<double>;
using CMatrix = Matrix<cdouble>;

template <typename T> using Vector = std::vector<T>;
using RVector = std::vector<double>;

/// C = A * B.
template <typename T> Matrix<T> matmul(const Matrix<T>& A, const Matrix<T>& B) {
  if (A.cols() != B.rows()) throw DimensionError("matmul: inner dimensions differ");
  Matrix<T> C(A.rows(), B.cols());
  const index_t n = B.cols();
  for (index_t i = 0; i < A.rows(); ++i) {
    T* c = C.row_ptr(i);
    const T* a = A.row_ptr(i);
    for (index_t k = 0; k < A.cols(); ++k) {
      const T aik = a[k];
      if (aik == T(0)) continue;
      const T* b = B.row_ptr(k);
      for (index_t j = 0; j < n; ++j) c[j] += aik * b[j];
    }
  }
  return C;
}

/// C = A^* * B.
template <typename T> Matrix<T> matmul_adj_left(const Matrix<T>& A, const Matrix<T>& B) {
  if (A.rows() != B.rows()) throw DimensionError("matmul_adj_left: row counts differ");
  Matrix<T> C(A.cols(), B.cols());
  const index_t n = B.cols();
  for (index_t k = 0; k < A.rows(); ++k) {
    const T* a = A.row_ptr(k);
    const T* b = B.row_ptr(k);
    for (index_t i = 0; i < A.cols(); ++i) {
      const T aki = conj(a[i]);
      if (aki == T(0)) continue;
      T* c = C.row_ptr(i);
      for (index_t j = 0; j < n; ++j) c[j] += aki * b[j];
    }
  }
  return C;
}

/// C = A * B^*.
template <typename T> Matrix<T> matmul_adj_right(const Matrix<T>& A, const Matrix<T>& B) {
  if (A.cols() != B.cols()) throw DimensionError("matmul_adj_right: column counts differ");
  Matrix<T> C(A.rows(), B.rows());
  for (index_t i = 0; i < A.rows(); ++i) {
    const T* a = A.row_ptr(i);
    for (index_t j = 0; j < B.rows(); ++j) {
      const T* b = B.row_ptr(j);
      T s{};
      for (index_t k = 0; k < A.cols(); ++k) s += a[k] * conj(b[k]);
      C(i, j) = s;
    }
  }
  return C;
}

/// y = A * x.
template <typename T> std::vector<T> matvec(const Matrix<T>& A, std::span<const T> x) {
  if (static_cast<index_t>(x.size()) != A.cols()) throw DimensionError("matvec: length mismatch");
  std::vector<T> y(static_cast<std::size_t>(A.rows()));
  for (index_t i = 0; i < A.rows(); ++i) {
    const T* a = A.row_ptr(i);
    T s{};
    for (index_t j = 0; j < A.cols(); ++j) s += a[j] * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = s;
  }
  return y;
}

/// y = A^* * x.
template <typename T> std::vector<T> matvec_adj(const Matrix<T>& A, std::span<const T> x) {
  if (static_cast<index_t>(x.size()) != A.rows())
    throw DimensionError("matvec_adj: length mismatch");
  std::vector<T> y(static_cast<std::size_t>(A.cols()));
  for (index_t i = 0; i < A.rows(); ++i) {
    const T* a = A.row_ptr(i);
    const T xi = x[static_cast<std::size_t>(i)];
    for (index_t j = 0; j < A.cols(); ++j) y[static_cast<std::size_t>(j)] += conj(a[j]) * xi;
  }
  return y;
}

template <typename T> Matrix<T> hstack(const Matrix<T>& A, const Matrix<T>& B) {
  if (A.rows() != B.rows()) throw DimensionError("hstack: row counts differ");
  Matrix<T> C(A.rows(), A.cols() + B.cols());
  C.set_block(0, 0, A);
  C.set_block(0, A.cols(), B);
  return C;
}

template <typename T> Matrix<T> vstack(const Matrix<T>& A, const Matrix<T>& B) {
  if (A.cols() != B.cols()) throw DimensionError("vstack: column counts differ");
  Matrix<T> C(A.rows() + B.rows(), A.cols());
  C.set_block(0, 0, A);
  C.set_block(A.rows(), 0, B);
  return C;
}

inline double norm2(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}
inline double norm2(std::span<const cdouble> x) {
  double s = 0;
  for (const auto& v : x) s += std::norm(v);
  return std::sqrt(s);
}
inline double norm_inf(std::span<const double> x) {
  double s = 0;
  for (double v : x) s = std::max(s, std::abs(v));
  return s;
}
inline double norm_inf(std::span<const cdouble> x) {
  double s = 0;
  for (const auto& v : x) s = std::max(s, std::abs(v));
  return s;
}
inline double norm2(const std::vector<double>& x) { return norm2(std::span<const double>(x)); }
inline double norm2(const std::vector<cdouble>& x) { return norm2(std::span<const cdouble>(x)); }
inline double norm_inf(const std::vector<double>& x) { return norm_inf(std::span<const double>(x)); }
inline double norm_inf(const std::vector<cdouble>& x) {
  return norm_inf(std::span<const cdouble>(x));
}

/// Real block embedding [[Re, -Im], [Im, Re]] of a complex matrix.
RMatrix real_embedding(const CMatrix& A);

} // namespace fds
