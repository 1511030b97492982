#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace esdlab {

using cplx = std::complex<double>;

/// Dense row-major complex matrix. Entries are finite on construction.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix diagonal(std::span<const cplx> d);
  static ComplexMatrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }
  bool empty() const { return entries_.empty(); }

  cplx& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  std::span<cplx> row(std::size_t i) { return {entries_.data() + i * cols_, cols_}; }
  std::span<const cplx> row(std::size_t i) const { return {entries_.data() + i * cols_, cols_}; }

  std::span<const cplx> entries() const { return entries_; }
  std::span<cplx> entries() { return entries_; }

  /// True when every imaginary part is exactly zero.
  bool is_real() const;
  /// True when any entry is NaN or infinite.
  bool has_nonfinite() const;

  ComplexMatrix adjoint() const;
  /// Rows [first, first + count).
  ComplexMatrix row_block(std::size_t first, std::size_t count) const;

  ComplexMatrix& operator+=(const ComplexMatrix& other);
  ComplexMatrix& operator-=(const ComplexMatrix& other);
  ComplexMatrix& operator*=(cplx s);

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> entries_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(ComplexMatrix a, cplx s);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

/// Entrywise (Hadamard) product.
ComplexMatrix hadamard(const ComplexMatrix& a, const ComplexMatrix& b);

/// A - z I for square A.
ComplexMatrix shifted(const ComplexMatrix& a, cplx z);

cplx trace(const ComplexMatrix& a);

}  // namespace esdlab
