#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "esdlab/matrix.hpp"

namespace esdlab {

/// Singular values sorted non-increasing, length min(rows, cols).
struct SingularSpectrum {
  std::vector<double> values;
};

/// Eigenvalues with multiplicity, in no particular order.
struct EigenSpectrum {
  std::vector<cplx> values;
};

/// All eigenvalues of a square matrix.
///
/// Balancing, unitary Householder reduction to Hessenberg form, then
/// implicitly shifted QR with deflation when
/// |h(k+1,k)| <= 1e-14 (|h(k,k)| + |h(k+1,k+1)|). Complex input uses
/// single Wilkinson shifts; real input uses the real double-shift (Francis)
/// variant, which applies both Wilkinson candidates of the trailing 2x2 block
/// at once. Budget: 40 sweeps per eigenvalue, exceptional shifts at 10/20/30.
///
/// Jordan blocks of size k are resolved only to about eps^(1/k).
EigenSpectrum eigenvalues(const ComplexMatrix& a);

/// Eigenvalues of a Hermitian matrix (only the lower triangle is trusted),
/// sorted ascending.
std::vector<double> hermitian_eigenvalues(const ComplexMatrix& h);

/// Eigenvalues of the smaller Gram matrix (A A* or A* A), sorted
/// non-increasing and clamped at zero. These are the squared singular values.
///
/// Forming the Gram matrix squares the condition number: singular values
/// below about sqrt(eps) * sigma_1 carry little relative accuracy.
std::vector<double> gram_eigenvalues(const ComplexMatrix& a);

/// One-sided Jacobi when min(rows, cols) <= 128 (full relative accuracy),
/// otherwise square roots of gram_eigenvalues.
SingularSpectrum singular_values(const ComplexMatrix& a);

/// Incrementally built orthonormal basis of row vectors (modified
/// Gram-Schmidt with one reorthogonalization pass).
class OrthonormalRows {
 public:
  explicit OrthonormalRows(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return basis_.size(); }

  /// Distance from `v` to the current span.
  double distance(std::span<const cplx> v) const;

  /// Distance from `v` to the current span, then extends the span by `v`
  /// unless `v` already lies in it (distance <= 1e-14 |v|).
  double add(std::span<const cplx> v);

 private:
  double project_out(std::vector<cplx>& r) const;

  std::size_t dim_;
  std::vector<std::vector<cplx>> basis_;
};

/// d_1 = |row_1|, d_i = dist(row_i, span(row_1..row_{i-1})).
std::vector<double> row_distances(const ComplexMatrix& a);

/// dist(row_j, span of all other rows) for a full-rank n' x n matrix, n' <= n.
/// Throws DegenerateError when sigma_min <= 1e-10 sigma_1.
std::vector<double> leave_one_out_distances(const ComplexMatrix& a);

/// Logarithm of a nonnegative magnitude (typically log|det A|), with an
/// explicit MinusInfinity marker for exact zeros.
class LogMagnitude {
 public:
  static LogMagnitude finite(double v) { return LogMagnitude(v, false); }
  static LogMagnitude minus_infinity() { return LogMagnitude(0.0, true); }

  bool is_minus_infinity() const { return minus_infinity_; }
  /// Throws std::logic_error on the MinusInfinity marker.
  double value() const;

 private:
  LogMagnitude(double v, bool m) : value_(v), minus_infinity_(m) {}
  double value_;
  bool minus_infinity_;
};

enum class LogDetMethod { via_singular, via_distances };

LogMagnitude log_abs_det(const ComplexMatrix& a, LogDetMethod method = LogDetMethod::via_singular);

/// Sum of log(values); MinusInfinity if any value < 1e-300 * max or max == 0.
LogMagnitude sum_of_logs(std::span<const double> values);

/// Hilbert-Schmidt (Frobenius) norm.
double hs_norm(const ComplexMatrix& a);

struct InequalityReport {
  std::size_t checks = 0;
  std::size_t violations = 0;
  /// Largest amount by which an inequality failed (<= 0 when all hold).
  double worst_violation = 0.0;
  bool passed() const { return violations == 0; }
};

/// Interlacing of singular values between A and its first n-k rows:
/// sigma_i(A) >= sigma_i(A') >= sigma_{i+k}(A), slack 1e-9 sigma_1(A).
InequalityReport verify_interlacing(const ComplexMatrix& a, std::size_t k);

struct WeylReport {
  /// sum |lambda|^2 <= sum sigma^2, relative slack 1e-8.
  InequalityReport second_moment;
  /// sum sigma^2 - sum |lambda|^2, normalised by sum sigma^2.
  double second_moment_gap = 0.0;
  /// Both product inequalities in log space, slack 1e-8 n; when r singular
  /// values are at or below 1e-12 sigma_1, the r smallest |lambda| are zeroed.
  InequalityReport products;
};

/// |lambda| sorted ascending, sigma descending; for all J:
///   prod_{j<=J} |lambda_j| <= prod_{j<=J} sigma_j
///   prod_{j>=J} sigma_j    <= prod_{j>=J} |lambda_j|
WeylReport verify_weyl(const ComplexMatrix& a);

}  // namespace esdlab
