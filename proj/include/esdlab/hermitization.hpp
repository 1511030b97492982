#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "esdlab/limits.hpp"
#include "esdlab/matrix.hpp"
#include "esdlab/measures.hpp"
#include "esdlab/numerics.hpp"

namespace esdlab {

/// Square lattice of side 2 extent around `center`. Points sit at half-step
/// offsets, center + (-extent + (j + 1/2) step) + i(-extent + (k + 1/2) step),
/// so integer and half-integer atoms never collide with them. Ordered with
/// the imaginary index outer.
struct LatticeSpec {
  cplx center = 0.0;
  double extent = 1.0;
  double step = 0.5;

  /// Throws ConfigError unless extent > 0, step > 0 and 2 extent / step is
  /// an integer (within 1e-9).
  void validate() const;
  std::size_t per_axis() const;
  std::vector<cplx> points() const;

  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;
};

struct LogPotentialGrid {
  LatticeSpec grid;
  std::vector<LogMagnitude> values;
};

/// (1/n) log|det(A/sqrt n - z I)| at each z, via singular values. Points are
/// spread over `threads` workers; each value depends only on its own z.
std::vector<LogMagnitude> log_det_values(const ComplexMatrix& a, std::span<const cplx> zs, unsigned threads = 1);

LogPotentialGrid log_det_field(const ComplexMatrix& a, const LatticeSpec& grid, unsigned threads = 1);

/// (1/2n) sum log(sigma_i^2 + eps) over the singular values of A/sqrt n - z I.
double regularized_log_det(const ComplexMatrix& a, cplx z, double eps);

/// The unregularized and regularized values from one singular value solve.
struct ShiftedLogDet {
  LogMagnitude value = LogMagnitude::minus_infinity();
  double regularized = 0.0;
};

ShiftedLogDet shifted_log_det(const ComplexMatrix& a, cplx z, double eps);

/// Regularization schedule eps_n = n^-0.1.
double default_regularization(std::size_t n);

/// int log|w - z| dmu(w). SingularityError within 1e-12 of an atom.
double log_potential(const EmpiricalMeasure2D& mu, cplx z);

/// Log-potential of the Dozier-Silverstein limit at z:
/// (1/2) int log x dF, F the (H_z, c = 1) solution with H_z the ESD of
/// (M/sqrt n - z)(M/sqrt n - z)*.
double ds_log_potential(const ComplexMatrix& m, cplx z);

/// pi sgn(s - Re w) e^{-v |s - Re w|} e^{i u s} e^{i v Im w}: the t-integral
/// of Re((s + it - w)/|s + it - w|^2) e^{ius + ivt}. Needs v > 0 (ConfigError
/// otherwise); SingularityError when s = Re w.
cplx girko_kernel(cplx w, double s, double u, double v);

struct GirkoQuadrature {
  /// s is cut off smoothly between radius^2 and 2 radius^2.
  double radius = 4.0;
  /// Trapezoid steps are coarse_step and coarse_step / 2.
  double coarse_step = 0.125;
  /// Largest accepted relative change between the two levels.
  double tolerance = 1e-2;
};

/// (u^2 + v^2)/(4 pi i u) int psi(s / R^2) int g(s + it) e^{ius + ivt} dt ds
/// with g the Stieltjes-type transform of `mu`; approximates
/// characteristic_function(mu, u, v). The inner integral uses girko_kernel,
/// the outer a trapezoid rule broken at the atoms' real parts plus one
/// Richardson step. ConfigError when u = 0 or v <= 0, NumericalFailure when
/// the two levels disagree beyond the tolerance.
cplx girko_reconstruct(const EmpiricalMeasure2D& mu, double u, double v, const GirkoQuadrature& quad = {});

}  // namespace esdlab
