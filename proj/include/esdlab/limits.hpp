#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "esdlab/matrix.hpp"
#include "esdlab/measures.hpp"

namespace esdlab {

// ---- circular law ----

/// 1/pi inside the open unit disk, 0 elsewhere.
double circular_density(cplx z);

/// int log|w - z| d(circular)(w): log|z| outside the disk, (|z|^2 - 1)/2 inside.
double circular_log_potential(cplx z);

/// P(|w| <= r) under the circular law: r^2 clipped to [0, 1].
double circular_radial_cdf(double r);

// ---- Dozier-Silverstein ----

/// Discrete probability measure on [0, inf), the limit law of M M* / n.
struct MeasureH {
  std::vector<double> atoms;
  std::vector<double> weights;

  /// Throws ConfigError unless atoms >= 0, weights >= 0 and sum to 1 (1e-12).
  void validate() const;

  /// Same measure with atoms closer than 1e-12 max(1, t) combined.
  MeasureH merged() const;

  static MeasureH point(double t);
  /// Uniform weights on the atoms of `mu`.
  static MeasureH from_empirical(const EmpiricalMeasure1D& mu);
};

struct DsOptions {
  double damping = 0.5;
  std::size_t max_iterations = 10000;
  double tolerance = 1e-10;
  cplx initial = cplx(0.0, 1.0);
  /// Restart from a few other points in the upper half-plane and report
  /// distinct limits. Off by default.
  bool probe_uniqueness = false;
};

struct DsSolution {
  cplx m;
  /// Relative residual |m - rhs(m)| / |m|.
  double residual = 0.0;
  std::size_t iterations = 0;
  double final_damping = 0.0;
  /// Fixed points reached from other starting points that differ from `m`.
  std::vector<cplx> other_fixed_points;
};

/// Right-hand side sum_k h_k / (t_k / (1 + c m) - (1 + c m) w + (1 - c)).
cplx ds_rhs(const MeasureH& h, double c, cplx w, cplx m);

/// Damped fixed-point iteration m <- (1 - a) m + a rhs(m), starting from
/// options.initial; a is halved after three consecutive residual increases.
/// Throws ConfigError on bad input, NumericalFailure when the budget runs
/// out, BranchError when the limit has Im m <= 0. When the budget runs out
/// with a finite residual, Newton steps on m - rhs(m) polish the last iterate
/// before giving up.
DsSolution solve_ds(const MeasureH& h, double c, cplx w, const DsOptions& options = {});

/// Root of w m^2 + w m + 1 = 0 in the upper half-plane (H = delta_0, c = 1).
cplx mp_reference(cplx w);

/// (1 / 2 pi) sqrt((4 - x) / x) on (0, 4], 0 elsewhere.
double mp_density(double x);

/// Distribution function of mp_density.
double mp_cdf(double x);

struct StieltjesLevel {
  double eta = 0.0;
  std::vector<cplx> m_values;
};

struct StieltjesSolution {
  double eta = 0.0;
  std::vector<double> x_grid;
  std::vector<cplx> m_values;
  std::vector<double> density;
  /// Sup-norm density change between consecutive eta levels, in schedule order.
  std::vector<double> level_changes;
  /// Every level in schedule order, the last one equal to (eta, m_values).
  std::vector<StieltjesLevel> levels;
};

struct InversionOptions {
  std::vector<double> eta_schedule{1e-1, 1e-2, 1e-3};
  double tolerance = 1e-3;
  /// Restricts the convergence check to x in [first, second]. Near a hard
  /// edge or a density singularity the eta bias decays slowly, so the check
  /// is usually confined to the bulk.
  std::optional<std::pair<double, double>> check_window;
};

using StieltjesHandle = std::function<cplx(cplx)>;

/// density(x) = Im m(x + i eta_final) / pi, accepted when the last two eta
/// levels agree to options.tolerance in sup-norm on the check window.
StieltjesSolution invert_stieltjes(const StieltjesHandle& m, const std::vector<double>& x_grid,
                                   const InversionOptions& options = {});

/// Trapezoid integral of the recovered density.
double total_mass(const StieltjesSolution& s);

/// Cumulative trapezoid integral of the recovered density, linearly
/// interpolated; 0 left of the grid and the full mass right of it.
RealCdf recovered_cdf(const StieltjesSolution& s);

/// True iff int |z - x|^-2 dmu(x) >= 1. SingularityError within 1e-12 of an atom.
bool support_criterion(const EmpiricalMeasure2D& mu, cplx z);

/// int log x dF for the Dozier-Silverstein limit F of (H, c), from
///   int log x dF = int_0^inf [1/(1 + d) - m(-d)] dd
/// with d = s^2 and Gauss-Legendre panels on s = t / (1 - t).
double ds_log_moment(const MeasureH& h, double c, std::size_t panels = 400);

}  // namespace esdlab
