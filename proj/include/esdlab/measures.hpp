#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "esdlab/matrix.hpp"

namespace esdlab {

/// Uniform atomic probability measure on the plane (weight 1/n per atom).
struct EmpiricalMeasure2D {
  std::vector<cplx> atoms;
  std::size_t size() const { return atoms.size(); }
};

/// Uniform atomic probability measure on the line.
struct EmpiricalMeasure1D {
  std::vector<double> atoms;
  std::size_t size() const { return atoms.size(); }
};

/// Fixed family of 1-Lipschitz bumps on C, used as a computable proxy for
/// vague convergence.
///
/// For each scale h (in order) and each center (a, b) on the lattice
/// {-extent, -extent + h, ..., extent}^2 (b outer, a inner), the member is
///   f(x + iy) = (h / sqrt 2) tri((x - a) / h) tri((y - b) / h),
/// tri(t) = max(0, 1 - |t|). Each member has sup h/sqrt(2) <= 1 and gradient
/// norm <= 1. The default (extent 3, scales 1, 1/2, 1/4) has 843 members.
class TestFunctionDictionary {
 public:
  struct Member {
    cplx center;
    double scale;
  };

  explicit TestFunctionDictionary(double extent = 3.0, std::vector<double> scales = {1.0, 0.5, 0.25});

  std::size_t size() const { return members_.size(); }
  const Member& operator[](std::size_t i) const { return members_[i]; }
  double extent() const { return extent_; }
  const std::vector<double>& scales() const { return scales_; }

  double evaluate(std::size_t index, cplx z) const;

  /// Integrals of every member against `mu`, in member order.
  std::vector<double> integrals(const EmpiricalMeasure2D& mu) const;

 private:
  double extent_;
  std::vector<double> scales_;
  std::vector<std::size_t> per_axis_;    // lattice points per axis, per scale
  std::vector<std::size_t> first_index_;  // offset of each scale's block
  std::vector<Member> members_;
};

/// Eigenvalues of A / sqrt(n).
EmpiricalMeasure2D esd_eigen(const ComplexMatrix& a);

/// Squared singular values of A / sqrt(n) - z I.
EmpiricalMeasure1D esd_gram(const ComplexMatrix& a, cplx z);

/// (1/n) sum exp(i u Re(lambda) + i v Im(lambda)).
cplx characteristic_function(const EmpiricalMeasure2D& mu, double u, double v);

/// (2/n) Re sum (z - lambda) / |z - lambda|^2. Throws SingularityError when z
/// is within 1e-12 of an atom.
double stieltjes_g(const EmpiricalMeasure2D& mu, cplx z);

/// max over dictionary members of |int f dmu1 - int f dmu2|.
double bl_distance(const EmpiricalMeasure2D& mu1, const EmpiricalMeasure2D& mu2,
                   const TestFunctionDictionary& dict);

using RealCdf = std::function<double(double)>;

/// One-sample Kolmogorov-Smirnov statistic of `sample` against `cdf`
/// (empirical CDF right-continuous; ties handled as one jump).
double ks_statistic(std::span<const double> sample, const RealCdf& cdf);

/// Two-sample Kolmogorov-Smirnov distance between two empirical measures.
double ks_distance(const EmpiricalMeasure1D& a, const EmpiricalMeasure1D& b);

struct RadialAngularKs {
  double radial = 0.0;
  double angular = 0.0;
};

/// KS statistics of |lambda - center| against `radial_cdf` and of
/// arg(lambda - center) against the uniform law on (-pi, pi].
RadialAngularKs radial_angular_ks(const EmpiricalMeasure2D& mu, const RealCdf& radial_cdf, cplx center = 0.0);

/// int |z|^2 dmu.
double second_moment(const EmpiricalMeasure2D& mu);

/// Fraction of atoms with |lambda - center| <= radius.
double fraction_within(const EmpiricalMeasure2D& mu, cplx center, double radius);

/// Spectrum of the Hermitian dilation [[0, A/sqrt n], [(A/sqrt n)*, 0]]:
/// the atoms +-sigma_i(A / sqrt n), weight 1/(2n) each.
EmpiricalMeasure1D dilation_esd(const ComplexMatrix& a);

}  // namespace esdlab
