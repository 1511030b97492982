#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "esdlab/matrix.hpp"
#include "esdlab/rng.hpp"

namespace esdlab {

enum class DistributionKind {
  bernoulli,
  real_gaussian,
  complex_gaussian,
  uniform_centered,
  two_point_asymmetric,
  pareto_symmetrized,
};

std::string to_string(DistributionKind kind);
DistributionKind parse_distribution_kind(const std::string& name);

/// A zero-mean, unit-variance scalar law.
///
/// `parameter` is the probability p of the positive atom for
/// two_point_asymmetric (default 0.2) and the tail exponent alpha for
/// pareto_symmetrized (default 2.5, must exceed 2). Other kinds ignore it.
struct ScalarDistribution {
  DistributionKind kind = DistributionKind::real_gaussian;
  double parameter = 0.0;

  static ScalarDistribution of(DistributionKind kind);

  cplx declared_mean() const { return 0.0; }
  double declared_variance() const { return 1.0; }

  /// Throws ConfigError on invalid parameters.
  void validate() const;

  friend bool operator==(const ScalarDistribution&, const ScalarDistribution&) = default;
};

/// One draw. Gaussian kinds use Marsaglia's polar method; real_gaussian keeps
/// the first coordinate of each accepted pair.
cplx sample_scalar(const ScalarDistribution& dist, RngStream& rng);

/// n x n matrix of iid draws, filled in row-major order.
ComplexMatrix build_iid_matrix(std::size_t n, const ScalarDistribution& dist, RngStream& rng);

enum class BaseKind { zero, two_block_diagonal, low_rank, diagonal_from_measure, explicit_entries };

std::string to_string(BaseKind kind);
BaseKind parse_base_kind(const std::string& name);

/// Deterministic mean matrix M_n.
struct BaseMatrixSpec {
  BaseKind kind = BaseKind::zero;

  // two_block_diagonal: diag(a,..,a,b,..,b) with floor(split n) leading a's,
  // multiplied by sqrt(n) when `sqrt_n_scaled` is set.
  double block_a = 1.0;
  double block_b = 1.0;
  double split = 0.5;
  bool sqrt_n_scaled = false;

  // low_rank: magnitude * n * sum_k u_k u_k^T with u_k the normalised
  // indicator of the k-th of `rank` contiguous index blocks.
  std::size_t rank = 1;
  double magnitude = 1.0;

  // diagonal_from_measure: iid uniform picks from `atoms`, times sqrt(n).
  std::vector<cplx> atoms;

  // explicit_entries: row-major, size explicit_size^2.
  std::size_t explicit_size = 0;
  std::vector<cplx> entries;

  /// Upper bound on (1/n^2) |M_n|_2^2 guaranteed by the construction.
  double declared_bound(std::size_t n) const;

  friend bool operator==(const BaseMatrixSpec&, const BaseMatrixSpec&) = default;
};

/// `rng` is consumed only by diagonal_from_measure.
ComplexMatrix build_base_matrix(const BaseMatrixSpec& spec, std::size_t n, RngStream rng = RngStream(0, 0));

enum class ProfileKind { constant, block, gradient, uniform_random };

std::string to_string(ProfileKind kind);
ProfileKind parse_profile_kind(const std::string& name);

/// Entrywise standard-deviation profile C with entries in [low, high].
///   constant:       every entry = low
///   block:          low on the two diagonal half-blocks, high off them
///   gradient:       low + (high - low)(i + j) / (2(n - 1))
///   uniform_random: iid uniform on [low, high]
struct ProfileSpec {
  ProfileKind kind = ProfileKind::constant;
  double low = 1.0;
  double high = 1.0;

  void validate() const;
  friend bool operator==(const ProfileSpec&, const ProfileSpec&) = default;
};

/// `rng` is consumed only by uniform_random.
ComplexMatrix build_profile(const ProfileSpec& spec, std::size_t n, RngStream rng = RngStream(0, 0));

enum class AssemblyMode { shift, sandwich, hadamard_profile };

std::string to_string(AssemblyMode mode);
AssemblyMode parse_assembly_mode(const std::string& name);

/// Optional operands of `assemble`; null when the mode does not use them.
struct AssemblyOperands {
  const ComplexMatrix* left = nullptr;     // K
  const ComplexMatrix* right = nullptr;    // L
  const ComplexMatrix* profile = nullptr;  // C
};

/// shift: M + X; sandwich: M + K X L; hadamard_profile: M + C o X.
/// No 1/sqrt(n) factor is applied here.
ComplexMatrix assemble(const ComplexMatrix& m, const ComplexMatrix& x, AssemblyMode mode,
                       const AssemblyOperands& ops = {});

struct KappaCell {
  cplx z;
  cplx w;
  double estimate = 0.0;   // E Re(z a - w)^2 1{|a| <= kappa}
  double bound = 0.0;      // Re(z)^2 / kappa
  double margin = 0.0;     // estimate - bound
  double std_error = 0.0;  // of the estimate
  bool passed = false;
};

struct KappaReport {
  double kappa = 1.0;
  double second_moment = 0.0;  // E |a|^2
  double second_moment_std_error = 0.0;
  bool second_moment_ok = false;
  std::vector<KappaCell> cells;
  double worst_margin = 0.0;
  bool passed = false;
};

/// Monte Carlo check of the kappa-controlled second moment condition on a
/// finite (z, w) grid. A cell passes when margin >= 3 std_error (up to
/// 1e-12 rounding), so cells with Re z = 0 pass trivially.
KappaReport kappa_controlled_estimate(const ScalarDistribution& dist, double kappa, std::size_t samples,
                                      std::span<const std::pair<cplx, cplx>> grid, RngStream rng);

}  // namespace esdlab
