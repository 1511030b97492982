#include "esdlab/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "esdlab/error.hpp"
#include "esdlab/numerics.hpp"

namespace esdlab {
namespace {

template <class Enum, std::size_t N>
Enum parse_enum(const std::string& name, const std::pair<Enum, const char*> (&table)[N], const char* what) {
  for (const auto& [value, label] : table) {
    if (name == label) return value;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + name + "'");
}

template <class Enum, std::size_t N>
std::string enum_name(Enum e, const std::pair<Enum, const char*> (&table)[N]) {
  for (const auto& [value, label] : table) {
    if (value == e) return label;
  }
  return "?";
}

constexpr std::pair<DistributionKind, const char*> kDistributionNames[] = {
    {DistributionKind::bernoulli, "bernoulli"},
    {DistributionKind::real_gaussian, "real_gaussian"},
    {DistributionKind::complex_gaussian, "complex_gaussian"},
    {DistributionKind::uniform_centered, "uniform_centered"},
    {DistributionKind::two_point_asymmetric, "two_point_asymmetric"},
    {DistributionKind::pareto_symmetrized, "pareto_symmetrized"},
};

constexpr std::pair<BaseKind, const char*> kBaseNames[] = {
    {BaseKind::zero, "zero"},
    {BaseKind::two_block_diagonal, "two_block_diagonal"},
    {BaseKind::low_rank, "low_rank"},
    {BaseKind::diagonal_from_measure, "diagonal_from_measure"},
    {BaseKind::explicit_entries, "explicit"},
};

constexpr std::pair<ProfileKind, const char*> kProfileNames[] = {
    {ProfileKind::constant, "constant"},
    {ProfileKind::block, "block"},
    {ProfileKind::gradient, "gradient"},
    {ProfileKind::uniform_random, "uniform_random"},
};

constexpr std::pair<AssemblyMode, const char*> kModeNames[] = {
    {AssemblyMode::shift, "shift"},
    {AssemblyMode::sandwich, "sandwich"},
    {AssemblyMode::hadamard_profile, "hadamard_profile"},
};

// Marsaglia polar method: two independent standard normals.
std::pair<double, double> polar_pair(RngStream& rng) {
  for (;;) {
    const double u = 2.0 * rng.next_unit() - 1.0;
    const double v = 2.0 * rng.next_unit() - 1.0;
    const double s = u * u + v * v;
    if (s >= 1.0 || s == 0.0) continue;
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    return {u * f, v * f};
  }
}

}  // namespace

std::string to_string(DistributionKind kind) { return enum_name(kind, kDistributionNames); }
DistributionKind parse_distribution_kind(const std::string& name) {
  return parse_enum(name, kDistributionNames, "distribution kind");
}
std::string to_string(BaseKind kind) { return enum_name(kind, kBaseNames); }
BaseKind parse_base_kind(const std::string& name) { return parse_enum(name, kBaseNames, "base kind"); }
std::string to_string(ProfileKind kind) { return enum_name(kind, kProfileNames); }
ProfileKind parse_profile_kind(const std::string& name) { return parse_enum(name, kProfileNames, "profile kind"); }
std::string to_string(AssemblyMode mode) { return enum_name(mode, kModeNames); }
AssemblyMode parse_assembly_mode(const std::string& name) { return parse_enum(name, kModeNames, "assembly mode"); }

ScalarDistribution ScalarDistribution::of(DistributionKind kind) {
  ScalarDistribution d{kind, 0.0};
  if (kind == DistributionKind::two_point_asymmetric) d.parameter = 0.2;
  if (kind == DistributionKind::pareto_symmetrized) d.parameter = 2.5;
  return d;
}

void ScalarDistribution::validate() const {
  if (kind == DistributionKind::two_point_asymmetric && !(parameter > 0.0 && parameter < 1.0)) {
    throw ConfigError("two_point_asymmetric needs 0 < p < 1");
  }
  if (kind == DistributionKind::pareto_symmetrized && !(parameter > 2.0 && std::isfinite(parameter))) {
    throw ConfigError("pareto_symmetrized needs a tail exponent > 2 for finite variance");
  }
}

cplx sample_scalar(const ScalarDistribution& dist, RngStream& rng) {
  switch (dist.kind) {
    case DistributionKind::bernoulli:
      return (rng.next_u64() >> 63) ? 1.0 : -1.0;
    case DistributionKind::real_gaussian:
      return polar_pair(rng).first;
    case DistributionKind::complex_gaussian: {
      const auto [g1, g2] = polar_pair(rng);
      return cplx(g1, g2) * M_SQRT1_2;
    }
    case DistributionKind::uniform_centered:
      return (2.0 * rng.next_unit() - 1.0) * std::sqrt(3.0);
    case DistributionKind::two_point_asymmetric: {
      const double p = dist.parameter;
      if (!(p > 0.0 && p < 1.0)) dist.validate();
      return rng.next_unit() < p ? std::sqrt((1.0 - p) / p) : -std::sqrt(p / (1.0 - p));
    }
    case DistributionKind::pareto_symmetrized: {
      const double alpha = dist.parameter;
      if (!(alpha > 2.0)) dist.validate();
      // |a| = U^{-1/alpha} on [1, inf) has E|a|^2 = alpha / (alpha - 2).
      const double magnitude = std::pow(rng.next_unit_open0(), -1.0 / alpha);
      const double sign = (rng.next_u64() >> 63) ? 1.0 : -1.0;
      return sign * magnitude * std::sqrt((alpha - 2.0) / alpha);
    }
  }
  throw ConfigError("unknown distribution kind");
}

ComplexMatrix build_iid_matrix(std::size_t n, const ScalarDistribution& dist, RngStream& rng) {
  if (n == 0) throw ConfigError("matrix size must be at least 1");
  dist.validate();
  ComplexMatrix x(n, n);
  for (auto& e : x.entries()) e = sample_scalar(dist, rng);
  return x;
}

double BaseMatrixSpec::declared_bound(std::size_t n) const {
  const double dn = static_cast<double>(n);
  switch (kind) {
    case BaseKind::zero:
      return 0.0;
    case BaseKind::two_block_diagonal: {
      const double top = std::max(block_a * block_a, block_b * block_b);
      return sqrt_n_scaled ? top : top / dn;
    }
    case BaseKind::low_rank:
      return static_cast<double>(rank) * magnitude * magnitude;
    case BaseKind::diagonal_from_measure: {
      double top = 0.0;
      for (const auto& a : atoms) top = std::max(top, std::norm(a));
      return top;
    }
    case BaseKind::explicit_entries: {
      double s = 0.0;
      for (const auto& e : entries) s += std::norm(e);
      return s / (dn * dn);
    }
  }
  return 0.0;
}

ComplexMatrix build_base_matrix(const BaseMatrixSpec& spec, std::size_t n, RngStream rng) {
  if (n == 0) throw ConfigError("matrix size must be at least 1");
  const double root_n = std::sqrt(static_cast<double>(n));
  switch (spec.kind) {
    case BaseKind::zero:
      return ComplexMatrix(n, n);
    case BaseKind::two_block_diagonal: {
      if (!(spec.split >= 0.0 && spec.split <= 1.0)) throw ConfigError("split must lie in [0, 1]");
      const auto lead = static_cast<std::size_t>(std::floor(spec.split * static_cast<double>(n)));
      const double scale = spec.sqrt_n_scaled ? root_n : 1.0;
      std::vector<double> d(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = (i < lead ? spec.block_a : spec.block_b) * scale;
      return ComplexMatrix::diagonal(std::span<const double>(d));
    }
    case BaseKind::low_rank: {
      if (spec.rank == 0 || spec.rank > n) throw ConfigError("low_rank needs 1 <= rank <= n");
      ComplexMatrix m(n, n);
      const double dn = static_cast<double>(n);
      for (std::size_t k = 0; k < spec.rank; ++k) {
        const std::size_t first = k * n / spec.rank;
        const std::size_t last = (k + 1) * n / spec.rank;
        const double value = spec.magnitude * dn / static_cast<double>(last - first);
        for (std::size_t i = first; i < last; ++i) {
          for (std::size_t j = first; j < last; ++j) m(i, j) = value;
        }
      }
      return m;
    }
    case BaseKind::diagonal_from_measure: {
      if (spec.atoms.empty()) throw ConfigError("diagonal_from_measure needs at least one atom");
      std::vector<cplx> d(n);
      for (auto& x : d) {
        const auto pick = static_cast<std::size_t>(rng.next_unit() * static_cast<double>(spec.atoms.size()));
        x = spec.atoms[std::min(pick, spec.atoms.size() - 1)] * root_n;
      }
      return ComplexMatrix::diagonal(std::span<const cplx>(d));
    }
    case BaseKind::explicit_entries: {
      if (spec.explicit_size != n || spec.entries.size() != n * n) {
        throw ConfigError("explicit base matrix has shape " + std::to_string(spec.explicit_size) +
                          " (" + std::to_string(spec.entries.size()) + " entries) but n = " +
                          std::to_string(n));
      }
      return ComplexMatrix(n, n, spec.entries);
    }
  }
  throw ConfigError("unknown base kind");
}

void ProfileSpec::validate() const {
  if (!(low > 0.0 && low <= high && std::isfinite(high))) {
    throw ConfigError("profile needs 0 < low <= high");
  }
}

ComplexMatrix build_profile(const ProfileSpec& spec, std::size_t n, RngStream rng) {
  if (n == 0) throw ConfigError("matrix size must be at least 1");
  spec.validate();
  ComplexMatrix c(n, n);
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = spec.low;
      switch (spec.kind) {
        case ProfileKind::constant:
          break;
        case ProfileKind::block:
          v = ((i < half) == (j < half)) ? spec.low : spec.high;
          break;
        case ProfileKind::gradient:
          v = n == 1 ? spec.low
                     : spec.low + (spec.high - spec.low) * static_cast<double>(i + j) /
                                      (2.0 * static_cast<double>(n - 1));
          break;
        case ProfileKind::uniform_random:
          v = spec.low + (spec.high - spec.low) * rng.next_unit();
          break;
      }
      c(i, j) = v;
    }
  }
  return c;
}

namespace {

void require_invertible(const ComplexMatrix& a, const char* name) {
  const auto s = singular_values(a).values;
  const double norm = hs_norm(a);
  if (s.empty() || !(s.back() >= 1e-12 * norm) || norm == 0.0) {
    throw DegenerateError(std::string("sandwich operator ") + name + " is not invertible");
  }
}

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* what) {
  if (!a.is_square() || a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string("operand ") + what + " must be square and match M in size");
  }
}

}  // namespace

ComplexMatrix assemble(const ComplexMatrix& m, const ComplexMatrix& x, AssemblyMode mode,
                       const AssemblyOperands& ops) {
  require_same_shape(m, x, "X");
  switch (mode) {
    case AssemblyMode::shift:
      return m + x;
    case AssemblyMode::sandwich: {
      if (!ops.left || !ops.right) throw ConfigError("sandwich mode needs K and L");
      require_same_shape(m, *ops.left, "K");
      require_same_shape(m, *ops.right, "L");
      require_invertible(*ops.left, "K");
      require_invertible(*ops.right, "L");
      return m + (*ops.left) * x * (*ops.right);
    }
    case AssemblyMode::hadamard_profile: {
      if (!ops.profile) throw ConfigError("hadamard_profile mode needs C");
      require_same_shape(m, *ops.profile, "C");
      for (const auto& c : ops.profile->entries()) {
        if (c.imag() != 0.0 || !(c.real() > 0.0)) {
          throw ConfigError("variance profile entries must be real and positive");
        }
      }
      return m + hadamard(*ops.profile, x);
    }
  }
  throw ConfigError("unknown assembly mode");
}

KappaReport kappa_controlled_estimate(const ScalarDistribution& dist, double kappa, std::size_t samples,
                                      std::span<const std::pair<cplx, cplx>> grid, RngStream rng) {
  if (!(kappa >= 1.0)) throw ConfigError("kappa must be at least 1");
  if (samples < 10000) throw ConfigError("kappa estimate needs at least 1e4 samples");
  dist.validate();

  std::vector<cplx> draws(samples);
  for (auto& a : draws) a = sample_scalar(dist, rng);
  const double count = static_cast<double>(samples);

  KappaReport rep;
  rep.kappa = kappa;
  double s1 = 0.0, s2 = 0.0;
  for (const auto& a : draws) {
    const double q = std::norm(a);
    s1 += q;
    s2 += q * q;
  }
  rep.second_moment = s1 / count;
  rep.second_moment_std_error = std::sqrt(std::max(s2 / count - rep.second_moment * rep.second_moment, 0.0) / count);
  rep.second_moment_ok = rep.second_moment - 3.0 * rep.second_moment_std_error <= kappa;

  rep.passed = rep.second_moment_ok;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& [z, w] : grid) {
    KappaCell cell{z, w};
    double t1 = 0.0, t2 = 0.0;
    for (const auto& a : draws) {
      if (std::abs(a) > kappa) continue;
      const double r = (z * a - w).real();
      const double q = r * r;
      t1 += q;
      t2 += q * q;
    }
    cell.estimate = t1 / count;
    cell.std_error = std::sqrt(std::max(t2 / count - cell.estimate * cell.estimate, 0.0) / count);
    cell.bound = z.real() * z.real() / kappa;
    cell.margin = cell.estimate - cell.bound;
    cell.passed = cell.margin >= 3.0 * cell.std_error - 1e-12 * (1.0 + cell.bound);
    rep.worst_margin = std::min(rep.worst_margin, cell.margin);
    rep.passed = rep.passed && cell.passed;
    rep.cells.push_back(cell);
  }
  return rep;
}

}  // namespace esdlab
