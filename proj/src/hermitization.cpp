#include "esdlab/hermitization.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "esdlab/error.hpp"

namespace esdlab {

void LatticeSpec::validate() const {
  if (!(extent > 0.0) || !std::isfinite(extent)) throw ConfigError("lattice extent must be positive");
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("lattice step must be positive");
  const double k = 2.0 * extent / step;
  if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) {
    throw ConfigError("lattice step must divide twice the extent");
  }
}

std::size_t LatticeSpec::per_axis() const {
  validate();
  return static_cast<std::size_t>(std::llround(2.0 * extent / step));
}

std::vector<cplx> LatticeSpec::points() const {
  const std::size_t k = per_axis();
  std::vector<cplx> out;
  out.reserve(k * k);
  for (std::size_t iy = 0; iy < k; ++iy) {
    const double y = center.imag() - extent + (static_cast<double>(iy) + 0.5) * step;
    for (std::size_t ix = 0; ix < k; ++ix) {
      const double x = center.real() - extent + (static_cast<double>(ix) + 0.5) * step;
      out.emplace_back(x, y);
    }
  }
  return out;
}

namespace {

std::vector<double> shifted_gram(const ComplexMatrix& a, cplx z) {
  if (!a.is_square() || a.empty()) throw ConfigError("hermitization needs a non-empty square matrix");
  return gram_eigenvalues(shifted(a * (1.0 / std::sqrt(static_cast<double>(a.rows()))), z));
}

LogMagnitude mean_half_log(const std::vector<double>& gram) {
  const auto total = sum_of_logs(gram);
  if (total.is_minus_infinity()) return total;
  return LogMagnitude::finite(total.value() / (2.0 * static_cast<double>(gram.size())));
}

double mean_half_log_shifted(const std::vector<double>& gram, double eps) {
  double s = 0.0;
  for (double x : gram) s += std::log(x + eps);
  return s / (2.0 * static_cast<double>(gram.size()));
}

}  // namespace

std::vector<LogMagnitude> log_det_values(const ComplexMatrix& a, std::span<const cplx> zs, unsigned threads) {
  std::vector<LogMagnitude> out(zs.size(), LogMagnitude::minus_infinity());
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(zs.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t k = next++; k < zs.size(); k = next++) {
      try {
        out[k] = mean_half_log(shifted_gram(a, zs[k]));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

LogPotentialGrid log_det_field(const ComplexMatrix& a, const LatticeSpec& grid, unsigned threads) {
  const auto zs = grid.points();
  return {grid, log_det_values(a, zs, threads)};
}

double regularized_log_det(const ComplexMatrix& a, cplx z, double eps) {
  if (!(eps > 0.0)) throw ConfigError("regularization eps must be positive");
  return mean_half_log_shifted(shifted_gram(a, z), eps);
}

ShiftedLogDet shifted_log_det(const ComplexMatrix& a, cplx z, double eps) {
  if (!(eps > 0.0)) throw ConfigError("regularization eps must be positive");
  const auto gram = shifted_gram(a, z);
  return {mean_half_log(gram), mean_half_log_shifted(gram, eps)};
}

double default_regularization(std::size_t n) { return std::pow(static_cast<double>(n), -0.1); }

double log_potential(const EmpiricalMeasure2D& mu, cplx z) {
  if (mu.atoms.empty()) throw ConfigError("log-potential of an empty measure");
  double s = 0.0;
  for (const auto& w : mu.atoms) {
    const double d = std::abs(w - z);
    if (d < 1e-12) throw SingularityError("log-potential evaluated at an atom");
    s += std::log(d);
  }
  return s / static_cast<double>(mu.size());
}

double ds_log_potential(const ComplexMatrix& m, cplx z) {
  const auto h = MeasureH::from_empirical(esd_gram(m, z)).merged();
  return 0.5 * ds_log_moment(h, 1.0);
}

cplx girko_kernel(cplx w, double s, double u, double v) {
  if (!(v > 0.0)) throw ConfigError("girko_kernel needs v > 0");
  const double d = s - w.real();
  if (d == 0.0) throw SingularityError("girko_kernel evaluated at s = Re w");
  const double sign = d > 0.0 ? 1.0 : -1.0;
  return std::numbers::pi * sign * std::exp(-v * std::abs(d)) * std::polar(1.0, u * s + v * w.imag());
}

namespace {

double smoothstep(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x);
  const double b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

// 1 on [-1, 1], 0 outside [-2, 2], smooth in between.
double cutoff(double y) { return smoothstep(2.0 - std::abs(y)); }

// sum over atoms of the kernel at s; an atom with Re w = s takes the limit
// from the side `side` (+1 right, -1 left).
cplx kernel_sum(const std::vector<cplx>& atoms, double s, double u, double v, double side) {
  cplx total{};
  for (const auto& w : atoms) {
    const double d = s - w.real();
    const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : side);
    total += sign * std::exp(-v * std::abs(d)) * std::polar(1.0, u * s + v * w.imag());
  }
  return std::numbers::pi * total;
}

cplx trapezoid(const std::vector<cplx>& atoms, const std::vector<double>& breaks, double h, double r2, double u,
               double v) {
  cplx total{};
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const double lo = breaks[b];
    const double hi = breaks[b + 1];
    const double len = hi - lo;
    if (len <= 0.0) continue;
    const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(len / h)));
    const double step = len / static_cast<double>(pieces);
    cplx seg{};
    for (std::size_t k = 0; k <= pieces; ++k) {
      const double s = k == pieces ? hi : lo + static_cast<double>(k) * step;
      // Endpoints take the one-sided limit from inside the segment.
      const double side = k == 0 ? 1.0 : (k == pieces ? -1.0 : 0.0);
      const double weight = (k == 0 || k == pieces) ? 0.5 : 1.0;
      seg += weight * cutoff(s / r2) * kernel_sum(atoms, s, u, v, side);
    }
    total += step * seg;
  }
  return total;
}

}  // namespace

cplx girko_reconstruct(const EmpiricalMeasure2D& mu, double u, double v, const GirkoQuadrature& quad) {
  if (u == 0.0) throw ConfigError("girko_reconstruct needs u != 0");
  if (!(v > 0.0)) throw ConfigError("girko_reconstruct needs v > 0");
  if (mu.atoms.empty()) throw ConfigError("girko_reconstruct needs a nonempty measure");
  if (!(quad.radius > 0.0) || !(quad.coarse_step > 0.0) || !(quad.tolerance > 0.0)) {
    throw ConfigError("invalid Girko quadrature");
  }
  const double r2 = quad.radius * quad.radius;
  std::vector<double> breaks{-2.0 * r2, 2.0 * r2};
  for (const auto& w : mu.atoms) {
    if (std::abs(w.real()) < 2.0 * r2) breaks.push_back(w.real());
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  const cplx coarse = trapezoid(mu.atoms, breaks, quad.coarse_step, r2, u, v);
  const cplx fine = trapezoid(mu.atoms, breaks, 0.5 * quad.coarse_step, r2, u, v);
  const double change = std::abs(fine - coarse) / std::max(std::abs(fine), 1e-300);
  if (!(change <= quad.tolerance)) {
    throw NumericalFailure("Girko quadrature did not settle between refinement levels", change);
  }
  const cplx integral = (4.0 * fine - coarse) / 3.0;
  // (2/n) sum of kernels, then the outer prefactor.
  const cplx g_integral = 2.0 * integral / static_cast<double>(mu.size());
  return (u * u + v * v) / (4.0 * std::numbers::pi * cplx(0.0, u)) * g_integral;
}

}  // namespace esdlab
