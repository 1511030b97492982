#include "esdlab/limits.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "esdlab/error.hpp"

namespace esdlab {

double circular_density(cplx z) { return std::abs(z) < 1.0 ? 1.0 / std::numbers::pi : 0.0; }

double circular_log_potential(cplx z) {
  const double r = std::abs(z);
  if (r >= 1.0) return std::log(r);
  return 0.5 * (r * r - 1.0);
}

double circular_radial_cdf(double r) {
  if (r <= 0.0) return 0.0;
  if (r >= 1.0) return 1.0;
  return r * r;
}

void MeasureH::validate() const {
  if (atoms.empty() || atoms.size() != weights.size()) {
    throw ConfigError("MeasureH needs matching, nonempty atoms and weights");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    if (!(atoms[k] >= 0.0) || !std::isfinite(atoms[k])) throw ConfigError("MeasureH atoms must be finite and >= 0");
    if (!(weights[k] >= 0.0)) throw ConfigError("MeasureH weights must be >= 0");
    total += weights[k];
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("MeasureH weights must sum to 1");
}

MeasureH MeasureH::merged() const {
  std::vector<std::size_t> order(atoms.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
  MeasureH out;
  for (std::size_t k : order) {
    if (!out.atoms.empty() && atoms[k] - out.atoms.back() <= 1e-12 * std::max(1.0, out.atoms.back())) {
      out.weights.back() += weights[k];
    } else {
      out.atoms.push_back(atoms[k]);
      out.weights.push_back(weights[k]);
    }
  }
  return out;
}

MeasureH MeasureH::point(double t) { return {{t}, {1.0}}; }

MeasureH MeasureH::from_empirical(const EmpiricalMeasure1D& mu) {
  if (mu.atoms.empty()) throw ConfigError("empty empirical measure");
  MeasureH h;
  h.atoms = mu.atoms;
  for (auto& a : h.atoms) a = std::max(a, 0.0);
  h.weights.assign(mu.size(), 1.0 / static_cast<double>(mu.size()));
  // Absorb the rounding of n * (1/n) into the first weight.
  double total = 0.0;
  for (double w : h.weights) total += w;
  h.weights[0] += 1.0 - total;
  return h;
}

cplx ds_rhs(const MeasureH& h, double c, cplx w, cplx m) {
  const cplx q = 1.0 + c * m;
  const cplx tail = -q * w + (1.0 - c);
  cplx s{};
  for (std::size_t k = 0; k < h.atoms.size(); ++k) s += h.weights[k] / (h.atoms[k] / q + tail);
  return s;
}

namespace {

struct Iteration {
  cplx m;
  double residual;
  std::size_t iterations;
  double damping;
  bool converged;
};

double scaled_residual(cplx m, cplx f) { return std::abs(m - f) / std::abs(m); }

Iteration iterate(const MeasureH& h, double c, cplx w, cplx m, const DsOptions& opt) {
  double alpha = opt.damping;
  double previous = std::numeric_limits<double>::infinity();
  int increases = 0;
  int decreases = 0;
  double r = previous;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    const cplx f = ds_rhs(h, c, w, m);
    if (!std::isfinite(f.real()) || !std::isfinite(f.imag())) return {m, r, it, alpha, false};
    r = scaled_residual(m, f);
    if (r < opt.tolerance) return {m, r, it, alpha, true};
    // Rising residuals also occur in the nonlinear transient far from the
    // fixed point, so a halved damping is restored after a long quiet run.
    if (r > previous) {
      decreases = 0;
      if (++increases >= 3) {
        alpha = std::max(0.5 * alpha, opt.damping / 1024.0);
        increases = 0;
      }
    } else {
      increases = 0;
      if (++decreases >= 50 && alpha < opt.damping) {
        alpha = std::min(2.0 * alpha, opt.damping);
        decreases = 0;
      }
    }
    previous = r;
    m = (1.0 - alpha) * m + alpha * f;
  }
  return {m, r, opt.max_iterations, alpha, false};
}

// Newton steps on m - rhs(m), used only when the damped iteration exhausts its
// budget (slow contraction next to a spectral edge).
Iteration newton_polish(const MeasureH& h, double c, cplx w, Iteration start, double tolerance) {
  cplx m = start.m;
  for (int step = 0; step < 50; ++step) {
    const cplx q = 1.0 + c * m;
    const cplx tail = -q * w + (1.0 - c);
    cplx f{};
    cplx df{};
    for (std::size_t k = 0; k < h.atoms.size(); ++k) {
      const cplx d = h.atoms[k] / q + tail;
      const cplx dd = -c * h.atoms[k] / (q * q) - c * w;
      f += h.weights[k] / d;
      df -= h.weights[k] * dd / (d * d);
    }
    const double r = scaled_residual(m, f);
    if (!std::isfinite(r)) break;
    if (r < tolerance) return {m, r, start.iterations + static_cast<std::size_t>(step), start.damping, true};
    m -= (m - f) / (1.0 - df);
  }
  start.converged = false;
  return start;
}

}  // namespace

DsSolution solve_ds(const MeasureH& h, double c, cplx w, const DsOptions& options) {
  h.validate();
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("solve_ds needs c > 0");
  if (!(w.imag() > 0.0)) throw ConfigError("solve_ds needs Im w > 0");
  if (!(options.damping > 0.0 && options.damping <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
  if (!(options.initial.imag() > 0.0)) throw ConfigError("initial point must lie in the upper half-plane");

  auto run = iterate(h, c, w, options.initial, options);
  if (!run.converged && std::isfinite(run.residual)) run = newton_polish(h, c, w, run, options.tolerance);
  if (!run.converged) {
    throw NumericalFailure("Dozier-Silverstein iteration did not converge after " +
                               std::to_string(run.iterations) + " iterations",
                           run.residual);
  }
  if (!(run.m.imag() > 0.0)) throw BranchError("Dozier-Silverstein fixed point left the upper half-plane", run.residual);

  DsSolution out{run.m, run.residual, run.iterations, run.damping, {}};
  if (options.probe_uniqueness) {
    const std::array<cplx, 4> starts{cplx(1.0, 1.0), cplx(-1.0, 1.0), cplx(0.0, 10.0), cplx(0.0, 0.1)};
    for (const cplx s : starts) {
      auto alt = iterate(h, c, w, s, options);
      if (!alt.converged && std::isfinite(alt.residual)) alt = newton_polish(h, c, w, alt, options.tolerance);
      if (!alt.converged || !(alt.m.imag() > 0.0)) continue;
      if (std::abs(alt.m - run.m) <= 1e-8 * std::max(1.0, std::abs(run.m))) continue;
      const bool seen = std::any_of(out.other_fixed_points.begin(), out.other_fixed_points.end(), [&](cplx p) {
        return std::abs(p - alt.m) <= 1e-8 * std::max(1.0, std::abs(p));
      });
      if (!seen) out.other_fixed_points.push_back(alt.m);
    }
  }
  return out;
}

cplx mp_reference(cplx w) {
  // Roots of w m^2 + w m + 1: m = (-w +- sqrt(w^2 - 4w)) / (2w).
  const cplx d = std::sqrt(w * w - 4.0 * w);
  const cplx a = (-w + d) / (2.0 * w);
  const cplx b = (-w - d) / (2.0 * w);
  return a.imag() >= b.imag() ? a : b;
}

double mp_density(double x) {
  if (!(x > 0.0) || x > 4.0) return 0.0;
  return std::sqrt((4.0 - x) / x) / (2.0 * std::numbers::pi);
}

double mp_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 4.0) return 1.0;
  const double theta = std::asin(std::sqrt(x) / 2.0);
  return (2.0 * theta + std::sin(2.0 * theta)) / std::numbers::pi;
}

StieltjesSolution invert_stieltjes(const StieltjesHandle& m, const std::vector<double>& x_grid,
                                   const InversionOptions& options) {
  const auto& eta = options.eta_schedule;
  if (eta.empty()) throw ConfigError("empty eta schedule");
  for (std::size_t k = 0; k < eta.size(); ++k) {
    if (!(eta[k] > 0.0)) throw ConfigError("eta values must be positive");
    if (k > 0 && !(eta[k] < eta[k - 1])) throw ConfigError("eta schedule must be strictly decreasing");
  }
  if (eta.back() < 1e-6) throw ConfigError("final eta must be at least 1e-6");
  if (x_grid.empty()) throw ConfigError("empty x grid");

  const auto in_window = [&](double x) {
    return !options.check_window || (x >= options.check_window->first && x <= options.check_window->second);
  };

  StieltjesSolution out;
  out.x_grid = x_grid;
  std::vector<double> previous;
  for (double e : eta) {
    std::vector<cplx> values(x_grid.size());
    std::vector<double> density(x_grid.size());
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
      values[i] = m(cplx(x_grid[i], e));
      if (!(values[i].imag() > 0.0)) throw BranchError("Stieltjes transform left the upper half-plane");
      density[i] = values[i].imag() / std::numbers::pi;
    }
    if (!previous.empty()) {
      double change = 0.0;
      for (std::size_t i = 0; i < x_grid.size(); ++i) {
        if (in_window(x_grid[i])) change = std::max(change, std::abs(density[i] - previous[i]));
      }
      out.level_changes.push_back(change);
    }
    previous = density;
    out.levels.push_back({e, values});
    out.eta = e;
    out.m_values = std::move(values);
    out.density = std::move(density);
  }
  if (!out.level_changes.empty() && out.level_changes.back() >= options.tolerance) {
    throw NumericalFailure("Stieltjes inversion not converged: last eta levels differ by " +
                               std::to_string(out.level_changes.back()),
                           out.level_changes.back());
  }
  return out;
}

double total_mass(const StieltjesSolution& s) {
  double mass = 0.0;
  for (std::size_t i = 1; i < s.x_grid.size(); ++i) {
    mass += 0.5 * (s.density[i] + s.density[i - 1]) * (s.x_grid[i] - s.x_grid[i - 1]);
  }
  return mass;
}

RealCdf recovered_cdf(const StieltjesSolution& s) {
  std::vector<double> x = s.x_grid;
  std::vector<double> cum(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) {
    cum[i] = cum[i - 1] + 0.5 * (s.density[i] + s.density[i - 1]) * (x[i] - x[i - 1]);
  }
  return [x = std::move(x), cum = std::move(cum)](double t) {
    if (t < x.front()) return 0.0;
    if (t >= x.back()) return cum.back();
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    const auto j = static_cast<std::size_t>(it - x.begin());
    const double f = (t - x[j - 1]) / (x[j] - x[j - 1]);
    return cum[j - 1] + f * (cum[j] - cum[j - 1]);
  };
}

bool support_criterion(const EmpiricalMeasure2D& mu, cplx z) {
  if (mu.atoms.empty()) throw ConfigError("support criterion needs a nonempty measure");
  double s = 0.0;
  for (const auto& x : mu.atoms) {
    const double d = std::abs(z - x);
    if (d < 1e-12) throw SingularityError("support criterion evaluated at an atom");
    s += 1.0 / (d * d);
  }
  return s / static_cast<double>(mu.size()) >= 1.0;
}

double ds_log_moment(const MeasureH& h, double c, std::size_t panels) {
  if (panels == 0) throw ConfigError("ds_log_moment needs at least one panel");
  const std::array<double, 3> node{-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const std::array<double, 3> weight{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double width = 1.0 / static_cast<double>(panels);
  DsOptions opt;
  opt.initial = cplx(1.0, 1.0);
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = (static_cast<double>(p) + 0.5) * width;
    for (std::size_t k = 0; k < 3; ++k) {
      const double t = mid + 0.5 * width * node[k];
      const double s = t / (1.0 - t);
      const double d = s * s;
      const auto sol = solve_ds(h, c, cplx(-d, 1e-10), opt);
      // Warm start the next node from this one.
      opt.initial = cplx(sol.m.real(), std::max(sol.m.imag(), 1e-300));
      const double integrand = (1.0 / (1.0 + d) - sol.m.real()) * 2.0 * s / ((1.0 - t) * (1.0 - t));
      total += 0.5 * width * weight[k] * integrand;
    }
  }
  return total;
}

}  // namespace esdlab
