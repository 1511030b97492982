#include "esdlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "esdlab/error.hpp"
#include "esdlab/numerics.hpp"

namespace esdlab {

TestFunctionDictionary::TestFunctionDictionary(double extent, std::vector<double> scales)
    : extent_(extent), scales_(std::move(scales)) {
  if (!(extent_ > 0.0)) throw ConfigError("dictionary extent must be positive");
  for (double h : scales_) {
    if (!(h > 0.0 && h <= std::sqrt(2.0))) throw ConfigError("dictionary scales must lie in (0, sqrt 2]");
    const auto k = static_cast<std::size_t>(std::llround(2.0 * extent_ / h)) + 1;
    first_index_.push_back(members_.size());
    per_axis_.push_back(k);
    for (std::size_t iy = 0; iy < k; ++iy) {
      for (std::size_t ix = 0; ix < k; ++ix) {
        members_.push_back({cplx(-extent_ + static_cast<double>(ix) * h, -extent_ + static_cast<double>(iy) * h), h});
      }
    }
  }
}

namespace {

double tri(double t) { return std::max(0.0, 1.0 - std::abs(t)); }

}  // namespace

double TestFunctionDictionary::evaluate(std::size_t index, cplx z) const {
  const auto& m = members_.at(index);
  const double h = m.scale;
  return h * std::numbers::sqrt2 * 0.5 * tri((z.real() - m.center.real()) / h) *
         tri((z.imag() - m.center.imag()) / h);
}

std::vector<double> TestFunctionDictionary::integrals(const EmpiricalMeasure2D& mu) const {
  std::vector<double> out(members_.size(), 0.0);
  if (mu.atoms.empty()) return out;
  const double w = 1.0 / static_cast<double>(mu.size());
  for (std::size_t s = 0; s < scales_.size(); ++s) {
    const double h = scales_[s];
    const auto k = static_cast<std::ptrdiff_t>(per_axis_[s]);
    for (const auto& z : mu.atoms) {
      // Only lattice centers within one scale of z contribute.
      const double fx = (z.real() + extent_) / h;
      const double fy = (z.imag() + extent_) / h;
      const auto x0 = static_cast<std::ptrdiff_t>(std::floor(fx));
      const auto y0 = static_cast<std::ptrdiff_t>(std::floor(fy));
      for (std::ptrdiff_t iy = std::max<std::ptrdiff_t>(y0, 0); iy <= std::min(y0 + 1, k - 1); ++iy) {
        const double ty = tri(fy - static_cast<double>(iy));
        if (ty == 0.0) continue;
        for (std::ptrdiff_t ix = std::max<std::ptrdiff_t>(x0, 0); ix <= std::min(x0 + 1, k - 1); ++ix) {
          const double tx = tri(fx - static_cast<double>(ix));
          if (tx == 0.0) continue;
          out[first_index_[s] + static_cast<std::size_t>(iy * k + ix)] += w * h * std::numbers::sqrt2 * 0.5 * tx * ty;
        }
      }
    }
  }
  return out;
}

EmpiricalMeasure2D esd_eigen(const ComplexMatrix& a) {
  if (!a.is_square() || a.rows() == 0) throw ConfigError("ESD needs a non-empty square matrix");
  const double scale = 1.0 / std::sqrt(static_cast<double>(a.rows()));
  auto ev = eigenvalues(a * scale).values;
  return {std::move(ev)};
}

EmpiricalMeasure1D esd_gram(const ComplexMatrix& a, cplx z) {
  if (!a.is_square() || a.rows() == 0) throw ConfigError("ESD needs a non-empty square matrix");
  const double scale = 1.0 / std::sqrt(static_cast<double>(a.rows()));
  return {gram_eigenvalues(shifted(a * scale, z))};
}

cplx characteristic_function(const EmpiricalMeasure2D& mu, double u, double v) {
  if (mu.atoms.empty()) return 0.0;
  cplx s{};
  for (const auto& z : mu.atoms) s += std::polar(1.0, u * z.real() + v * z.imag());
  return s / static_cast<double>(mu.size());
}

double stieltjes_g(const EmpiricalMeasure2D& mu, cplx z) {
  double s = 0.0;
  for (const auto& lam : mu.atoms) {
    const cplx d = z - lam;
    const double r2 = std::norm(d);
    if (std::sqrt(r2) < 1e-12) throw SingularityError("stieltjes_g evaluated at an atom");
    s += d.real() / r2;
  }
  return 2.0 * s / static_cast<double>(mu.size());
}

double bl_distance(const EmpiricalMeasure2D& mu1, const EmpiricalMeasure2D& mu2,
                   const TestFunctionDictionary& dict) {
  const auto i1 = dict.integrals(mu1);
  const auto i2 = dict.integrals(mu2);
  double d = 0.0;
  for (std::size_t k = 0; k < i1.size(); ++k) d = std::max(d, std::abs(i1[k] - i2[k]));
  return d;
}

double ks_statistic(std::span<const double> sample, const RealCdf& cdf) {
  if (sample.empty()) return 0.0;
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < x.size()) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    const double f = cdf(x[i]);
    const double below = static_cast<double>(i) / n;
    const double through = static_cast<double>(j) / n;
    d = std::max({d, through - f, f - below});
    i = j;
  }
  return d;
}

double ks_distance(const EmpiricalMeasure1D& a, const EmpiricalMeasure1D& b) {
  if (a.atoms.empty() || b.atoms.empty()) throw ConfigError("KS distance needs nonempty measures");
  std::vector<double> x = a.atoms;
  std::vector<double> y = b.atoms;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() || j < y.size()) {
    double t;
    if (j == y.size() || (i < x.size() && x[i] <= y[j])) {
      t = x[i];
    } else {
      t = y[j];
    }
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

RadialAngularKs radial_angular_ks(const EmpiricalMeasure2D& mu, const RealCdf& radial_cdf, cplx center) {
  if (mu.atoms.empty()) throw ConfigError("radial/angular KS needs a nonempty measure");
  std::vector<double> r(mu.size());
  std::vector<double> theta(mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const cplx d = mu.atoms[k] - center;
    r[k] = std::abs(d);
    double t = std::arg(d);
    if (t <= -std::numbers::pi) t = std::numbers::pi;
    theta[k] = t;
  }
  const auto uniform_angle = [](double t) { return (t + std::numbers::pi) / (2.0 * std::numbers::pi); };
  return {ks_statistic(r, radial_cdf), ks_statistic(theta, uniform_angle)};
}

double second_moment(const EmpiricalMeasure2D& mu) {
  if (mu.atoms.empty()) return 0.0;
  double s = 0.0;
  for (const auto& z : mu.atoms) s += std::norm(z);
  return s / static_cast<double>(mu.size());
}

double fraction_within(const EmpiricalMeasure2D& mu, cplx center, double radius) {
  if (mu.atoms.empty()) return 0.0;
  std::size_t inside = 0;
  for (const auto& z : mu.atoms) {
    if (std::abs(z - center) <= radius) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(mu.size());
}

EmpiricalMeasure1D dilation_esd(const ComplexMatrix& a) {
  if (!a.is_square() || a.rows() == 0) throw ConfigError("dilation needs a non-empty square matrix");
  const double scale = 1.0 / std::sqrt(static_cast<double>(a.rows()));
  const auto s = singular_values(a * scale).values;
  EmpiricalMeasure1D out;
  out.atoms.reserve(2 * s.size());
  for (double x : s) out.atoms.push_back(x);
  for (double x : s) out.atoms.push_back(-x);
  return out;
}

}  // namespace esdlab
