#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "esdlab/ensembles.hpp"
#include "esdlab/error.hpp"
#include "esdlab/hermitization.hpp"
#include "esdlab/limits.hpp"
#include "esdlab/measures.hpp"
#include "esdlab/numerics.hpp"

using namespace esdlab;

namespace {

constexpr double pi = std::numbers::pi;

ComplexMatrix gaussian(std::size_t n, std::uint64_t seed, DistributionKind kind = DistributionKind::real_gaussian) {
  RngStream rng(seed, n);
  return build_iid_matrix(n, ScalarDistribution::of(kind), rng);
}

// (1/2) int log(x + eps) dMP(x), with x = 4 sin^2 t turning the density
// into (4 / pi) cos^2 t dt on [0, pi / 2].
double mp_regularized_oracle(double eps) {
  const int k = 200000;
  const double h = (pi / 2) / k;
  double s = 0.0;
  for (int i = 0; i < k; ++i) {
    const double t = (i + 0.5) * h;
    s += std::log(4 * std::sin(t) * std::sin(t) + eps) * (4 / pi) * std::cos(t) * std::cos(t) * h;
  }
  return 0.5 * s;
}

// Adaptive Simpson on [a, b].
template <class F>
cplx simpson(F f, double a, double b, double tol, int depth = 40) {
  const double m = 0.5 * (a + b);
  const cplx fa = f(a), fb = f(b), fm = f(m);
  const auto rec = [&](auto&& self, double lo, double hi, cplx flo, cplx fmid, cplx fhi, cplx whole, double eps,
                       int d) -> cplx {
    const double mid = 0.5 * (lo + hi);
    const double l = 0.5 * (lo + mid), r = 0.5 * (mid + hi);
    const cplx fl = f(l), fr = f(r);
    const cplx left = (mid - lo) / 6 * (flo + 4.0 * fl + fmid);
    const cplx right = (hi - mid) / 6 * (fmid + 4.0 * fr + fhi);
    if (d <= 0 || std::abs(left + right - whole) <= 15 * eps) return left + right + (left + right - whole) / 15.0;
    return self(self, lo, mid, flo, fl, fmid, left, eps / 2, d - 1) +
           self(self, mid, hi, fmid, fr, fhi, right, eps / 2, d - 1);
  };
  return rec(rec, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4.0 * fm + fb), tol, depth);
}

}  // namespace

TEST_CASE("lattice layout") {
  LatticeSpec g{cplx(1, -1), 1.0, 0.5};
  g.validate();
  CHECK(g.per_axis() == 4);
  const auto p = g.points();
  REQUIRE(p.size() == 16);
  CHECK(std::abs(p[0] - cplx(0.25, -1.75)) < 1e-15);
  CHECK(std::abs(p[1] - cplx(0.75, -1.75)) < 1e-15);
  CHECK(std::abs(p[4] - cplx(0.25, -1.25)) < 1e-15);
  CHECK_THROWS_AS((LatticeSpec{0.0, 1.0, 0.3}.validate()), ConfigError);
  CHECK_THROWS_AS((LatticeSpec{0.0, -1.0, 0.5}.validate()), ConfigError);
}

TEST_CASE("log-determinant field of a scaled identity is log|z0 - z|") {
  const std::size_t n = 16;
  const cplx z0(0.4, -0.3);
  const auto a = ComplexMatrix::identity(n) * (std::sqrt(double(n)) * z0);
  const auto field = log_det_field(a, LatticeSpec{0.0, 2.0, 0.25}, 2);
  const auto pts = field.grid.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(field.values[i].value() == doctest::Approx(std::log(std::abs(z0 - pts[i]))).epsilon(1e-13));
  }
  const cplx two = 2.0;
  CHECK(log_det_values(ComplexMatrix(5, 5), std::span<const cplx>(&two, 1))[0].value() ==
        doctest::Approx(std::log(2.0)));
  const cplx at = z0;
  CHECK(log_det_values(a, std::span<const cplx>(&at, 1))[0].is_minus_infinity());
}

TEST_CASE("field values do not depend on the worker count") {
  const auto a = gaussian(30, 2, DistributionKind::complex_gaussian);
  const LatticeSpec g{0.0, 1.5, 0.5};
  const auto one = log_det_field(a, g, 1);
  const auto three = log_det_field(a, g, 3);
  for (std::size_t i = 0; i < one.values.size(); ++i) CHECK(one.values[i].value() == three.values[i].value());
}

TEST_CASE("far-field bound") {
  const std::size_t n = 40;
  const auto a = gaussian(n, 6);
  const double norm = singular_values(a).values.front() / std::sqrt(double(n));
  for (cplx z : {cplx(3 * norm, 0), cplx(0, -4 * norm), std::polar(2.5 * norm, 1.0)}) {
    const double f = log_det_values(a, std::span<const cplx>(&z, 1))[0].value();
    CHECK(f >= std::log(std::abs(z) - norm));
    CHECK(std::abs(f - std::log(std::abs(z))) <= norm / (std::abs(z) - norm));
  }
}

TEST_CASE("hermitization: log|det| equals half the mean log of the Gram ESD") {
  const std::size_t n = 50;
  const auto a = gaussian(n, 9, DistributionKind::complex_gaussian);
  for (cplx z : {cplx(0.1, 0.2), cplx(-0.7, 0.0), cplx(1.5, -1.0)}) {
    double s = 0.0;
    for (double x : esd_gram(a, z).atoms) s += std::log(x);
    const double f = log_det_values(a, std::span<const cplx>(&z, 1))[0].value();
    CHECK(f == doctest::Approx(0.5 * s / n).epsilon(1e-10));
  }
}

TEST_CASE("Gaussian log-determinant at the origin follows the circular law") {
  const std::size_t n = 1000;
  const auto a = gaussian(n, 1);
  const auto r = shifted_log_det(a, 0.0, default_regularization(n));
  CHECK(std::abs(r.value.value() - circular_log_potential(0.0)) < 0.05);
  // The regularized value tracks the MP-regularized oracle instead.
  CHECK(std::abs(r.regularized - mp_regularized_oracle(default_regularization(n))) < 0.02);
}

TEST_CASE("regularized log-determinant") {
  CHECK(regularized_log_det(ComplexMatrix(3, 3), 0.0, std::exp(2.0)) == doctest::Approx(1.0).epsilon(1e-14));
  const auto a = gaussian(20, 4, DistributionKind::complex_gaussian);
  const cplx z(0.2, 0.1);
  const double f = log_det_values(a, std::span<const cplx>(&z, 1))[0].value();
  double prev = regularized_log_det(a, z, 1e-2);
  CHECK(prev >= f);
  for (double eps : {1e-4, 1e-6, 1e-9, 1e-12}) {
    const double r = regularized_log_det(a, z, eps);
    CHECK(r <= prev);
    CHECK(r >= f);
    prev = r;
  }
  CHECK(std::abs(prev - f) < 1e-6);
  CHECK(default_regularization(1000) == doctest::Approx(std::pow(1000.0, -0.1)));
}

TEST_CASE("log potential") {
  CHECK(log_potential(EmpiricalMeasure2D{{0.0}}, std::numbers::e) == doctest::Approx(1.0));
  CHECK(log_potential(EmpiricalMeasure2D{{1.0, -1.0}}, 0.0) == 0.0);
  CHECK_THROWS_AS(log_potential(EmpiricalMeasure2D{{1.0}}, 1.0), SingularityError);
}

TEST_CASE("Dozier-Silverstein log potential of an iid matrix") {
  // With M = 0 the Gram limit is delta_{|z|^2}, giving the circular law.
  const ComplexMatrix zero(8, 8);
  for (cplx z : {cplx(0.0), cplx(0.5, 0.5), cplx(2.0)}) {
    CHECK(ds_log_potential(zero, z) == doctest::Approx(circular_log_potential(z)).epsilon(1e-6));
  }
}

TEST_CASE("Girko kernel closed form") {
  CHECK(std::abs(girko_kernel(0.0, 1.0, 0.0, 1.0) - pi * std::exp(-1.0)) < 1e-15);
  const cplx w(0.3, -0.4);
  for (double d : {0.5, 1.7}) {
    const cplx p = girko_kernel(w, w.real() + d, 0.0, 1.2);
    const cplx m = girko_kernel(w, w.real() - d, 0.0, 1.2);
    CHECK(std::abs(p + m) < 1e-15);
    CHECK(std::abs(std::abs(girko_kernel(w, w.real() + d, 0.8, 1.2)) - std::abs(girko_kernel(w, w.real() - d, 0.8, 1.2))) <
          1e-15);
  }
  CHECK_THROWS_AS(girko_kernel(w, w.real(), 1.0, 1.0), SingularityError);
  CHECK_THROWS_AS(girko_kernel(w, 2.0, 1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(girko_kernel(w, 2.0, 1.0, -1.0), ConfigError);
}

TEST_CASE("Girko kernel against t-quadrature") {
  const cplx w(1, 1);
  const double s = 2, u = 1, v = 1;
  const auto integrand = [&](double t) {
    const cplx d = cplx(s, t) - w;
    return (d / std::norm(d)).real() * std::exp(cplx(0, u * s + v * t));
  };
  const cplx q = simpson(integrand, -50.0, 50.0, 1e-9);
  CHECK(std::abs(q - girko_kernel(w, s, u, v)) < 1e-3);
}

TEST_CASE("Girko reconstruction of characteristic functions") {
  const EmpiricalMeasure2D d0{{0.0}};
  CHECK(std::abs(girko_reconstruct(d0, 1, 1) - 1.0) < 1e-3);
  const EmpiricalMeasure2D d1{{cplx(1, 1)}};
  CHECK(std::abs(girko_reconstruct(d1, 1, 2) - std::exp(cplx(0, 3))) < 1e-3);

  const ComplexMatrix m(4, 4, {1.0, cplx(0, 1), 0.5, -1.0, 0.0, -1.0, cplx(1, -0.5), 0.3, 2.0, 0.0, 0.5, cplx(0, 1),
                               -0.5, 1.0, 0.0, cplx(1, 1)});
  const auto mu = esd_eigen(m);
  for (auto [u, v] : {std::pair{1.0, 1.0}, {1.0, 2.0}, {2.0, 1.0}}) {
    CHECK(std::abs(girko_reconstruct(mu, u, v) - characteristic_function(mu, u, v)) < 1e-3);
  }
  CHECK_THROWS_AS(girko_reconstruct(d0, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(girko_reconstruct(d0, 1.0, -1.0), ConfigError);
  GirkoQuadrature coarse;
  coarse.coarse_step = 2.0;
  coarse.tolerance = 1e-12;
  CHECK_THROWS_AS(girko_reconstruct(EmpiricalMeasure2D{{cplx(0.3, 0.2), -0.6}}, 3.0, 1.0, coarse), NumericalFailure);
}
