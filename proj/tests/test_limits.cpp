#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "esdlab/error.hpp"
#include "esdlab/limits.hpp"

using namespace esdlab;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> grid(double a, double b, std::size_t points) {
  std::vector<double> x(points);
  for (std::size_t i = 0; i < points; ++i) x[i] = a + (b - a) * double(i) / double(points - 1);
  return x;
}

// Mean of f over the unit disk around `center` by a polar midpoint rule.
template <class F>
double disk_average(F f, cplx center, std::size_t nr = 400, std::size_t nt = 400) {
  double s = 0.0;
  for (std::size_t i = 0; i < nr; ++i) {
    const double r = (i + 0.5) / nr;
    for (std::size_t j = 0; j < nt; ++j) s += f(center + std::polar(r, 2 * pi * (j + 0.5) / nt)) * r;
  }
  return s * 2.0 / double(nr * nt);
}

}  // namespace

TEST_CASE("circular law density") {
  CHECK(circular_density(0.0) == doctest::Approx(1 / pi));
  CHECK(circular_density(2.0) == 0.0);
  CHECK(circular_density(1.0) == 0.0);
  const double h = 1.0 / 200;
  double mass = 0.0;
  for (int i = 0; i < 800; ++i) {
    for (int j = 0; j < 800; ++j) mass += circular_density(cplx(-2 + (i + 0.5) * h, -2 + (j + 0.5) * h)) * h * h;
  }
  CHECK(std::abs(mass - 1.0) < 0.01);
}

TEST_CASE("circular law log potential") {
  // Radial quadrature of int_0^1 2 r log r dr.
  double s = 0.0;
  const int m = 200000;
  for (int i = 0; i < m; ++i) {
    const double r = (i + 0.5) / m;
    s += 2 * r * std::log(r) / m;
  }
  CHECK(circular_log_potential(0.0) == doctest::Approx(s).epsilon(1e-6));
  CHECK(circular_log_potential(0.0) == -0.5);

  // Outside the disk the potential is the mean of log|w - z| over the disk,
  // which by the mean-value property is log|z|.
  const cplx z(0.0, 2.0);
  const double avg = disk_average([&](cplx w) { return std::log(std::abs(w - z)); }, 0.0);
  CHECK(circular_log_potential(z) == doctest::Approx(avg).epsilon(1e-4));
  CHECK(circular_log_potential(-2.0) == doctest::Approx(std::log(2.0)));

  // Continuity across |z| = 1 and harmonicity outside.
  CHECK(std::abs(circular_log_potential(std::polar(1.0, 0.3))) < 1e-15);
  CHECK(std::abs(circular_log_potential(std::polar(1 - 1e-9, 0.3))) < 1e-8);
  const double h = 1e-3;
  const cplx p = std::polar(2.0, 0.8);
  const double lap = (circular_log_potential(p + h) + circular_log_potential(p - h) +
                      circular_log_potential(p + cplx(0, h)) + circular_log_potential(p - cplx(0, h)) -
                      4 * circular_log_potential(p)) /
                     (h * h);
  CHECK(std::abs(lap) < 1e-4);
  CHECK(circular_radial_cdf(0.5) == 0.25);
  CHECK(circular_radial_cdf(2.0) == 1.0);
  CHECK(circular_radial_cdf(-1.0) == 0.0);
}

TEST_CASE("Marchenko-Pastur closed forms") {
  const cplx m = mp_reference(cplx(-1, 1e-12));
  CHECK(m.real() == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-9));
  CHECK(mp_density(2.0) == doctest::Approx(1 / (2 * pi)));
  CHECK(mp_density(5.0) == 0.0);
  CHECK(mp_density(0.0) == 0.0);
  for (cplx w : {cplx(0.5, 1e-3), cplx(3.9, 0.2), cplx(-2, 1), cplx(7, 1e-6)}) {
    const cplx r = mp_reference(w);
    CHECK(r.imag() > 0.0);
    CHECK(std::abs(w * r * r + w * r + 1.0) < 1e-12 * (1 + std::abs(w) * std::norm(r)));
  }
  // CDF against midpoint quadrature of the density, substituting x = 4 sin^2 t.
  for (double x : {0.3, 1.0, 2.5, 3.99}) {
    const double top = std::asin(std::sqrt(x) / 2);
    double s = 0.0;
    const int k = 20000;
    for (int i = 0; i < k; ++i) {
      const double t = (i + 0.5) * top / k;
      s += (4 / pi) * std::cos(t) * std::cos(t) * top / k;
    }
    CHECK(mp_cdf(x) == doctest::Approx(s).epsilon(1e-8));
  }
  CHECK(mp_cdf(-1) == 0.0);
  CHECK(mp_cdf(4) == doctest::Approx(1.0));
}

TEST_CASE("Dozier-Silverstein solver on closed-form cases") {
  const auto d0 = MeasureH::point(0.0);
  const auto s = solve_ds(d0, 1.0, cplx(-1, 1e-9));
  CHECK(s.m.real() == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-8));
  CHECK(s.residual < 1e-10);
  const auto t = solve_ds(d0, 1.0, cplx(2, 1e-6));
  CHECK(t.m.imag() == doctest::Approx(0.5).epsilon(1e-5));

  // c -> 0: m = int dH(t) / (t + 1 - w).
  const cplx w(0.7, 0.4);
  const auto u = solve_ds(MeasureH::point(2.0), 1e-9, w);
  CHECK(std::abs(u.m - 1.0 / (3.0 - w)) < 1e-7);
}

TEST_CASE("solver matches the quadratic oracle on a 50-point line") {
  for (double x : grid(0.05, 4.5, 50)) {
    const cplx w(x, 1e-3);
    const auto s = solve_ds(MeasureH::point(0.0), 1.0, w);
    CAPTURE(x);
    CHECK(std::abs(s.m - mp_reference(w)) < 1e-8);
    CHECK(s.m.imag() > 0.0);
    CHECK(std::abs(s.m - ds_rhs(MeasureH::point(0.0), 1.0, w, s.m)) <= 1e-10 * std::abs(s.m));
  }
}

TEST_CASE("solver depends on H only through the measure") {
  const MeasureH split{{1.0, 1.0, 3.0}, {0.25, 0.25, 0.5}};
  const MeasureH merged{{1.0, 3.0}, {0.5, 0.5}};
  const auto m = split.merged();
  REQUIRE(m.atoms.size() == 2);
  for (cplx w : {cplx(1.5, 0.01), cplx(5, 0.1), cplx(0.2, 1)}) {
    const auto a = solve_ds(split, 0.7, w);
    const auto b = solve_ds(merged, 0.7, w);
    CHECK(std::abs(a.m - b.m) < 1e-12 * std::abs(b.m) + 1e-12);
  }
}

TEST_CASE("solver input validation and uniqueness probe") {
  const auto d0 = MeasureH::point(0.0);
  CHECK_THROWS_AS(solve_ds(d0, 1.0, cplx(1, 0)), ConfigError);
  CHECK_THROWS_AS(solve_ds(d0, 0.0, cplx(1, 1)), ConfigError);
  CHECK_THROWS_AS(solve_ds(MeasureH{{-1.0}, {1.0}}, 1.0, cplx(1, 1)), ConfigError);
  CHECK_THROWS_AS(solve_ds(MeasureH{{1.0}, {0.5}}, 1.0, cplx(1, 1)), ConfigError);
  DsOptions opt;
  opt.probe_uniqueness = true;
  const auto s = solve_ds(MeasureH{{0.5, 2.0}, {0.3, 0.7}}, 1.0, cplx(1.2, 1e-2), opt);
  CHECK(s.other_fixed_points.empty());
  // A tiny iteration budget is rescued by the Newton polish.
  opt.max_iterations = 2;
  opt.probe_uniqueness = false;
  const auto p = solve_ds(d0, 1.0, cplx(2, 1e-3), opt);
  CHECK(std::abs(p.m - mp_reference(cplx(2, 1e-3))) < 1e-8);
}

TEST_CASE("Stieltjes inversion recovers the Marchenko-Pastur density") {
  const auto x = grid(0.0, 4.0, 1601);
  InversionOptions opt;
  opt.check_window = std::make_pair(0.5, 3.5);
  const auto sol = invert_stieltjes([](cplx w) { return solve_ds(MeasureH::point(0.0), 1.0, w).m; }, x, opt);
  REQUIRE(sol.levels.size() == 3);
  CHECK(sol.eta == 1e-3);
  double sup = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(sol.density[i] >= 0.0);
    if (x[i] >= 0.1 && x[i] <= 3.9) sup = std::max(sup, std::abs(sol.density[i] - mp_density(x[i])));
  }
  CHECK(sup < 1e-2);
  CHECK(std::abs(total_mass(sol) - 1.0) < 0.02);
  const auto cdf = recovered_cdf(sol);
  CHECK(cdf(-1.0) == 0.0);
  CHECK(cdf(10.0) == doctest::Approx(total_mass(sol)));
  CHECK(std::abs(cdf(2.0) - mp_cdf(2.0)) < 0.02);
}

TEST_CASE("Stieltjes inversion reports an unsettled schedule") {
  const auto x = grid(0.0, 4.0, 101);
  InversionOptions opt;
  opt.eta_schedule = {1.0, 0.5};
  CHECK_THROWS_AS(invert_stieltjes([](cplx w) { return mp_reference(w); }, x, opt), NumericalFailure);
  opt.eta_schedule = {0.1, 0.2};
  CHECK_THROWS_AS(invert_stieltjes([](cplx w) { return mp_reference(w); }, x, opt), ConfigError);
}

TEST_CASE("support criterion") {
  const EmpiricalMeasure2D d0{{0.0}};
  CHECK(support_criterion(d0, 0.5));
  CHECK(support_criterion(d0, cplx(0, 1)));
  CHECK_FALSE(support_criterion(d0, 2.0));
  CHECK_FALSE(support_criterion(EmpiricalMeasure2D{{0.0, 3.0}}, 1.5));
  CHECK_THROWS_AS(support_criterion(d0, 0.0), SingularityError);
}

TEST_CASE("log moment of the Dozier-Silverstein limit") {
  // Marchenko-Pastur: int log x dMP = -1.
  CHECK(ds_log_moment(MeasureH::point(0.0), 1.0) == doctest::Approx(-1.0).epsilon(1e-6));
  // With M = 0 the Gram limit at shift z is H = delta_{|z|^2}, and half the
  // log moment is the circular-law log potential at z.
  CHECK(ds_log_moment(MeasureH::point(0.25), 1.0) == doctest::Approx(2 * circular_log_potential(0.5)).epsilon(1e-6));
  CHECK(ds_log_moment(MeasureH::point(4.0), 1.0) == doctest::Approx(2 * circular_log_potential(2.0)).epsilon(1e-6));
  CHECK_THROWS_AS(ds_log_moment(MeasureH::point(1.0), 1.0, 0), ConfigError);
}
