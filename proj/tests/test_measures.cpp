#include <algorithm>
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

ComplexMatrix gaussian(std::size_t n, std::uint64_t seed, DistributionKind kind = DistributionKind::real_gaussian) {
  RngStream rng(seed, n);
  return build_iid_matrix(n, ScalarDistribution::of(kind), rng);
}

EmpiricalMeasure2D atoms(std::vector<cplx> a) { return EmpiricalMeasure2D{std::move(a)}; }

}  // namespace

TEST_CASE("eigenvalue ESD applies the 1/sqrt(n) normalisation") {
  const std::size_t n = 9;
  const auto mu = esd_eigen(ComplexMatrix::identity(n) * cplx(3.0));
  REQUIRE(mu.size() == n);
  for (auto z : mu.atoms) CHECK(std::abs(z - 1.0) < 1e-13);
  for (auto z : esd_eigen(ComplexMatrix(4, 4)).atoms) CHECK(std::abs(z) < 1e-15);
}

TEST_CASE("identity shift moves the cloud to (1, 0)") {
  const std::size_t n = 300;
  auto a = gaussian(n, 3, DistributionKind::bernoulli);
  a += ComplexMatrix::identity(n) * cplx(std::sqrt(double(n)));
  const auto mu = esd_eigen(a);
  cplx mean{};
  for (auto z : mu.atoms) mean += z;
  mean /= double(n);
  // The mean is tr(A) / n^{3/2}: 1 plus the diagonal noise.
  CHECK(std::abs(mean - trace(a) / std::pow(double(n), 1.5)) < 1e-10);
  CHECK(std::abs(mean - 1.0) < 0.05);
  CHECK(fraction_within(mu, 1.0, 1.1) > 0.97);
}

TEST_CASE("Gram ESD") {
  const auto one = esd_gram(ComplexMatrix(3, 3), 1.0);
  for (double x : one.atoms) CHECK(x == doctest::Approx(1.0));
  const auto two = esd_gram(ComplexMatrix::diagonal(std::vector<double>{2 * std::sqrt(2.0), 0.0}), 0.0);
  CHECK(two.atoms[0] == doctest::Approx(4.0));
  CHECK(two.atoms[1] == doctest::Approx(0.0));

  const std::size_t n = 60;
  const auto a = gaussian(n, 5, DistributionKind::complex_gaussian);
  const cplx z(0.3, -0.2);
  double m2 = 0.0;
  for (double x : esd_gram(a, z).atoms) m2 += x;
  const auto shifted_a = shifted(a * cplx(1 / std::sqrt(double(n))), z);
  CHECK(m2 / n == doctest::Approx(std::pow(hs_norm(shifted_a), 2) / n).epsilon(1e-10));
}

TEST_CASE("Gram ESD of a Gaussian matrix follows Marchenko-Pastur") {
  const auto g = esd_gram(gaussian(1000, 7), 0.0);
  CHECK(ks_statistic(g.atoms, mp_cdf) < 0.05);
}

TEST_CASE("characteristic function") {
  const auto mu = atoms({cplx(0.3, 1), cplx(-2, 0.5), 0.0});
  CHECK(std::abs(characteristic_function(mu, 0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(characteristic_function(atoms({1.0}), std::numbers::pi, 0) + 1.0) < 1e-15);
  for (double t : {0.0, 0.5, 2.0, -3.0}) {
    CHECK(std::abs(characteristic_function(atoms({1.0, -1.0}), t, 0) - std::cos(t)) < 1e-15);
    CHECK(std::abs(characteristic_function(mu, t, 1.3 * t)) <= 1.0 + 1e-15);
  }
}

TEST_CASE("Stieltjes-type transform g") {
  CHECK(stieltjes_g(atoms({0.0}), 2.0) == doctest::Approx(1.0));
  CHECK(std::abs(stieltjes_g(atoms({0.0}), cplx(0, 1))) < 1e-15);
  CHECK_THROWS_AS(stieltjes_g(atoms({cplx(1, 1)}), cplx(1, 1 + 1e-13)), SingularityError);
}

TEST_CASE("g is twice the real-direction derivative of the log potential") {
  const auto mu = esd_eigen(gaussian(40, 11));
  RngStream rng(1, 99);
  const double h = 1e-5;
  for (int k = 0; k < 20; ++k) {
    const cplx z(4 * rng.next_unit() - 2, 4 * rng.next_unit() - 2);
    const double fd = (log_potential(mu, z + h) - log_potential(mu, z - h)) / (2 * h);
    CHECK(std::abs(fd - 0.5 * stieltjes_g(mu, z)) < 1e-4);
  }
}

TEST_CASE("test function dictionary") {
  const TestFunctionDictionary dict;
  CHECK(dict.size() == 843);
  RngStream rng(2, 2);
  for (int k = 0; k < 2000; ++k) {
    const auto i = rng.next_u64() % dict.size();
    const cplx z(8 * rng.next_unit() - 4, 8 * rng.next_unit() - 4);
    const cplx w = z + cplx(0.1 * rng.next_unit() - 0.05, 0.1 * rng.next_unit() - 0.05);
    const double fz = dict.evaluate(i, z), fw = dict.evaluate(i, w);
    CHECK(std::abs(fz) <= 1.0);
    CHECK(std::abs(fz - fw) <= std::abs(z - w) * (1 + 1e-12));
  }
  CHECK_THROWS_AS(TestFunctionDictionary(3.0, {2.0}), ConfigError);
}

TEST_CASE("bounded-Lipschitz distance") {
  const TestFunctionDictionary dict;
  const auto a = atoms({0.0});
  const auto b = atoms({0.1});
  const auto c = atoms({cplx(0.3, -0.2), cplx(1, 1)});
  CHECK(bl_distance(a, a, dict) == 0.0);
  CHECK(bl_distance(a, b, dict) <= 0.1);
  CHECK(bl_distance(a, b, dict) > 0.0);
  CHECK(bl_distance(a, c, dict) == bl_distance(c, a, dict));
  CHECK(bl_distance(a, c, dict) <= bl_distance(a, b, dict) + bl_distance(b, c, dict));
}

TEST_CASE("independent Gaussian ESDs are close in bounded-Lipschitz distance") {
  const TestFunctionDictionary dict;
  for (std::uint64_t t = 0; t < 2; ++t) {
    const auto a = esd_eigen(gaussian(1000, 100 + t));
    const auto b = esd_eigen(gaussian(1000, 200 + t));
    CHECK(bl_distance(a, b, dict) < 0.05);
  }
}

TEST_CASE("Kolmogorov-Smirnov statistics") {
  const std::vector<double> s{0.1, 0.5, 0.5, 0.9};
  const RealCdf uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  // Jumps: 0.1 -> 0.25, 0.5 -> 0.75 (tie), 0.9 -> 1.
  CHECK(ks_statistic(s, uniform) == doctest::Approx(0.25));
  EmpiricalMeasure1D x{{1, 2, 3}}, y{{1, 2, 3}}, z{{4, 5, 6}};
  CHECK(ks_distance(x, y) == 0.0);
  CHECK(ks_distance(x, z) == 1.0);
}

TEST_CASE("radial and angular KS") {
  const std::size_t n = 500;
  std::vector<cplx> q;
  for (std::size_t j = 1; j <= n; ++j) {
    q.push_back(std::polar(std::sqrt(double(j) / n), 2 * std::numbers::pi * double(j) / n - std::numbers::pi));
  }
  const auto r = radial_angular_ks(atoms(q), circular_radial_cdf);
  CHECK(r.radial <= 1.0 / n + 1e-12);
  CHECK(r.angular <= 1.0 / n + 1e-12);
  CHECK(radial_angular_ks(atoms({0.0}), circular_radial_cdf).radial == doctest::Approx(1.0));

  // Shifting both the atoms and the center changes nothing.
  std::vector<cplx> moved = q;
  for (auto& z : moved) z += 1.0;
  const auto s = radial_angular_ks(atoms(moved), circular_radial_cdf, 1.0);
  CHECK(s.radial == doctest::Approx(r.radial).epsilon(1e-9));
}

TEST_CASE("Bernoulli ESD against the circular law") {
  const auto mu = esd_eigen(gaussian(1000, 1, DistributionKind::bernoulli));
  CHECK(radial_angular_ks(mu, circular_radial_cdf).radial < 0.05);
}

TEST_CASE("second moment and in-disk fraction") {
  CHECK(second_moment(atoms({1.0})) == 1.0);
  CHECK(second_moment(atoms({0.0})) == 0.0);
  const double m = second_moment(esd_eigen(gaussian(1000, 5)));
  // Under the circular law E|lambda|^2 = 1/2.
  CHECK(std::abs(m - 0.5) < 0.05);
  CHECK(fraction_within(atoms({0.0, 2.0}), 0.0, 1.0) == 0.5);
}

TEST_CASE("Hermitian dilation") {
  const auto z = dilation_esd(ComplexMatrix(3, 3));
  REQUIRE(z.size() == 6);
  for (double x : z.atoms) CHECK(x == 0.0);
  const auto d = dilation_esd(ComplexMatrix(1, 1, {3.0}));
  REQUIRE(d.size() == 2);
  CHECK(d.atoms[0] == 3.0);
  CHECK(d.atoms[1] == -3.0);

  const std::size_t n = 20;
  const auto a = gaussian(n, 8, DistributionKind::complex_gaussian);
  const auto e = dilation_esd(a);
  const auto sv = singular_values(a).values;
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(e.atoms[i] == -e.atoms[n + i]);
    CHECK(e.atoms[i] == doctest::Approx(sv[i] / std::sqrt(double(n))));
  }
}
