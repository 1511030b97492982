#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "esdlab/ensembles.hpp"
#include "esdlab/error.hpp"
#include "esdlab/numerics.hpp"

using namespace esdlab;

namespace {

using lcplx = std::complex<long double>;

ComplexMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            DistributionKind kind = DistributionKind::complex_gaussian) {
  RngStream rng(seed, rows * 1000 + cols);
  const auto dist = ScalarDistribution::of(kind);
  std::vector<cplx> e(rows * cols);
  for (auto& x : e) x = sample_scalar(dist, rng);
  return ComplexMatrix(rows, cols, std::move(e));
}

// Characteristic polynomial by Faddeev-LeVerrier: coefficients of
// det(lambda I - A), leading coefficient first.
std::vector<lcplx> charpoly(const ComplexMatrix& a) {
  const std::size_t n = a.rows();
  std::vector<lcplx> c(n + 1);
  c[0] = 1;
  std::vector<lcplx> m(n * n, 0), am(n * n);
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t i = 0; i < n; ++i) m[i * n + i] += c[k - 1];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        lcplx s = 0;
        for (std::size_t l = 0; l < n; ++l) s += lcplx(a(i, l)) * m[l * n + j];
        am[i * n + j] = s;
      }
    }
    lcplx tr = 0;
    for (std::size_t i = 0; i < n; ++i) tr += am[i * n + i];
    c[k] = -tr / static_cast<long double>(k);
    m = am;
  }
  return c;
}

// Durand-Kerner roots of a monic polynomial.
std::vector<lcplx> poly_roots(const std::vector<lcplx>& c) {
  const std::size_t n = c.size() - 1;
  auto eval = [&](lcplx x) {
    lcplx v = 0;
    for (const auto& k : c) v = v * x + k;
    return v;
  };
  std::vector<lcplx> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = std::pow(lcplx(0.4L, 0.9L), static_cast<long double>(i)) * 2.0L;
  for (int it = 0; it < 5000; ++it) {
    long double moved = 0;
    for (std::size_t i = 0; i < n; ++i) {
      lcplx d = 1;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) d *= r[i] - r[j];
      }
      const lcplx step = eval(r[i]) / d;
      r[i] -= step;
      moved = std::max(moved, std::abs(step));
    }
    if (moved < 1e-16L) break;
  }
  return r;
}

double spectral_norm(const ComplexMatrix& a) { return singular_values(a).values.front(); }

ComplexMatrix random_unitary(std::size_t n, std::uint64_t seed) {
  // Gram-Schmidt with reorthogonalization on the rows of a Gaussian matrix.
  auto g = random_matrix(n, n, seed);
  ComplexMatrix u(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<cplx> r(g.row(i).begin(), g.row(i).end());
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < i; ++k) {
        cplx c{};
        for (std::size_t j = 0; j < n; ++j) c += std::conj(u(k, j)) * r[j];
        for (std::size_t j = 0; j < n; ++j) r[j] -= c * u(k, j);
      }
    }
    double s = 0;
    for (auto& x : r) s += std::norm(x);
    s = std::sqrt(s);
    for (std::size_t j = 0; j < n; ++j) u(i, j) = r[j] / s;
  }
  return u;
}

}  // namespace

TEST_CASE("eigenvalues of small closed-form matrices") {
  auto id = eigenvalues(ComplexMatrix::identity(3)).values;
  REQUIRE(id.size() == 3);
  for (auto l : id) CHECK(std::abs(l - 1.0) < 1e-14);

  const ComplexMatrix rot(2, 2, {0.0, 1.0, -1.0, 0.0});
  auto r = eigenvalues(rot).values;
  std::sort(r.begin(), r.end(), [](cplx a, cplx b) { return a.imag() < b.imag(); });
  CHECK(std::abs(r[0] - cplx(0, -1)) < 1e-14);
  CHECK(std::abs(r[1] - cplx(0, 1)) < 1e-14);
  CHECK_THROWS_AS(eigenvalues(ComplexMatrix(2, 3)), ConfigError);
}

TEST_CASE("eigenvalues agree with the characteristic polynomial roots") {
  for (std::size_t n = 2; n <= 8; ++n) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      for (auto kind : {DistributionKind::complex_gaussian, DistributionKind::real_gaussian}) {
        const auto a = random_matrix(n, n, seed, kind);
        auto got = eigenvalues(a).values;
        auto oracle = poly_roots(charpoly(a));
        const double tol = 1e-6 * (1.0 + spectral_norm(a));
        // Greedy nearest pairing.
        double worst = 0.0;
        for (const auto& o : oracle) {
          auto it = std::min_element(got.begin(), got.end(), [&](cplx x, cplx y) {
            return std::abs(lcplx(x) - o) < std::abs(lcplx(y) - o);
          });
          worst = std::max(worst, static_cast<double>(std::abs(lcplx(*it) - o)));
          got.erase(it);
        }
        CAPTURE(n);
        CAPTURE(seed);
        CHECK(worst < tol);
      }
    }
  }
}

TEST_CASE("eigenvalue sum and product match trace and determinant") {
  const auto a = random_matrix(40, 40, 3);
  const auto ev = eigenvalues(a).values;
  cplx sum{};
  double logprod = 0.0;
  for (auto l : ev) {
    sum += l;
    logprod += std::log(std::abs(l));
  }
  CHECK(std::abs(sum - trace(a)) <= 1e-8 * std::max(1.0, std::abs(trace(a))) * 40);
  CHECK(std::abs(std::expm1(logprod - log_abs_det(a).value())) < 1e-6);
}

TEST_CASE("real input takes the double-shift path and returns conjugate pairs") {
  const auto a = random_matrix(30, 30, 9, DistributionKind::real_gaussian);
  auto ev = eigenvalues(a).values;
  double im_sum = 0.0;
  for (auto l : ev) im_sum += l.imag();
  CHECK(std::abs(im_sum) < 1e-10);
}

TEST_CASE("singular values of small closed-form matrices") {
  const auto d = singular_values(ComplexMatrix::diagonal(std::vector<double>{3.0, -4.0})).values;
  CHECK(d[0] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(d[1] == doctest::Approx(3.0).epsilon(1e-15));
  const ComplexMatrix j(2, 2, {1.0, 1.0, 0.0, 1.0});
  const auto s = singular_values(j).values;
  CHECK(s[0] == doctest::Approx(std::sqrt((3 + std::sqrt(5.0)) / 2)).epsilon(1e-14));
  CHECK(s[1] == doctest::Approx(std::sqrt((3 - std::sqrt(5.0)) / 2)).epsilon(1e-14));
  CHECK(singular_values(ComplexMatrix(0, 3)).values.empty());
}

TEST_CASE("singular values: energy, determinant, orientation and shape") {
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{7, 7}, {4, 9}, {9, 4}, {150, 150}, {140, 200}}) {
    const auto a = random_matrix(r, c, 17);
    const auto s = singular_values(a).values;
    REQUIRE(s.size() == std::min(r, c));
    CHECK(std::is_sorted(s.rbegin(), s.rend()));
    double e = 0.0;
    for (double x : s) e += x * x;
    CHECK(e == doctest::Approx(std::pow(hs_norm(a), 2)).epsilon(1e-10));
    const auto t = singular_values(a.adjoint()).values;
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s[i] - t[i]) <= 1e-10 * s[0]);
    if (r == c) {
      double ls = 0.0;
      for (double x : s) ls += std::log(x);
      CHECK(std::abs(std::expm1(ls - log_abs_det(a, LogDetMethod::via_distances).value())) < 1e-8);
    }
  }
}

TEST_CASE("Jacobi and Gram routes agree across the size switch") {
  const auto a = random_matrix(128, 128, 5);
  const auto s = singular_values(a).values;
  auto g = gram_eigenvalues(a);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s[i] - std::sqrt(g[i])) <= 1e-8 * s[0]);
}

TEST_CASE("small singular values keep relative accuracy") {
  // A 1e-12 singular value in a random basis: the Gram route cannot see it.
  const auto u = random_unitary(6, 1), v = random_unitary(6, 2);
  const auto d = ComplexMatrix::diagonal(std::vector<double>{5, 4, 3, 2, 1, 1e-12});
  const auto s = singular_values(u * d * v).values;
  CHECK(s[5] == doctest::Approx(1e-12).epsilon(1e-3));
}

TEST_CASE("singular values are unitarily invariant") {
  const std::size_t n = 12;
  const auto a = random_matrix(n, n, 21);
  const auto s = singular_values(a).values;
  const auto t = singular_values(random_unitary(n, 3) * a * random_unitary(n, 4)).values;
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(s[i] - t[i]) <= 1e-8 * s[i]);
}

TEST_CASE("row distances") {
  const auto d = row_distances(ComplexMatrix::diagonal(std::vector<double>{3.0, 4.0}));
  CHECK(d[0] == doctest::Approx(3.0));
  CHECK(d[1] == doctest::Approx(4.0));
  const ComplexMatrix j(2, 2, {1.0, 1.0, 0.0, 1.0});
  const auto e = row_distances(j);
  CHECK(e[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(e[1] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(e[0] * e[1] == doctest::Approx(1.0).epsilon(1e-15));

  const auto a = random_matrix(5, 5, 2);
  double ld = 0.0, ls = 0.0;
  for (double x : row_distances(a)) ld += std::log(x);
  for (double x : singular_values(a).values) ls += std::log(x);
  CHECK(std::abs(std::expm1(ld - ls)) < 1e-8);

  // A rank-deficient prefix gives a distance near zero, not an error.
  const ComplexMatrix dup(3, 3, {1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0});
  CHECK(row_distances(dup)[1] < 1e-12);
}

TEST_CASE("orthonormal basis distances") {
  OrthonormalRows b(3);
  const std::vector<cplx> e1{1.0, 0.0, 0.0}, v{3.0, 4.0, 0.0};
  CHECK(b.add(e1) == doctest::Approx(1.0));
  CHECK(b.distance(v) == doctest::Approx(4.0));
  CHECK(b.add(e1) < 1e-14);
  CHECK(b.size() == 1);
  CHECK_THROWS_AS(b.distance(std::vector<cplx>{1.0}), ConfigError);
}

TEST_CASE("negative second moment identity") {
  const auto d = leave_one_out_distances(ComplexMatrix::diagonal(std::vector<double>{1.0, 2.0}));
  CHECK(d[0] == doctest::Approx(1.0));
  CHECK(d[1] == doctest::Approx(2.0));
  const ComplexMatrix j(2, 2, {1.0, 1.0, 0.0, 1.0});
  const auto e = leave_one_out_distances(j);
  CHECK(e[0] == doctest::Approx(1.0));
  CHECK(e[1] == doctest::Approx(1 / std::sqrt(2.0)));
  double lhs = 0.0, rhs = 0.0;
  for (double s : singular_values(j).values) lhs += 1 / (s * s);
  for (double x : e) rhs += 1 / (x * x);
  CHECK(lhs == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(rhs == doctest::Approx(3.0).epsilon(1e-14));

  const auto a = random_matrix(4, 7, 13);
  lhs = rhs = 0.0;
  for (double s : singular_values(a).values) lhs += 1 / (s * s);
  for (double x : leave_one_out_distances(a)) rhs += 1 / (x * x);
  CHECK(std::abs(lhs - rhs) / lhs < 1e-9);

  const ComplexMatrix rank1(2, 3, {1.0, 2.0, 3.0, 2.0, 4.0, 6.0});
  CHECK_THROWS_AS(leave_one_out_distances(rank1), DegenerateError);
  CHECK_THROWS_AS(leave_one_out_distances(random_matrix(5, 3, 1)), ConfigError);
}

TEST_CASE("log determinants") {
  CHECK(log_abs_det(ComplexMatrix::identity(4)).value() == doctest::Approx(0.0));
  const auto d = ComplexMatrix::diagonal(std::vector<double>{std::numbers::e, std::exp(2.0)});
  CHECK(log_abs_det(d).value() == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(log_abs_det(d, LogDetMethod::via_distances).value() == doctest::Approx(3.0).epsilon(1e-14));
  const auto a = random_matrix(10, 10, 8);
  CHECK(std::abs(log_abs_det(a).value() - log_abs_det(a, LogDetMethod::via_distances).value()) < 1e-6);

  const auto z = log_abs_det(ComplexMatrix(3, 3));
  CHECK(z.is_minus_infinity());
  CHECK_THROWS_AS(z.value(), std::logic_error);
  const ComplexMatrix sing(2, 2, {1.0, 1.0, 1.0, 1.0});
  CHECK(log_abs_det(sing).is_minus_infinity());
  CHECK(sum_of_logs(std::vector<double>{}).value() == 0.0);
}

TEST_CASE("Hilbert-Schmidt norm") {
  const ComplexMatrix a(2, 2, {cplx(1, 1), 2.0, 0.0, cplx(0, -3)});
  CHECK(hs_norm(a) == doctest::Approx(std::sqrt(15.0)));
  CHECK(hs_norm(a) == doctest::Approx(std::sqrt(trace(a * a.adjoint()).real())));
}

TEST_CASE("interlacing") {
  const auto d = ComplexMatrix::diagonal(std::vector<double>{1.0, 2.0, 3.0});
  const auto rep = verify_interlacing(d, 1);
  CHECK(rep.passed());
  CHECK(rep.checks == 4);

  const auto a = random_matrix(6, 6, 4);
  CHECK(verify_interlacing(a, 5).passed());
  double r = 0.0;
  for (auto x : a.row(0)) r += std::norm(x);
  CHECK(singular_values(a.row_block(0, 1)).values[0] == doctest::Approx(std::sqrt(r)));

  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    violations += verify_interlacing(random_matrix(8, 8, 100 + seed), 1 + seed % 3).violations;
  }
  CHECK(violations == 0);
  CHECK_THROWS_AS(verify_interlacing(a, 0), ConfigError);
  CHECK_THROWS_AS(verify_interlacing(random_matrix(3, 4, 1), 1), ConfigError);
}

TEST_CASE("Weyl comparison") {
  // Unitary diagonal phases are normal: equality in the second moment bound.
  std::vector<cplx> phases;
  for (int k = 0; k < 5; ++k) phases.push_back(std::polar(1.0, 0.7 * k));
  const auto u = random_unitary(5, 7);
  const auto normal = verify_weyl(u * ComplexMatrix::diagonal(phases) * u.adjoint());
  CHECK(normal.second_moment.passed());
  CHECK(std::abs(normal.second_moment_gap) < 1e-10);
  CHECK(normal.products.passed());

  const ComplexMatrix nil(2, 2, {0.0, 1.0, 0.0, 0.0});
  const auto n = verify_weyl(nil);
  CHECK(n.second_moment.passed());
  CHECK(n.second_moment_gap == doctest::Approx(1.0));
  CHECK(n.products.passed());

  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto w = verify_weyl(random_matrix(10, 10, 500 + seed));
    violations += w.second_moment.violations + w.products.violations;
  }
  CHECK(violations == 0);

  // Singular with a two-long Jordan chain at zero.
  const ComplexMatrix chain(3, 3, {0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0});
  CHECK(verify_weyl(chain).products.passed());
}
